//! LU factorization of complex banded matrices with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` band layout: `ldab = 2*kl + ku + 1`
//! rows per column, column-major, with the top `kl` rows reserved for the
//! fill produced by row interchanges. The 5-point fiber matrices have
//! half-bandwidth about `n1`, so factor cost is `O(n * n1^2)` and storage
//! `O(n * n1)` — this is what makes shift-invert cheap enough for sweeps.

use crate::error::{CoreError, Result};
use crate::sparse::CsrMatrix;
use num_complex::Complex64;

pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor a CSR matrix, detecting its bandwidths.
    pub fn factor(m: &CsrMatrix) -> Result<Self> {
        let (kl, ku) = m.bandwidths();
        let n = m.n;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![Complex64::new(0.0, 0.0); ldab * n];
        for r in 0..n {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                let c = m.col_idx[k];
                ab[c * ldab + (kl + ku + r - c)] = m.values[k];
            }
        }
        let mut lu = Self { n, kl, ku, ldab, ab, ipiv: vec![0; n] };
        lu.factor_in_place()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.ab[j * self.ldab + (self.kl + self.ku + i - j)]
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // rows of U above the diagonal after pivoting
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot search in column j: entries A(j..j+km, j)
            let base = j * ldab + kv;
            let mut p = 0;
            let mut best = self.ab[base].norm_sqr();
            for i in 1..=km {
                let v = self.ab[base + i].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(CoreError::SingularFactorization(j));
            }
            self.ipiv[j] = j + p;
            if p != 0 {
                // swap rows j and j+p across columns j..=min(j+kv, n-1)
                let cmax = (j + kv).min(n - 1);
                for c in j..=cmax {
                    let a = c * ldab + (kv + j - c);
                    let b = a + p;
                    self.ab.swap(a, b);
                }
            }
            let piv = self.ab[base];
            for i in 1..=km {
                self.ab[base + i] /= piv;
            }
            let cmax = (j + kv).min(n - 1);
            for c in (j + 1)..=cmax {
                let t = self.ab[c * ldab + (kv + j - c)];
                if t.re == 0.0 && t.im == 0.0 {
                    continue;
                }
                let coff = c * ldab + (kv + j - c);
                for i in 1..=km {
                    let m = self.ab[base + i];
                    self.ab[coff + i] -= m * t;
                }
            }
        }
        Ok(())
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        debug_assert_eq!(b.len(), self.n);
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        // L has unit diagonal; apply permutations and eliminations forward
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let base = j * ldab + kv;
            let bj = b[j];
            for i in 1..=km {
                b[j + i] -= self.ab[base + i] * bj;
            }
        }
        // back-substitution with U (bandwidth kv)
        for j in (0..n).rev() {
            let x = b[j] / self.at(j, j);
            b[j] = x;
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= self.ab[j * ldab + (kv + i - j)] * x;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dense Gaussian elimination with partial pivoting, for cross-checking.
    fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut m: Vec<Vec<Complex64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    let v = m[k][j];
                    m[i][j] -= f * v;
                }
                let v = x[k];
                x[i] -= f * v;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= m[k][j] * x[j];
            }
            x[k] = s / m[k][k];
        }
        x
    }

    #[test]
    fn random_banded_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(12usize, 2usize, 3usize), (30, 5, 1), (25, 4, 4)] {
            let mut trip = Vec::new();
            let mut dense = vec![vec![c(0.0, 0.0); n]; n];
            for i in 0..n {
                for j in 0..n {
                    if j + kl >= i && i + ku >= j {
                        let v = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                            + if i == j { c(4.0, 0.0) } else { c(0.0, 0.0) };
                        trip.push((i, j, v));
                        dense[i][j] = v;
                    }
                }
            }
            let m = CsrMatrix::from_triplets(n, &trip);
            let lu = BandedLu::factor(&m).unwrap();
            let b: Vec<Complex64> =
                (0..n).map(|_| c(rng.random::<f64>(), rng.random::<f64>())).collect();
            let mut x = b.clone();
            lu.solve(&mut x);
            let xd = dense_solve(&dense, &b);
            for k in 0..n {
                assert!((x[k] - xd[k]).norm() < 1e-10, "mismatch at {k}");
            }
            // residual
            let mut r = vec![c(0.0, 0.0); n];
            m.matvec(&x, &mut r);
            for k in 0..n {
                assert!((r[k] - b[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap
        let m = CsrMatrix::from_triplets(2, &[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]);
        let lu = BandedLu::factor(&m).unwrap();
        let mut b = vec![c(2.0, 0.0), c(3.0, 0.0)];
        lu.solve(&mut b);
        assert!((b[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!((b[1] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let m = CsrMatrix::from_triplets(
            2,
            &[(0, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 1, c(1.0, 0.0))],
        );
        assert!(matches!(BandedLu::factor(&m), Err(CoreError::SingularFactorization(_))));
    }
}
