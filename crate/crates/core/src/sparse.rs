//! Complex CSR matrices sized for 5-point stencils plus boundary folds.

use num_complex::Complex64;

/// Compressed sparse row matrix over `Complex64`.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from triplets, summing duplicates. Column indices are sorted
    /// within each row; the summation order is deterministic (insertion order
    /// within a row), so identical triplet streams give identical matrices.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let mut order = vec![0usize; triplets.len()];
        {
            let mut next = counts.clone();
            for (t, &(r, _, _)) in triplets.iter().enumerate() {
                order[next[r]] = t;
                next[r] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut cols: Vec<(usize, usize)> = Vec::new(); // (col, first triplet position)
        for r in 0..n {
            cols.clear();
            for &t in &order[counts[r]..counts[r + 1]] {
                cols.push((triplets[t].1, t));
            }
            cols.sort_by_key(|&(c, t)| (c, t));
            let mut k = 0;
            while k < cols.len() {
                let c = cols[k].0;
                let mut v = Complex64::new(0.0, 0.0);
                while k < cols.len() && cols[k].0 == c {
                    v += triplets[cols[k].1].2;
                    k += 1;
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.values[k];
            }
        }
        Complex64::new(0.0, 0.0)
    }

    /// Exact entrywise Hermiticity: `A[i][j] == conj(A[j][i])` with no tolerance.
    pub fn is_hermitian(&self) -> bool {
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if self.get(c, r) != self.values[k].conj() {
                    return false;
                }
            }
        }
        true
    }

    /// Half-bandwidths `(kl, ku)`: lower and upper distance of the farthest
    /// nonzero from the diagonal.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    /// New matrix `A - z I`.
    pub fn shifted(&self, z: Complex64) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..out.n {
            let mut found = false;
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                if out.col_idx[k] == r {
                    out.values[k] -= z;
                    found = true;
                    break;
                }
            }
            if !found {
                // stencil rows always carry a diagonal; rebuild if not
                let mut trip: Vec<(usize, usize, Complex64)> = self.to_triplets();
                trip.push((r, r, -z));
                return CsrMatrix::from_triplets(self.n, &trip).shifted_rest(z, r + 1);
            }
        }
        out
    }

    fn shifted_rest(mut self, z: Complex64, from: usize) -> CsrMatrix {
        for r in from..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    self.values[k] -= z;
                    break;
                }
            }
        }
        self
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((r, self.col_idx[k], self.values[k]));
            }
        }
        t
    }

    /// Gershgorin lower bound on eigenvalues (of the Hermitian part):
    /// `min_i (Re A[i][i] - sum_{j != i} |A[i][j]|)`.
    pub fn gershgorin_min(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for r in 0..self.n {
            let mut center = 0.0;
            let mut radius = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    center = self.values[k].re;
                } else {
                    radius += self.values[k].norm();
                }
            }
            lo = lo.min(center - radius);
        }
        lo
    }

    /// Largest entrywise difference `max |A - B|`; `None` when patterns differ
    /// in a way that cannot be compared (different sizes).
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> Option<f64> {
        if self.n != other.n {
            return None;
        }
        let mut m: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                m = m.max((self.values[k] - other.get(r, c)).norm());
            }
            for k in other.row_ptr[r]..other.row_ptr[r + 1] {
                let c = other.col_idx[k];
                m = m.max((other.values[k] - self.get(r, c)).norm());
            }
        }
        Some(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplet_duplicates_sum() {
        let m = CsrMatrix::from_triplets(
            2,
            &[(0, 0, c(1.0, 0.0)), (0, 0, c(2.0, 0.0)), (1, 0, c(0.0, 1.0))],
        );
        assert_eq!(m.get(0, 0), c(3.0, 0.0));
        assert_eq!(m.get(1, 0), c(0.0, 1.0));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn hermitian_check_is_exact() {
        let ph = Complex64::from_polar(1.0, 0.37);
        let h = CsrMatrix::from_triplets(
            2,
            &[(0, 1, ph), (1, 0, ph.conj()), (0, 0, c(2.0, 0.0)), (1, 1, c(3.0, 0.0))],
        );
        assert!(h.is_hermitian());
        let nh = CsrMatrix::from_triplets(2, &[(0, 1, ph), (1, 0, ph), (0, 0, c(2.0, 0.0))]);
        assert!(!nh.is_hermitian());
    }

    #[test]
    fn bandwidths_and_shift() {
        let m = CsrMatrix::from_triplets(
            4,
            &[
                (0, 0, c(2.0, 0.0)),
                (1, 1, c(2.0, 0.0)),
                (2, 2, c(2.0, 0.0)),
                (3, 3, c(2.0, 0.0)),
                (0, 2, c(-1.0, 0.0)),
                (2, 0, c(-1.0, 0.0)),
            ],
        );
        assert_eq!(m.bandwidths(), (2, 2));
        let s = m.shifted(c(0.5, 0.0));
        assert_eq!(s.get(1, 1), c(1.5, 0.0));
        assert_eq!(s.get(0, 2), c(-1.0, 0.0));
    }
}
