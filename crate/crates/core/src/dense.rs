//! Dense symmetric/Hermitian eigensolvers.
//!
//! Reference-quality (O(n^3), full spectrum) solvers used as the independent
//! oracle for the sparse shift-invert path and for the small projected
//! problems inside the Krylov solver. Householder tridiagonalization followed
//! by implicit-shift QL; complex Hermitian matrices go through the standard
//! `[[Re, -Im], [Im, Re]]` doubling, which turns each eigenvalue into an
//! exact pair.

use num_complex::Complex64;

/// Eigen-decomposition of a real symmetric matrix given in row-major order.
/// Returns eigenvalues ascending and the matrix whose column `k` (row-major
/// `z[i * n + k]`) is the corresponding orthonormal eigenvector.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut z = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, n, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, &mut z, n);
    // sort ascending, permuting columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let dd: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut zz = vec![0.0; n * n];
    for (newk, &oldk) in order.iter().enumerate() {
        for i in 0..n {
            zz[i * n + newk] = z[i * n + oldk];
        }
    }
    (dd, zz)
}

/// Householder reduction to tridiagonal form with accumulated transforms.
fn tridiagonalize(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i;
        let mut h = 0.0;
        if l > 1 {
            let mut scale = 0.0;
            for k in 0..l {
                scale += z[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = z[i * n + l - 1];
            } else {
                for k in 0..l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let mut f = z[i * n + l - 1];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l - 1] = f - g;
                let mut tau = 0.0;
                for j in 0..l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j * n + k] * z[i * n + k];
                    }
                    for k in j + 1..l {
                        g += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g / h;
                    tau += e[j] * z[i * n + j];
                }
                let hh = tau / (h + h);
                for j in 0..l {
                    f = z[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + g * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l - 1];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..i {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for j in 0..i {
            z[j * n + i] = 0.0;
            z[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix, rotating `z` along.
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) {
    if n == 0 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 50, "QL iteration failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Full spectrum of a complex Hermitian matrix (row-major), ascending.
/// Also returns orthonormal eigenvectors, one per column.
pub fn hermitian_eigen(h: &[Complex64], n: usize) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    assert_eq!(h.len(), n * n);
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let v = h[i * n + j];
            a[i * m + j] = v.re;
            a[i * m + (n + j)] = -v.im;
            a[(n + i) * m + j] = v.im;
            a[(n + i) * m + (n + j)] = v.re;
        }
    }
    let (vals, vecs) = symmetric_eigen(&a, m);
    // eigenvalues come in exact pairs; keep one per pair
    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs = Vec::with_capacity(n);
    for k in 0..n {
        let lo = vals[2 * k];
        let hi = vals[2 * k + 1];
        out_vals.push(0.5 * (lo + hi));
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(vecs[i * m + 2 * k], vecs[(n + i) * m + 2 * k]))
            .collect();
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        out_vecs.push(v);
    }
    (out_vals, out_vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let a = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let (vals, _) = symmetric_eigen(&a, 3);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_1d_closed_form() {
        // second-difference matrix on m points: eigenvalues 4 sin^2(pi k / (2(m+1)))
        let m = 17;
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = 2.0;
            if i + 1 < m {
                a[i * m + i + 1] = -1.0;
                a[(i + 1) * m + i] = -1.0;
            }
        }
        let (vals, z) = symmetric_eigen(&a, m);
        for k in 0..m {
            let exact = 4.0 * (std::f64::consts::PI * (k + 1) as f64 / (2 * (m + 1)) as f64)
                .sin()
                .powi(2);
            assert!((vals[k] - exact).abs() < 1e-12, "k={k}: {} vs {exact}", vals[k]);
        }
        // residual of an eigenpair
        let k = 5;
        for i in 0..m {
            let mut av = 0.0;
            for j in 0..m {
                av += a[i * m + j] * z[j * m + k];
            }
            assert!((av - vals[k] * z[i * m + k]).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_residuals() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 14;
        let mut h = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    Complex64::new(rng.random::<f64>(), 0.0)
                } else {
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                };
                h[i * n + j] = v;
                h[j * n + i] = v.conj();
            }
        }
        let (vals, vecs) = hermitian_eigen(&h, n);
        let mut trace = 0.0;
        for i in 0..n {
            trace += h[i * n + i].re;
        }
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() < 1e-10);
        for k in 0..n {
            let v = &vecs[k];
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let mut hv = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    hv += h[i * n + j] * v[j];
                }
                worst = worst.max((hv - vals[k] * v[i]).norm());
            }
            assert!(worst < 1e-9, "eigenpair {k} residual {worst}");
        }
    }
}
