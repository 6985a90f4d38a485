//! Independent numerical oracles for tests.
//!
//! Everything here is deliberately brute force and self-contained: a cyclic
//! Jacobi eigensolver for symmetric matrices and a covariance-form CCA
//! built on top of it. Tests use these to cross-check the library's
//! SVD-based routes, so nothing in this crate may call into the library.

use nalgebra::{DMatrix, DVector};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// column k of the eigenvector matrix pairs with eigenvalue k.
pub fn jacobi_eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi_eigh needs a square matrix");
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(1e-300);
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (eigenvalues, eigenvectors)
}

/// Descending eigenvalues only.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    jacobi_eigh(m).0.iter().copied().collect()
}

/// Sample covariance of two column-blocks, `cov(A, B) = Ac^T Bc / (N-1)`,
/// computed with explicit loops (means subtracted internally).
pub fn sample_covariance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, b.nrows());
    let mean = |m: &DMatrix<f64>, j: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            s += m[(i, j)];
        }
        s / n as f64
    };
    let a_means: Vec<f64> = (0..a.ncols()).map(|j| mean(a, j)).collect();
    let b_means: Vec<f64> = (0..b.ncols()).map(|j| mean(b, j)).collect();
    let mut cov = DMatrix::zeros(a.ncols(), b.ncols());
    for ja in 0..a.ncols() {
        for jb in 0..b.ncols() {
            let mut s = 0.0;
            for i in 0..n {
                s += (a[(i, ja)] - a_means[ja]) * (b[(i, jb)] - b_means[jb]);
            }
            cov[(ja, jb)] = s / (n as f64 - 1.0);
        }
    }
    cov
}

/// Inverse square root of a symmetric positive-definite matrix via Jacobi.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (eig, vecs) = jacobi_eigh(m);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        assert!(eig[k] > 0.0, "matrix is not positive definite");
        let w = 1.0 / eig[k].sqrt();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += w * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    out
}

/// Canonical correlations from the covariance formulation: the descending
/// square roots of the eigenvalues of
/// `Sxx^-1/2 Sxy Syy^-1 Syx Sxx^-1/2`, clamped to [0, 1].
pub fn cca_correlations_covariance_form(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Vec<f64> {
    let sxx = sample_covariance(x, x);
    let syy = sample_covariance(y, y);
    let sxy = sample_covariance(x, y);
    let sxx_is = inv_sqrt_spd(&sxx);
    let syy_inv = {
        let isq = inv_sqrt_spd(&syy);
        &isq * &isq
    };
    let core = &sxx_is * &sxy * &syy_inv * sxy.transpose() * &sxx_is;
    // Symmetrize away accumulation asymmetry before Jacobi.
    let sym = (&core + core.transpose()) * 0.5;
    let eig = jacobi_eigenvalues(&sym);
    eig.into_iter()
        .map(|l| l.max(0.0).sqrt().min(1.0))
        .collect()
}
