//! Exact dense kernels: economy SVD and column centering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `RANK_REL_TOL * sigma_max` are treated as zero.
/// This keeps the inverse-sigma products in the CCA weights bounded on
/// rank-deficient input.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Economy SVD truncated to the numerical rank.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// I x R, column-orthonormal.
    pub u: DMatrix<f64>,
    /// Length R, sorted non-increasing, all above the rank tolerance.
    pub sigma: DVector<f64>,
    /// J x R, column-orthonormal.
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    /// Retained rank R.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// Economy SVD of a dense matrix, truncated at the numerical rank.
pub fn svd(a: &DMatrix<f64>) -> Result<SvdFactors> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::invalid("svd requires a non-empty matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("svd input contains a non-finite entry"));
    }
    let decomp = nalgebra::SVD::new(a.clone(), true, true);
    let u_full = decomp.u.expect("u requested");
    let v_t_full = decomp.v_t.expect("v_t requested");
    let sv = decomp.singular_values; // sorted descending
    let sigma_max = sv.iter().copied().next().unwrap_or(0.0);
    let rank = sv.iter().take_while(|&&s| s > RANK_REL_TOL * sigma_max && s > 0.0).count();
    let u = u_full.columns(0, rank).into_owned();
    let v = v_t_full.rows(0, rank).transpose();
    let sigma = DVector::from_iterator(rank, sv.iter().copied().take(rank));
    Ok(SvdFactors { u, sigma, v })
}

/// Subtracts the column means; returns the centered matrix and the means so
/// they can be applied to held-out data later.
pub fn center_columns(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if a.nrows() < 2 {
        return Err(Error::invalid("centering requires at least 2 rows"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("centering input contains a non-finite entry"));
    }
    let means = DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.mean()));
    Ok((apply_centering(a, &means)?, means))
}

/// Subtracts previously computed column means (e.g. training means applied
/// to test data).
pub fn apply_centering(a: &DMatrix<f64>, means: &DVector<f64>) -> Result<DMatrix<f64>> {
    if means.len() != a.ncols() {
        return Err(Error::invalid(format!(
            "mean vector has {} entries but matrix has {} columns",
            means.len(),
            a.ncols()
        )));
    }
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use nalgebra::dmatrix;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn check_factors(a: &DMatrix<f64>, f: &SvdFactors) {
        let r = f.rank();
        let eye_u = f.u.transpose() * &f.u;
        let eye_v = f.v.transpose() * &f.v;
        for i in 0..r {
            for j in 0..r {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((eye_u[(i, j)] - target).abs() < 1e-8, "UtU not identity");
                assert!((eye_v[(i, j)] - target).abs() < 1e-8, "VtV not identity");
            }
        }
        let recon = &f.u * DMatrix::from_diagonal(&f.sigma) * f.v.transpose();
        let err = (a - recon).norm();
        assert!(err <= 1e-8 * a.norm().max(1e-300), "reconstruction error {err}");
        for k in 1..r {
            assert!(f.sigma[k] <= f.sigma[k - 1]);
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let f = svd(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.rank(), 3);
        for k in 0..3 {
            assert!((f.sigma[k] - 1.0).abs() < 1e-12);
        }
        let f = svd(&dmatrix![3.0, 0.0; 0.0, 1.0]).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!((f.sigma[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_squared_matches_jacobi_oracle() {
        // Independent route: Jacobi eigenvalues of the Gram matrix.
        let a = random_matrix(6, 4, 31);
        let f = svd(&a).unwrap();
        let gram = a.transpose() * &a;
        let eig = qica_testutil::jacobi_eigenvalues(&gram);
        for k in 0..f.rank() {
            let s2 = f.sigma[k] * f.sigma[k];
            assert!(
                (s2 - eig[k]).abs() <= 1e-8 * eig[0],
                "sigma^2 {s2} vs eig {}",
                eig[k]
            );
        }
    }

    #[test]
    fn factors_hold_on_random_shapes() {
        for (rows, cols, seed) in [
            (1usize, 1usize, 1u64),
            (5, 9, 2),
            (9, 5, 3),
            (40, 40, 4),
            (120, 37, 5),
            (500, 500, 6),
        ] {
            let a = random_matrix(rows, cols, seed);
            check_factors(&a, &svd(&a).unwrap());
        }
    }

    #[test]
    fn rank_deficient_input_truncates() {
        let mut rng = rng_from_seed(8);
        let z = DMatrix::from_fn(30, 4, |_, _| rng.random::<f64>() - 0.5);
        let b = DMatrix::from_fn(4, 20, |_, _| rng.random::<f64>() - 0.5);
        let a = z * b;
        let f = svd(&a).unwrap();
        assert_eq!(f.rank(), 4);
        check_factors(&a, &f);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = f64::INFINITY;
        assert!(matches!(svd(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn centering_basics() {
        let (c, m) = center_columns(&dmatrix![1.0; 3.0]).unwrap();
        assert_eq!(m[0], 2.0);
        assert_eq!(c[(0, 0)], -1.0);
        assert_eq!(c[(1, 0)], 1.0);

        assert!(matches!(
            center_columns(&dmatrix![1.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn centered_matrix_is_a_fixed_point() {
        let a = random_matrix(100, 5, 12);
        let (c, _) = center_columns(&a).unwrap();
        let (c2, m2) = center_columns(&c).unwrap();
        for j in 0..5 {
            assert!(m2[j].abs() < 1e-12);
        }
        assert!((c2 - &c).abs().max() < 1e-12);
        for j in 0..5 {
            assert!(c.column(j).mean().abs() < 1e-12);
        }
    }
}
