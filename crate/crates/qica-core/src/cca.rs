//! Exact SVD-route canonical correlation analysis.
//!
//! Given paired views X (N x D1) and Y (N x D2), the weights come from
//! three SVDs: economy SVDs of each view, then an SVD of `U1^T U2` whose
//! singular values are the canonical correlations. The variates
//! `C_X = X W_X = U1 U3(:,1:K)` have exactly orthonormal columns, which
//! matches the usual unit-covariance constraint up to the (N-1) scaling of
//! the covariance convention.
//!
//! Callers that want the textbook covariance-form solution must center the
//! views first (see [`crate::linalg::center_columns`]); the pipeline level
//! does this by default.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::svd;

/// Fitted CCA weights and per-component correlations.
#[derive(Debug, Clone)]
pub struct CcaModel {
    /// D1 x K_actual.
    pub w_x: DMatrix<f64>,
    /// D2 x K_actual.
    pub w_y: DMatrix<f64>,
    /// Non-increasing, clamped to [0, 1].
    pub correlations: Vec<f64>,
    pub k_actual: usize,
}

/// Fits up to `k` canonical component pairs.
///
/// `k` is clamped to the numerical rank of the cross matrix `U1^T U2`
/// (itself bounded by the ranks of both views); the achieved count is
/// reported as `k_actual`. The sign of each component is fixed so the
/// largest-magnitude entry of `w_x(:,k)` is positive.
pub fn cca(x: &DMatrix<f64>, y: &DMatrix<f64>, k: usize) -> Result<CcaModel> {
    if x.nrows() != y.nrows() {
        return Err(Error::invalid(format!(
            "views disagree on sample count: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::invalid("CCA requires at least 2 samples"));
    }
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let f1 = svd(x)?;
    let f2 = svd(y)?;
    if f1.rank() == 0 || f2.rank() == 0 {
        return Err(Error::degenerate("a view is all-zero"));
    }
    let cross = f1.u.transpose() * &f2.u;
    let f3 = svd(&cross)?;
    let k_actual = k.min(f3.rank());
    if k_actual == 0 {
        return Err(Error::degenerate("the views share no correlated directions"));
    }

    // W_X = V1 Sigma1^-1 U3(:,1:K), and likewise for view 2 with V3.
    let scaled_u3 = DMatrix::from_fn(f1.rank(), k_actual, |i, kk| f3.u[(i, kk)] / f1.sigma[i]);
    let scaled_v3 = DMatrix::from_fn(f2.rank(), k_actual, |i, kk| f3.v[(i, kk)] / f2.sigma[i]);
    let mut w_x = &f1.v * scaled_u3;
    let mut w_y = &f2.v * scaled_v3;

    for kk in 0..k_actual {
        let mut arg = 0;
        let mut best = 0.0;
        for d in 0..w_x.nrows() {
            let a = w_x[(d, kk)].abs();
            if a > best {
                best = a;
                arg = d;
            }
        }
        if w_x[(arg, kk)] < 0.0 {
            // flip the pair together; the correlation is unchanged
            w_x.column_mut(kk).neg_mut();
            w_y.column_mut(kk).neg_mut();
        }
    }

    let correlations = (0..k_actual).map(|kk| f3.sigma[kk].clamp(0.0, 1.0)).collect();
    Ok(CcaModel {
        w_x,
        w_y,
        correlations,
        k_actual,
    })
}

/// Projects samples onto canonical weights: `X W`.
pub fn canonical_variates(x: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != w.nrows() {
        return Err(Error::invalid(format!(
            "weight matrix has {} rows but data has {} columns",
            w.nrows(),
            x.ncols()
        )));
    }
    Ok(x * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::center_columns;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identical_views_correlate_perfectly() {
        let x = gaussian(50, 6, 1);
        let model = cca(&x, &x, 4).unwrap();
        assert_eq!(model.k_actual, 4);
        for &c in &model.correlations {
            assert!((c - 1.0).abs() < 1e-8, "correlation {c}");
        }
    }

    #[test]
    fn independent_views_barely_correlate() {
        let x = gaussian(10_000, 5, 2);
        let y = gaussian(10_000, 5, 3);
        let model = cca(&x, &y, 5).unwrap();
        assert!(model.correlations[0] < 0.1);
    }

    #[test]
    fn matches_covariance_form_oracle() {
        for seed in 0..5u64 {
            let mut rng = rng_from_seed(200 + seed);
            let d1 = rng.random_range(2..=6);
            let d2 = rng.random_range(2..=6);
            let x = gaussian(60, d1, 300 + seed);
            let y = gaussian(60, d2, 400 + seed);
            let (xc, _) = center_columns(&x).unwrap();
            let (yc, _) = center_columns(&y).unwrap();
            let k = d1.min(d2);
            let model = cca(&xc, &yc, k).unwrap();
            let oracle = qica_testutil::cca_correlations_covariance_form(&xc, &yc);
            for (kk, &reference) in oracle.iter().take(model.k_actual).enumerate() {
                assert!(
                    (model.correlations[kk] - reference).abs() < 1e-6,
                    "seed {seed} component {kk}: {} vs oracle {reference}",
                    model.correlations[kk],
                );
            }
        }
    }

    #[test]
    fn variates_shape_rules() {
        let x = gaussian(10, 4, 5);
        let z = canonical_variates(&x, &DMatrix::zeros(4, 3)).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        let id = DMatrix::identity(4, 4);
        assert_eq!(canonical_variates(&x, &id).unwrap(), x);
        assert!(matches!(
            canonical_variates(&x, &DMatrix::zeros(5, 2)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn variates_match_projected_left_factors() {
        // X W_X must equal U1 U3(:,1:K) up to the per-component sign fix
        let x = gaussian(40, 6, 7);
        let y = gaussian(40, 5, 8);
        let (xc, _) = center_columns(&x).unwrap();
        let (yc, _) = center_columns(&y).unwrap();
        let model = cca(&xc, &yc, 3).unwrap();
        let via_weights = canonical_variates(&xc, &model.w_x).unwrap();

        let f1 = svd(&xc).unwrap();
        let f2 = svd(&yc).unwrap();
        let f3 = svd(&(f1.u.transpose() * &f2.u)).unwrap();
        let via_factors = &f1.u * f3.u.columns(0, 3).into_owned();
        for kk in 0..3 {
            let a = via_weights.column(kk);
            let b = via_factors.column(kk);
            let d = (a - b).norm().min((a + b).norm());
            assert!(d < 1e-8, "component {kk} differs by {d}");
        }
    }

    #[test]
    fn variates_are_orthonormal() {
        let x = gaussian(80, 7, 9);
        let y = gaussian(80, 6, 10);
        let (xc, _) = center_columns(&x).unwrap();
        let (yc, _) = center_columns(&y).unwrap();
        let model = cca(&xc, &yc, 5).unwrap();
        for (view, w) in [(&xc, &model.w_x), (&yc, &model.w_y)] {
            let c = canonical_variates(view, w).unwrap();
            let g = c.transpose() * &c;
            for i in 0..model.k_actual {
                for j in 0..model.k_actual {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - target).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn correlations_sorted_and_bounded() {
        let x = gaussian(100, 8, 11);
        let y = &x * gaussian(8, 6, 12) + gaussian(100, 6, 13) * 0.5;
        let model = cca(&x, &y, 6).unwrap();
        for kk in 0..model.k_actual {
            assert!((0.0..=1.0).contains(&model.correlations[kk]));
            if kk > 0 {
                assert!(model.correlations[kk] <= model.correlations[kk - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn row_permutation_leaves_correlations_unchanged() {
        let x = gaussian(30, 4, 14);
        let y = gaussian(30, 4, 15);
        let base = cca(&x, &y, 3).unwrap();
        let mut perm: Vec<usize> = (0..30).collect();
        let mut rng = rng_from_seed(16);
        for i in (1..30).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let xp = DMatrix::from_fn(30, 4, |i, j| x[(perm[i], j)]);
        let yp = DMatrix::from_fn(30, 4, |i, j| y[(perm[i], j)]);
        let permuted = cca(&xp, &yp, 3).unwrap();
        for kk in 0..3 {
            assert!((base.correlations[kk] - permuted.correlations[kk]).abs() < 1e-8);
        }
    }

    #[test]
    fn k_clamps_to_rank() {
        let mut rng = rng_from_seed(17);
        let z = DMatrix::from_fn(20, 2, |_, _| rng.random::<f64>() - 0.5);
        let x = &z * DMatrix::from_fn(2, 5, |_, _| rng.random::<f64>() - 0.5);
        let y = &z * DMatrix::from_fn(2, 6, |_, _| rng.random::<f64>() - 0.5);
        let model = cca(&x, &y, 5).unwrap();
        assert_eq!(model.k_actual, 2);
        assert_eq!(model.correlations.len(), 2);
    }

    #[test]
    fn input_validation() {
        let x = gaussian(10, 3, 18);
        let y = gaussian(11, 3, 19);
        assert!(matches!(cca(&x, &y, 2), Err(Error::InvalidInput(_))));
        let z = DMatrix::zeros(10, 3);
        assert!(matches!(cca(&x, &z, 2), Err(Error::DegenerateInput(_))));
    }
}
