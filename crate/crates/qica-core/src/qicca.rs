//! Sketch-based canonical correlation analysis.
//!
//! The exact route needs the left singular factors U1, U2 of the two views;
//! here both are replaced by qiSVD descriptions computed on the transposed
//! views. The cross matrix `[u^(1)]^T S^(1) S^(2)T [u^(2)]` is small
//! (L1 x L2), its SVD supplies the mixing factors, and the canonical
//! weights are returned as [`WeightDescription`]s: a list of selected
//! feature indices (the nonzero rows of the implicit binary selector
//! matrix) plus coefficient vectors. Variates are then computed by
//! gathering P columns of the data, never materializing dense D x K
//! weights unless explicitly asked.
//!
//! The two inner qiSVD calls consume independent ChaCha substreams (stream
//! 1 for view 1, stream 2 for view 2) derived from the master seed, so
//! results are reproducible and the calls could run concurrently.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::qisvd::{qisvd_with, QisvdOptions};
use crate::rng::substream;
use crate::store::MatrixStore;

/// Parameters for [`qicca`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QiccaParams {
    /// Number of canonical component pairs requested.
    pub k: usize,
    /// Components extracted from each view's qiSVD.
    pub l1: usize,
    pub l2: usize,
    /// Sketch sizes for each view's qiSVD.
    pub p1: usize,
    pub p2: usize,
    /// Orthonormalize the qiSVD outputs (on by default; off reproduces the
    /// sketch-only ablation).
    pub orthonormalize: bool,
}

impl QiccaParams {
    /// Defaults for the given view dimensionalities:
    /// `L = ceil(0.5 * max(D1, D2))` shared by both views, `P = ceil(1.5 * L)`.
    pub fn with_defaults(k: usize, d1: usize, d2: usize) -> Self {
        let l = (0.5 * d1.max(d2) as f64).ceil() as usize;
        let l = l.max(1);
        let p = (1.5 * l as f64).ceil() as usize;
        QiccaParams {
            k,
            l1: l,
            l2: l,
            p1: p,
            p2: p,
            orthonormalize: true,
        }
    }
}

/// Canonical weights for one view in selector/coefficient form.
///
/// The dense weight matrix is `A^T [w_1 .. w_K]` where A is the P x D
/// binary matrix with `A(p, selector_rows[p]) = 1`; it has at most P
/// nonzero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDescription {
    /// Feature indices selected by the view's qiSVD (duplicates allowed).
    pub selector_rows: Vec<usize>,
    /// P x K coefficient stack (column k = w_k).
    pub coeffs: DMatrix<f64>,
    /// D, the view's feature count.
    pub view_dim: usize,
}

/// Fitted qiCCA model.
#[derive(Debug, Clone, PartialEq)]
pub struct QiCcaModel {
    pub desc_x: WeightDescription,
    pub desc_y: WeightDescription,
    /// Non-increasing, clamped to [0, 1].
    pub correlations: Vec<f64>,
    /// Unclamped singular values of the small cross matrix; approximate
    /// factors can push these marginally above 1.
    pub raw_correlations: Vec<f64>,
    pub k_actual: usize,
}

/// Runs qiCCA over stores built on the TRANSPOSED views (`X^T` is D1 x N,
/// `Y^T` is D2 x N; both stores must agree on N).
pub fn qicca(
    store_xt: &MatrixStore,
    store_yt: &MatrixStore,
    params: &QiccaParams,
    seed: u64,
) -> Result<QiCcaModel> {
    if params.k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if params.k > params.l1.min(params.l2) {
        return Err(Error::invalid(format!(
            "K ({}) must not exceed min(L1, L2) = {}",
            params.k,
            params.l1.min(params.l2)
        )));
    }
    if params.l1 > params.p1 || params.l2 > params.p2 {
        return Err(Error::invalid("each L must not exceed its P"));
    }
    if store_xt.cols() != store_yt.cols() {
        return Err(Error::invalid(format!(
            "views disagree on sample count: {} vs {}",
            store_xt.cols(),
            store_yt.cols()
        )));
    }
    let opts = QisvdOptions {
        orthonormalize: params.orthonormalize,
    };
    let mut rng_x = substream(seed, 1);
    let mut rng_y = substream(seed, 2);
    let desc1 = qisvd_with(store_xt, params.l1, params.p1, &mut rng_x, &opts)?;
    let desc2 = qisvd_with(store_yt, params.l2, params.p2, &mut rng_y, &opts)?;

    let s1 = store_xt.gather_rows(desc1.source_rows())?;
    let s2 = store_yt.gather_rows(desc2.source_rows())?;
    let ustack1 = desc1.coeff_stack();
    let ustack2 = desc2.coeff_stack();

    // (L1 x N) and (N x L2) partial products avoid any N x N intermediate.
    let t1 = ustack1.transpose() * &s1;
    let t2 = s2.transpose() * &ustack2;
    let cross = t1 * t2;
    let f3 = svd(&cross)?;
    let k_actual = params.k.min(f3.rank());
    if k_actual == 0 {
        return Err(Error::degenerate(
            "the sketched cross matrix has numerical rank 0",
        ));
    }

    let w_stack_x = &ustack1 * f3.u.columns(0, k_actual);
    let w_stack_y = &ustack2 * f3.v.columns(0, k_actual);
    let raw_correlations: Vec<f64> = (0..k_actual).map(|kk| f3.sigma[kk]).collect();
    let correlations = raw_correlations.iter().map(|c| c.clamp(0.0, 1.0)).collect();

    Ok(QiCcaModel {
        desc_x: WeightDescription {
            selector_rows: desc1.source_rows().to_vec(),
            coeffs: w_stack_x,
            view_dim: store_xt.rows(),
        },
        desc_y: WeightDescription {
            selector_rows: desc2.source_rows().to_vec(),
            coeffs: w_stack_y,
            view_dim: store_yt.rows(),
        },
        correlations,
        raw_correlations,
        k_actual,
    })
}

/// Canonical variates `X A^T [w_1 .. w_K]`, computed by gathering the
/// selected columns of X (N x P) and multiplying by the coefficient stack.
pub fn variates_from_description(
    x: &DMatrix<f64>,
    desc: &WeightDescription,
) -> Result<DMatrix<f64>> {
    if x.ncols() != desc.view_dim {
        return Err(Error::invalid(format!(
            "data has {} columns but the description expects {}",
            x.ncols(),
            desc.view_dim
        )));
    }
    for &d in &desc.selector_rows {
        if d >= desc.view_dim {
            return Err(Error::invalid(format!("selector index {d} out of range")));
        }
    }
    let gathered = DMatrix::from_fn(x.nrows(), desc.selector_rows.len(), |n, p| {
        x[(n, desc.selector_rows[p])]
    });
    Ok(gathered * &desc.coeffs)
}

/// Expands a description into the dense D x K weight matrix. Duplicate
/// selector indices accumulate into the same row.
pub fn dense_weights(desc: &WeightDescription) -> DMatrix<f64> {
    let k = desc.coeffs.ncols();
    let mut w = DMatrix::zeros(desc.view_dim, k);
    for (p, &d) in desc.selector_rows.iter().enumerate() {
        for kk in 0..k {
            w[(d, kk)] += desc.coeffs[(p, kk)];
        }
    }
    w
}

/// Flat JSON-friendly form of a [`WeightDescription`]; coefficient vectors
/// are stored per component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedDescription {
    pub view_dim: usize,
    pub selector_rows: Vec<usize>,
    /// K vectors of length P.
    pub coeffs: Vec<Vec<f64>>,
}

impl From<&WeightDescription> for SavedDescription {
    fn from(d: &WeightDescription) -> Self {
        SavedDescription {
            view_dim: d.view_dim,
            selector_rows: d.selector_rows.clone(),
            coeffs: (0..d.coeffs.ncols())
                .map(|k| d.coeffs.column(k).iter().copied().collect())
                .collect(),
        }
    }
}

impl SavedDescription {
    pub fn to_description(&self) -> Result<WeightDescription> {
        let p = self.selector_rows.len();
        if self.coeffs.iter().any(|c| c.len() != p) {
            return Err(Error::Format(
                "coefficient vector length disagrees with selector count".into(),
            ));
        }
        let coeffs = DMatrix::from_fn(p, self.coeffs.len(), |pi, k| self.coeffs[k][pi]);
        Ok(WeightDescription {
            selector_rows: self.selector_rows.clone(),
            coeffs,
            view_dim: self.view_dim,
        })
    }
}

/// Self-contained serialized model: selector indices, coefficients,
/// correlations, the run parameters and seed, and (when the pipeline
/// centered its inputs) the training column means needed to reproduce
/// variates on raw data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedQiccaModel {
    pub schema: u32,
    pub seed: u64,
    pub params: QiccaParams,
    pub k_actual: usize,
    pub correlations: Vec<f64>,
    pub raw_correlations: Vec<f64>,
    pub view_x: SavedDescription,
    pub view_y: SavedDescription,
    pub center_x: Option<Vec<f64>>,
    pub center_y: Option<Vec<f64>>,
}

impl SavedQiccaModel {
    pub fn from_model(
        model: &QiCcaModel,
        params: &QiccaParams,
        seed: u64,
        center_x: Option<Vec<f64>>,
        center_y: Option<Vec<f64>>,
    ) -> Self {
        SavedQiccaModel {
            schema: 1,
            seed,
            params: params.clone(),
            k_actual: model.k_actual,
            correlations: model.correlations.clone(),
            raw_correlations: model.raw_correlations.clone(),
            view_x: (&model.desc_x).into(),
            view_y: (&model.desc_y).into(),
            center_x,
            center_y,
        }
    }

    pub fn to_model(&self) -> Result<QiCcaModel> {
        Ok(QiCcaModel {
            desc_x: self.view_x.to_description()?,
            desc_y: self.view_y.to_description()?,
            correlations: self.correlations.clone(),
            raw_correlations: self.raw_correlations.clone(),
            k_actual: self.k_actual,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("model JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_pcca;
    use crate::linalg::center_columns;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn transposed_store(m: &DMatrix<f64>) -> MatrixStore {
        MatrixStore::new(m.transpose()).unwrap()
    }

    #[test]
    fn identical_views_recover_full_correlation() {
        let mut rng = rng_from_seed(3);
        let z = DMatrix::from_fn(60, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(4, 12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = z * b; // rank 4
        let store = transposed_store(&x);
        let params = QiccaParams {
            k: 4,
            l1: 8,
            l2: 8,
            p1: 24,
            p2: 24,
            orthonormalize: true,
        };
        let model = qicca(&store, &store, &params, 11).unwrap();
        assert!(model.k_actual >= 4);
        for kk in 0..4 {
            assert!(
                model.correlations[kk] >= 0.99,
                "component {kk}: {}",
                model.correlations[kk]
            );
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let x = gaussian(50, 10, 21);
        let y = gaussian(50, 8, 22);
        let sx = transposed_store(&x);
        let sy = transposed_store(&y);
        let params = QiccaParams::with_defaults(3, 10, 8);
        let a = qicca(&sx, &sy, &params, 5).unwrap();
        let b = qicca(&sx, &sy, &params, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_parameters_follow_the_ratio_rules() {
        let p = QiccaParams::with_defaults(10, 100, 60);
        assert_eq!(p.l1, 50);
        assert_eq!(p.l2, 50);
        assert_eq!(p.p1, 75);
        assert_eq!(p.p2, 75);
        let p = QiccaParams::with_defaults(2, 5, 5);
        assert_eq!(p.l1, 3); // ceil(2.5)
        assert_eq!(p.p1, 5); // ceil(4.5)
    }

    #[test]
    fn variates_single_selector() {
        let x = gaussian(9, 5, 31);
        let desc = WeightDescription {
            selector_rows: vec![3],
            coeffs: DMatrix::from_element(1, 1, 2.5),
            view_dim: 5,
        };
        let v = variates_from_description(&x, &desc).unwrap();
        for n in 0..9 {
            assert_eq!(v[(n, 0)], 2.5 * x[(n, 3)]);
        }
    }

    #[test]
    fn variates_match_dense_route() {
        let x = gaussian(20, 7, 41);
        let mut rng = rng_from_seed(42);
        let desc = WeightDescription {
            selector_rows: (0..9).map(|_| rng.random_range(0..7)).collect(),
            coeffs: DMatrix::from_fn(9, 3, |_, _| rng.random::<f64>() - 0.5),
            view_dim: 7,
        };
        let sparse = variates_from_description(&x, &desc).unwrap();
        let dense = &x * dense_weights(&desc);
        assert!((sparse - dense).abs().max() < 1e-10);
    }

    #[test]
    fn duplicate_selectors_accumulate() {
        let x = gaussian(6, 4, 51);
        let split = WeightDescription {
            selector_rows: vec![2, 2],
            coeffs: DMatrix::from_column_slice(2, 1, &[0.7, 0.3]),
            view_dim: 4,
        };
        let merged = WeightDescription {
            selector_rows: vec![2],
            coeffs: DMatrix::from_element(1, 1, 1.0),
            view_dim: 4,
        };
        let a = variates_from_description(&x, &split).unwrap();
        let b = variates_from_description(&x, &merged).unwrap();
        assert!((a - b).abs().max() < 1e-12);
        let w = dense_weights(&split);
        assert!((w[(2, 0)] - 1.0).abs() < 1e-15);
        for d in [0usize, 1, 3] {
            assert_eq!(w[(d, 0)], 0.0);
        }
    }

    #[test]
    fn parameter_validation() {
        let x = gaussian(30, 6, 61);
        let sx = transposed_store(&x);
        let bad_k = QiccaParams {
            k: 5,
            l1: 4,
            l2: 4,
            p1: 8,
            p2: 8,
            orthonormalize: true,
        };
        assert!(matches!(
            qicca(&sx, &sx, &bad_k, 0),
            Err(Error::InvalidInput(_))
        ));
        let bad_lp = QiccaParams {
            k: 2,
            l1: 9,
            l2: 4,
            p1: 8,
            p2: 8,
            orthonormalize: true,
        };
        assert!(matches!(
            qicca(&sx, &sx, &bad_lp, 0),
            Err(Error::InvalidInput(_))
        ));
        let y = gaussian(29, 6, 62);
        let sy = transposed_store(&y);
        let ok = QiccaParams::with_defaults(2, 6, 6);
        assert!(matches!(
            qicca(&sx, &sy, &ok, 0),
            Err(Error::InvalidInput(_))
        ));
        let mismatched = WeightDescription {
            selector_rows: vec![0],
            coeffs: DMatrix::from_element(1, 1, 1.0),
            view_dim: 6,
        };
        assert!(matches!(
            variates_from_description(&gaussian(5, 4, 63), &mismatched),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn training_variates_nearly_orthonormal() {
        let pair = gen_pcca(400, 32, 32, 5, 71).unwrap();
        let (xc, _) = center_columns(&pair.x).unwrap();
        let (yc, _) = center_columns(&pair.y).unwrap();
        let sx = transposed_store(&xc);
        let sy = transposed_store(&yc);
        let params = QiccaParams::with_defaults(5, 32, 32);
        let model = qicca(&sx, &sy, &params, 9).unwrap();
        let cx = variates_from_description(&xc, &model.desc_x).unwrap();
        let g = cx.transpose() * &cx;
        for i in 0..model.k_actual {
            for j in 0..model.k_actual {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g[(i, j)] - target).abs() <= 0.05,
                    "gram({i},{j}) = {}",
                    g[(i, j)]
                );
            }
        }
    }

    #[test]
    fn saved_model_round_trips() {
        let x = gaussian(40, 9, 81);
        let y = gaussian(40, 7, 82);
        let sx = transposed_store(&x);
        let sy = transposed_store(&y);
        let params = QiccaParams::with_defaults(3, 9, 7);
        let model = qicca(&sx, &sy, &params, 123).unwrap();
        let saved = SavedQiccaModel::from_model(&model, &params, 123, None, None);
        let json = saved.to_json();
        let restored = SavedQiccaModel::from_json(&json).unwrap().to_model().unwrap();
        assert_eq!(model, restored);
        let v1 = variates_from_description(&x, &model.desc_x).unwrap();
        let v2 = variates_from_description(&x, &restored.desc_x).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn raw_correlations_are_recorded() {
        let x = gaussian(50, 8, 91);
        let sx = transposed_store(&x);
        let params = QiccaParams::with_defaults(4, 8, 8);
        let model = qicca(&sx, &sx, &params, 7).unwrap();
        assert_eq!(model.raw_correlations.len(), model.k_actual);
        for kk in 0..model.k_actual {
            assert!(model.correlations[kk] <= 1.0);
            assert!((model.correlations[kk] - model.raw_correlations[kk].clamp(0.0, 1.0)).abs() == 0.0);
        }
    }

    #[test]
    fn selector_rows_index_features() {
        let x = gaussian(25, 6, 95);
        let y = gaussian(25, 11, 96);
        let sx = transposed_store(&x);
        let sy = transposed_store(&y);
        let params = QiccaParams::with_defaults(2, 6, 11);
        let model = qicca(&sx, &sy, &params, 3).unwrap();
        assert!(model.desc_x.selector_rows.iter().all(|&d| d < 6));
        assert!(model.desc_y.selector_rows.iter().all(|&d| d < 11));
        assert_eq!(model.desc_x.view_dim, 6);
        assert_eq!(model.desc_y.view_dim, 11);
        // implied dense weights have at most P nonzero rows
        let w = dense_weights(&model.desc_x);
        let nonzero = (0..6).filter(|&d| w.row(d).iter().any(|&v| v != 0.0)).count();
        assert!(nonzero <= params.p1);
    }
}
