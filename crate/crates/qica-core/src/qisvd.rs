//! Sketch-based approximation of right singular vectors.
//!
//! `qisvd` draws a P x P reweighted sketch from a [`MatrixStore`], takes its
//! exact SVD, and turns the left factor into coefficient vectors `u_k` such
//! that `S^T u_k` approximates the k-th right singular vector of the stored
//! matrix, where row p of S is the sampled row `X(i_p,:)`. The pair
//! `{S, {u_k}}` is a [`Description`]: any entry of the approximate singular
//! vectors can be evaluated from it without touching the rest of the matrix.
//!
//! The plain sketch route yields vectors that are only approximately
//! orthonormal; [`orthonormalize`] runs Gram-Schmidt in the inner product
//! induced by `M = S S^T`, after which `{S^T u_k}` is orthonormal to
//! within 1e-8. The non-orthonormalized variant stays available through
//! [`QisvdOptions`] for ablation runs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::rng::SampleRng;
use crate::store::{MatrixStore, SketchResult};

/// Candidates whose residual M-energy falls below this fraction of their
/// initial M-energy are dropped during orthonormalization.
pub const DROP_REL_TOL: f64 = 1e-12;

/// Compact representation of approximate right singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Description {
    source_rows: Vec<usize>,
    coeffs: Vec<DVector<f64>>,
}

impl Description {
    /// Assembles a description from parts; every coefficient vector must
    /// have one entry per source row.
    pub fn new(source_rows: Vec<usize>, coeffs: Vec<DVector<f64>>) -> Result<Self> {
        if source_rows.is_empty() {
            return Err(Error::invalid("description needs at least one source row"));
        }
        if coeffs.iter().any(|c| c.len() != source_rows.len()) {
            return Err(Error::invalid(
                "coefficient vector length must equal the source row count",
            ));
        }
        Ok(Description {
            source_rows,
            coeffs,
        })
    }

    /// Sampled row indices `{i_p}` into the source matrix.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    /// Coefficient vectors `u_k`, each of length P.
    pub fn coeffs(&self) -> &[DVector<f64>] {
        &self.coeffs
    }

    /// Number of retained components.
    pub fn k_actual(&self) -> usize {
        self.coeffs.len()
    }

    /// Sketch size P.
    pub fn sketch_size(&self) -> usize {
        self.source_rows.len()
    }

    /// Coefficients as a P x K matrix (column k = `u_k`).
    pub fn coeff_stack(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.source_rows.len(), self.coeffs.len(), |p, k| {
            self.coeffs[k][p]
        })
    }
}

/// Behaviour switches for [`qisvd_with`].
#[derive(Debug, Clone)]
pub struct QisvdOptions {
    /// Run the metric Gram-Schmidt step (on by default). Disabling it
    /// reproduces the original sketch-only algorithm.
    pub orthonormalize: bool,
}

impl Default for QisvdOptions {
    fn default() -> Self {
        QisvdOptions {
            orthonormalize: true,
        }
    }
}

/// Approximates the top-K right singular vectors with sketch size P.
pub fn qisvd(
    store: &MatrixStore,
    k: usize,
    p: usize,
    rng: &mut SampleRng,
) -> Result<Description> {
    qisvd_with(store, k, p, rng, &QisvdOptions::default())
}

pub fn qisvd_with(
    store: &MatrixStore,
    k: usize,
    p: usize,
    rng: &mut SampleRng,
    opts: &QisvdOptions,
) -> Result<Description> {
    if k > p {
        return Err(Error::invalid(format!("K ({k}) must not exceed P ({p})")));
    }
    let sketch = store.matrix_sampling(p, rng)?;
    qisvd_from_sketch(store, &sketch, k, opts)
}

/// The post-sketch stages: SVD of the sketch, coefficient construction, and
/// (optionally) orthonormalization. Split out so harnesses can time the
/// sketch separately.
pub fn qisvd_from_sketch(
    store: &MatrixStore,
    sketch: &SketchResult,
    k: usize,
    opts: &QisvdOptions,
) -> Result<Description> {
    let p = sketch.row_indices.len();
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if k > p {
        return Err(Error::invalid(format!("K ({k}) must not exceed P ({p})")));
    }
    let f = svd(&sketch.w)?;
    if f.rank() == 0 {
        return Err(Error::degenerate("sketch matrix has numerical rank 0"));
    }
    // svd() already truncated singular values below 1e-10 * sigma_max, which
    // is exactly the component-skip threshold here.
    let retained = k.min(f.rank());
    let pf = p as f64;
    let mut candidates = Vec::with_capacity(retained);
    for kk in 0..retained {
        let sigma = f.sigma[kk];
        let coeff = DVector::from_fn(p, |pi, _| {
            let fi = store.row_prob(sketch.row_indices[pi]);
            f.u[(pi, kk)] / (sigma * (pf * fi).sqrt())
        });
        candidates.push(coeff);
    }
    let coeffs = if opts.orthonormalize {
        let s = store.gather_rows(&sketch.row_indices)?;
        orthonormalize(&s, &candidates)?
    } else {
        candidates
    };
    if coeffs.is_empty() {
        return Err(Error::degenerate("no components survived orthonormalization"));
    }
    Description::new(sketch.row_indices.clone(), coeffs)
}

/// Gram-Schmidt in the `M = S S^T` inner product, so that the expanded
/// vectors `S^T u_k` come out Euclidean-orthonormal.
///
/// Modified Gram-Schmidt with one full reorthogonalization pass; a single
/// pass loses too much orthogonality when M is ill-conditioned. Candidates
/// whose residual M-energy collapses (below [`DROP_REL_TOL`] of their
/// initial energy) are dropped, shrinking the output set.
pub fn orthonormalize(
    s: &DMatrix<f64>,
    candidates: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate vectors supplied"));
    }
    let p = s.nrows();
    if candidates.iter().any(|c| c.len() != p) {
        return Err(Error::invalid(
            "candidate length must equal the number of rows in S",
        ));
    }
    let m = s * s.transpose();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut m_basis: Vec<DVector<f64>> = Vec::new();
    for (k, cand) in candidates.iter().enumerate() {
        let energy0 = cand.dot(&(&m * cand));
        if k == 0 && energy0 <= 0.0 {
            return Err(Error::degenerate(
                "first candidate has non-positive energy under S S^T",
            ));
        }
        let mut v = cand.clone();
        for _pass in 0..2 {
            for (u, mu) in basis.iter().zip(&m_basis) {
                let c = v.dot(mu);
                v.axpy(-c, u, 1.0);
            }
        }
        let energy = v.dot(&(&m * &v));
        if energy.is_nan() || energy <= DROP_REL_TOL * energy0 {
            continue;
        }
        let u = v / energy.sqrt();
        m_basis.push(&m * &u);
        basis.push(u);
    }
    Ok(basis)
}

/// Entry (j, k) of the approximate right-singular-vector matrix:
/// `sum_p X(i_p, j) * u_k(p)`. Cost O(P), independent of the row count.
pub fn description_entry(
    desc: &Description,
    store: &MatrixStore,
    j: usize,
    k: usize,
) -> Result<f64> {
    if j >= store.cols() {
        return Err(Error::invalid(format!("column index {j} out of range")));
    }
    if k >= desc.k_actual() {
        return Err(Error::invalid(format!("component index {k} out of range")));
    }
    let mut acc = 0.0;
    for (p, &i) in desc.source_rows.iter().enumerate() {
        if i >= store.rows() {
            return Err(Error::invalid(format!("source row {i} out of range")));
        }
        acc += store.data()[(i, j)] * desc.coeffs[k][p];
    }
    Ok(acc)
}

/// Expands the description into the dense J x K_actual matrix whose column
/// k is `S^T u_k`.
pub fn materialize(desc: &Description, store: &MatrixStore) -> Result<DMatrix<f64>> {
    let s = store.gather_rows(&desc.source_rows)?;
    Ok(s.transpose() * desc.coeff_stack())
}
