//! Sampling store over a dense matrix.
//!
//! [`MatrixStore`] wraps an I x J matrix together with I+1 prefix-sum trees:
//! one tree over the squared row norms, plus one tree per row. This supports
//! row sampling with probability `F(i) = ||X(i,:)||^2 / ||X||_F^2`, two-stage
//! column sampling with marginal
//! `G(j) = (1/P) * sum_p X(i_p,j)^2 / ||X(i_p,:)||^2`, and construction of
//! the P x P importance-weighted sketch with entries
//! `X(i_p, j_q) / (P * sqrt(F(i_p) * G(j_q)))`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SampleRng;
use crate::sampling::SamplingTree;

/// Dense matrix plus the trees needed for length-square sampling.
///
/// Immutable after construction; sampling only reads.
#[derive(Debug, Clone)]
pub struct MatrixStore {
    data: DMatrix<f64>,
    row_norm_tree: SamplingTree,
    row_trees: Vec<SamplingTree>,
    frob_sq: f64,
}

/// Output of [`MatrixStore::matrix_sampling`]: the reweighted P x P sketch
/// and the sampled row/column indices (duplicates permitted).
#[derive(Debug, Clone)]
pub struct SketchResult {
    pub w: DMatrix<f64>,
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
}

impl MatrixStore {
    /// Builds the store, taking ownership of the matrix.
    ///
    /// Fails with `InvalidInput` on empty or non-finite input and with
    /// `DegenerateInput` on an all-zero matrix (the row distribution would
    /// be undefined).
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid("matrix must have at least one row and column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix contains a non-finite entry"));
        }
        let mut scratch = vec![0.0; data.ncols()];
        let mut row_trees = Vec::with_capacity(data.nrows());
        for i in 0..data.nrows() {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = data[(i, j)];
            }
            row_trees.push(SamplingTree::from_values(&scratch)?);
        }
        // Reusing the per-row totals as the row-norm leaves keeps the two
        // tree layers exactly consistent.
        let row_norms: Vec<f64> = row_trees.iter().map(|t| t.total()).collect();
        let row_norm_tree = SamplingTree::from_weights(&row_norms)?;
        let frob_sq = row_norm_tree.total();
        if frob_sq <= 0.0 {
            return Err(Error::degenerate(
                "all-zero matrix: the row distribution is undefined",
            ));
        }
        Ok(MatrixStore {
            data,
            row_norm_tree,
            row_trees,
            frob_sq,
        })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `||X||_F^2`.
    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    /// `||X(i,:)||^2`.
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row_norm_tree.leaf(i)
    }

    /// Row-sampling probability `F(i)`.
    pub fn row_prob(&self, i: usize) -> f64 {
        self.row_norm_tree.leaf(i) / self.frob_sq
    }

    /// Exact column marginal `G(j)` induced by the given sampled rows,
    /// accumulated in row-index order.
    pub fn column_prob(&self, row_indices: &[usize], j: usize) -> f64 {
        let mut g = 0.0;
        for &i in row_indices {
            let x = self.data[(i, j)];
            g += x * x / self.row_norm_tree.leaf(i);
        }
        g / row_indices.len() as f64
    }

    /// Samples a row index from `F`.
    pub fn sample_row(&self, u: f64) -> Result<usize> {
        self.row_norm_tree.sample_index(u)
    }

    /// Two-stage column sample: `u1` picks one of the given rows uniformly,
    /// `u2` samples a column from that row's within-row distribution. The
    /// marginal over columns is `G`.
    pub fn sample_column(&self, row_indices: &[usize], u1: f64, u2: f64) -> Result<usize> {
        if row_indices.is_empty() {
            return Err(Error::invalid("row index list must be non-empty"));
        }
        if !(0.0..1.0).contains(&u1) {
            return Err(Error::invalid(format!("uniform variate must be in [0,1), got {u1}")));
        }
        let p = ((u1 * row_indices.len() as f64) as usize).min(row_indices.len() - 1);
        let i = row_indices[p];
        if i >= self.rows() {
            return Err(Error::invalid(format!("row index {i} out of range")));
        }
        self.row_trees[i].sample_index(u2).map_err(|e| match e {
            Error::DegenerateDistribution(_) => Error::DegenerateDistribution(format!(
                "row {i} is all-zero; its within-row distribution is undefined"
            )),
            other => other,
        })
    }

    /// Gathers the given rows into a dense matrix (row p = `X(i_p,:)`).
    pub fn gather_rows(&self, indices: &[usize]) -> Result<DMatrix<f64>> {
        for &i in indices {
            if i >= self.rows() {
                return Err(Error::invalid(format!("row index {i} out of range")));
            }
        }
        Ok(DMatrix::from_fn(indices.len(), self.cols(), |p, j| {
            self.data[(indices[p], j)]
        }))
    }

    /// Draws P rows from `F` and P columns from `G`, then assembles the
    /// reweighted sketch. Sampling is with replacement; the RNG consumes
    /// one uniform per row draw, then two per column draw, in that order.
    pub fn matrix_sampling(&self, p: usize, rng: &mut SampleRng) -> Result<SketchResult> {
        if p == 0 {
            return Err(Error::invalid("sketch size P must be at least 1"));
        }
        let mut row_indices = Vec::with_capacity(p);
        for _ in 0..p {
            row_indices.push(self.sample_row(rng.random())?);
        }
        let mut col_indices = Vec::with_capacity(p);
        for _ in 0..p {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            col_indices.push(self.sample_column(&row_indices, u1, u2)?);
        }
        let pf = p as f64;
        let mut w = DMatrix::zeros(p, p);
        for (q, &j) in col_indices.iter().enumerate() {
            let g = self.column_prob(&row_indices, j);
            for (pi, &i) in row_indices.iter().enumerate() {
                let f = self.row_prob(i);
                w[(pi, q)] = self.data[(i, j)] / (pf * (f * g).sqrt());
            }
        }
        Ok(SketchResult {
            w,
            row_indices,
            col_indices,
        })
    }
}
