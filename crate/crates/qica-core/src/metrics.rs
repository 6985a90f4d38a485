//! Evaluation metrics: low-rank recovery, summed canonical correlations,
//! and mean retrieval AUC.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of squared Frobenius mass of X captured by the span of the
/// column-orthonormal V: `1 - ||X - X V V^T||_F^2 / ||X||_F^2`, computed as
/// `||X V||_F^2 / ||X||_F^2` (equivalent for orthonormal V and numerically
/// safer). An empty V scores 0.
pub fn recovery_score(x: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    let x_sq: f64 = x.iter().map(|a| a * a).sum();
    if x_sq <= 0.0 {
        return Err(Error::degenerate("recovery of a zero matrix is undefined"));
    }
    if v.ncols() == 0 {
        return Ok(0.0);
    }
    if v.nrows() != x.ncols() {
        return Err(Error::invalid(format!(
            "V has {} rows but X has {} columns",
            v.nrows(),
            x.ncols()
        )));
    }
    let gram = v.transpose() * v;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            if (gram[(i, j)] - target).abs() > 1e-6 {
                return Err(Error::invalid(
                    "V is not column-orthonormal within 1e-6".to_string(),
                ));
            }
        }
    }
    let projected = x * v;
    let p_sq: f64 = projected.iter().map(|a| a * a).sum();
    // mathematically <= 1 for orthonormal V; trim floating-point excess
    Ok((p_sq / x_sq).min(1.0))
}

/// Per-component Pearson correlations and their sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSum {
    pub sum: f64,
    pub per_component: Vec<f64>,
    /// Components with a zero-variance variate, reported as correlation 0
    /// instead of aborting; these show up when K exceeds the effective rank.
    pub degenerate_components: Vec<usize>,
}

/// Sums the Pearson correlation of the first `k_max` matched variate pairs.
/// Uses the (N-1) variance convention; the metric is scale-invariant so the
/// convention only matters for intermediate values.
pub fn sum_correlations(
    c_x: &DMatrix<f64>,
    c_y: &DMatrix<f64>,
    k_max: usize,
) -> Result<CorrelationSum> {
    if c_x.shape() != c_y.shape() {
        return Err(Error::invalid("variate matrices must share a shape"));
    }
    if c_x.nrows() < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    if k_max > c_x.ncols() {
        return Err(Error::invalid(format!(
            "k_max {} exceeds the {} available components",
            k_max,
            c_x.ncols()
        )));
    }
    let n = c_x.nrows() as f64;
    let mut per_component = Vec::with_capacity(k_max);
    let mut degenerate = Vec::new();
    for k in 0..k_max {
        let a = c_x.column(k);
        let b = c_y.column(k);
        let ma = a.mean();
        let mb = b.mean();
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for i in 0..c_x.nrows() {
            let da = a[i] - ma;
            let db = b[i] - mb;
            cov += da * db;
            va += da * da;
            vb += db * db;
        }
        cov /= n - 1.0;
        va /= n - 1.0;
        vb /= n - 1.0;
        let corr = cov / (va.sqrt() * vb.sqrt());
        if va <= 0.0 || vb <= 0.0 || !corr.is_finite() {
            degenerate.push(k);
            per_component.push(0.0);
        } else {
            per_component.push(corr);
        }
    }
    Ok(CorrelationSum {
        sum: per_component.iter().sum(),
        per_component,
        degenerate_components: degenerate,
    })
}

/// Mean retrieval AUC over all targets.
///
/// For target t, items are ranked by `tau(n) = ||C_X(t,:) - C_Y(n,:)||` and
/// the per-target score is `1 - #{n : tau(n) < tau(t)} / N`; the inequality
/// is strict, so ties (and the target itself) never count against it.
pub fn mean_auc(c_x: &DMatrix<f64>, c_y: &DMatrix<f64>) -> Result<f64> {
    let targets: Vec<usize> = (0..c_x.nrows()).collect();
    mean_auc_over_targets(c_x, c_y, &targets)
}

/// Mean AUC over an explicit target subset; useful when N is large enough
/// that the full O(N^2) scan is unwanted.
pub fn mean_auc_over_targets(
    c_x: &DMatrix<f64>,
    c_y: &DMatrix<f64>,
    targets: &[usize],
) -> Result<f64> {
    if c_x.shape() != c_y.shape() {
        return Err(Error::invalid("variate matrices must share a shape"));
    }
    let n = c_x.nrows();
    if n < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    if targets.is_empty() {
        return Err(Error::invalid("need at least one target"));
    }
    let k = c_x.ncols();
    let mut total = 0.0;
    for &t in targets {
        if t >= n {
            return Err(Error::invalid(format!("target {t} out of range")));
        }
        let dist_sq = |row: usize| -> f64 {
            let mut s = 0.0;
            for j in 0..k {
                let d = c_x[(t, j)] - c_y[(row, j)];
                s += d * d;
            }
            s
        };
        let own = dist_sq(t);
        let closer = (0..n).filter(|&row| dist_sq(row) < own).count();
        total += 1.0 - closer as f64 / n as f64;
    }
    Ok(total / targets.len() as f64)
}

/// One metric evaluation, ready for JSON/CSV emission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric_name: String,
    pub value: f64,
    pub k: usize,
    pub n_samples: usize,
    pub parameters: serde_json::Value,
}
