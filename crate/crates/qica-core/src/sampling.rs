//! Prefix-sum tree for length-square sampling.
//!
//! [`SamplingTree`] stores the squared entries of a vector and samples an
//! index `n` with probability `x(n)^2 / ||x||^2` in O(log N) time. Leaves
//! hold `x(n)^2`; each internal node holds the sum of its children, so a
//! uniform variate can be pushed down the tree in one pass.
//!
//! Nodes use a fanout of 8 (one 64-byte cache line of `f64`) stored as
//! per-level arrays, leaves first. Internal levels then total less than
//! `N/7` entries and stay cache-resident, which keeps the cost of a draw
//! nearly flat in N. Levels are padded to a multiple of 8 with zero-weight
//! slots that sampling can never select.
//!
//! A draw with uniform `u` returns the unique `n` with
//! `prefix(n-1) <= u * total < prefix(n)`; a `u` that lands exactly on a
//! prefix boundary resolves to the higher index.

use crate::error::{Error, Result};

const FANOUT: usize = 16;

/// Prefix-sum tree over the squared entries of a vector.
#[derive(Debug, Clone)]
pub struct SamplingTree {
    leaf_count: usize,
    /// Per-level node values, flattened; level 0 (leaves) first.
    nodes: Vec<f64>,
    /// Start offset of each level in `nodes`, plus an end sentinel.
    level_offsets: Vec<usize>,
    total: f64,
}

impl SamplingTree {
    /// Builds a tree over raw vector entries; the tree owns the squaring.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        for (n, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite entry at index {n}")));
            }
            if !(v * v).is_finite() {
                return Err(Error::invalid(format!(
                    "entry at index {n} overflows when squared"
                )));
            }
        }
        Self::build(values.len(), values.iter().map(|&v| v * v))
    }

    /// Builds a tree whose leaves hold the given non-negative weights
    /// directly (no squaring). Used when the weights are already squared
    /// norms, e.g. the row-norm tree of a matrix store.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        for (n, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "weight at index {n} must be finite and non-negative, got {w}"
                )));
            }
        }
        Self::build(weights.len(), weights.iter().copied())
    }

    fn build(n: usize, leaf_weights: impl Iterator<Item = f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cannot build a sampling tree over an empty vector"));
        }
        let mut level_sizes = vec![n.div_ceil(FANOUT) * FANOUT];
        while *level_sizes.last().unwrap() > FANOUT {
            let prev = *level_sizes.last().unwrap();
            level_sizes.push((prev / FANOUT).div_ceil(FANOUT) * FANOUT);
        }
        let mut level_offsets = Vec::with_capacity(level_sizes.len() + 1);
        let mut acc = 0;
        for &s in &level_sizes {
            level_offsets.push(acc);
            acc += s;
        }
        level_offsets.push(acc);

        let mut nodes = vec![0.0; acc];
        for (i, w) in leaf_weights.enumerate() {
            nodes[i] = w;
        }
        let mut tree = SamplingTree {
            leaf_count: n,
            nodes,
            level_offsets,
            total: 0.0,
        };
        for lvl in 1..tree.num_levels() {
            // nodes beyond parent_count(lvl) are padding and stay zero
            for k in 0..tree.parent_count(lvl) {
                tree.set_node(lvl, k, tree.child_sum(lvl, k));
            }
        }
        tree.total = tree.top_sum();
        Ok(tree)
    }

    /// Number of (logical) leaves.
    pub fn len(&self) -> usize {
        self.leaf_count
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty vectors
    }

    /// Root value: the sum of all leaf weights (`||x||^2` for a value tree).
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Weight stored at leaf `n`.
    pub fn leaf(&self, n: usize) -> f64 {
        assert!(n < self.leaf_count, "leaf index out of range");
        self.nodes[n]
    }

    /// Number of levels, including the leaf level. Descent visits one
    /// 8-node block per level, so this bounds the per-draw work.
    pub fn depth(&self) -> usize {
        self.num_levels()
    }

    /// Samples a leaf index from the distribution `leaf(n) / total`.
    ///
    /// Requires `0 <= u < 1` and a positive total. Zero-weight leaves are
    /// never returned.
    pub fn sample_index(&self, u: f64) -> Result<usize> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::invalid(format!("uniform variate must be in [0,1), got {u}")));
        }
        if self.total <= 0.0 {
            return Err(Error::DegenerateDistribution(
                "sampling tree has zero total weight".into(),
            ));
        }
        let mut target = u * self.total;
        let mut idx = 0usize;
        for lvl in (0..self.num_levels()).rev() {
            let base = self.level_offsets[lvl] + FANOUT * idx;
            let block = &self.nodes[base..base + FANOUT];
            let mut run = 0.0;
            let mut chosen = usize::MAX;
            let mut last_positive = usize::MAX;
            for (c, &v) in block.iter().enumerate() {
                if v > 0.0 {
                    last_positive = c;
                }
                let next = run + v;
                if target < next {
                    chosen = c;
                    break;
                }
                run = next;
            }
            if chosen == usize::MAX {
                // Floating-point drift pushed the target past the block sum;
                // land in the rightmost non-empty subtree.
                chosen = last_positive;
                debug_assert!(chosen != usize::MAX, "descended into an all-zero block");
                target = block[chosen].next_down();
            } else {
                target -= run;
            }
            idx = FANOUT * idx + chosen;
        }
        debug_assert!(idx < self.leaf_count && self.nodes[idx] > 0.0);
        Ok(idx)
    }

    /// Replaces the value behind leaf `n` (the leaf stores `value^2`) and
    /// recomputes the ancestor path. Ancestors are recomputed as fresh child
    /// sums in build order, so the result is bit-identical to a rebuild.
    pub fn update_leaf(&mut self, n: usize, value: f64) -> Result<()> {
        if n >= self.leaf_count {
            return Err(Error::invalid(format!(
                "leaf index {n} out of range for tree with {} leaves",
                self.leaf_count
            )));
        }
        if !value.is_finite() || !(value * value).is_finite() {
            return Err(Error::invalid("leaf value must be finite and squarable"));
        }
        self.nodes[n] = value * value;
        let mut idx = n;
        for lvl in 1..self.num_levels() {
            let parent = idx / FANOUT;
            self.set_node(lvl, parent, self.child_sum(lvl, parent));
            idx = parent;
        }
        self.total = self.top_sum();
        Ok(())
    }

    /// Checks the structural invariants: all nodes non-negative, every
    /// internal node equal to the sum of its children and the root equal to
    /// the sum of all leaves, within `1e-9 * total` absolute tolerance.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-9 * self.total;
        for (i, &v) in self.nodes.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::invalid(format!("negative or NaN node at flat index {i}")));
            }
        }
        for lvl in 1..self.num_levels() {
            for k in 0..self.parent_count(lvl) {
                let node = self.nodes[self.level_offsets[lvl] + k];
                if (node - self.child_sum(lvl, k)).abs() > tol {
                    return Err(Error::invalid(format!(
                        "node {k} at level {lvl} disagrees with its children"
                    )));
                }
            }
        }
        let leaf_sum: f64 = self.nodes[..self.level_len(0)].iter().sum();
        if (self.total - leaf_sum).abs() > tol {
            return Err(Error::invalid("root disagrees with the leaf sum"));
        }
        Ok(())
    }

    fn num_levels(&self) -> usize {
        self.level_offsets.len() - 1
    }

    fn level_len(&self, lvl: usize) -> usize {
        self.level_offsets[lvl + 1] - self.level_offsets[lvl]
    }

    /// Nodes at `lvl` that actually have children (the rest are padding).
    fn parent_count(&self, lvl: usize) -> usize {
        self.level_len(lvl - 1) / FANOUT
    }

    fn set_node(&mut self, lvl: usize, k: usize, v: f64) {
        let off = self.level_offsets[lvl];
        self.nodes[off + k] = v;
    }

    fn child_sum(&self, lvl: usize, k: usize) -> f64 {
        let base = self.level_offsets[lvl - 1] + FANOUT * k;
        let mut s = 0.0;
        for c in 0..FANOUT {
            s += self.nodes[base + c];
        }
        s
    }

    fn top_sum(&self) -> f64 {
        let top = self.num_levels() - 1;
        let base = self.level_offsets[top];
        let mut s = 0.0;
        for c in 0..self.level_len(top) {
            s += self.nodes[base + c];
        }
        s
    }

    #[cfg(test)]
    fn flat_nodes(&self) -> &[f64] {
        &self.nodes
    }
}
