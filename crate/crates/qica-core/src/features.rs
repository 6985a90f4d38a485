//! Second-order monomial feature expansion.
//!
//! Maps an N x D matrix to N x (D + D(D-1)/2): the raw columns followed by
//! the elementwise products of every distinct column pair (d1, d2), d1 < d2,
//! in lexicographic order. Squared columns are excluded by default so the
//! output dimension matches the pair count; an option adds them back for
//! experimentation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Refuse to materialize expansions wider than this unless overridden.
pub const DEFAULT_COLUMN_CAP: usize = 10_000_000;

/// Deterministic layout of a second-order expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMap {
    input_dim: usize,
    include_squares: bool,
}

impl FeatureMap {
    /// Pairs-only expansion with the default column cap.
    pub fn second_order(input_dim: usize) -> Result<Self> {
        Self::with_options(input_dim, false, DEFAULT_COLUMN_CAP)
    }

    pub fn with_options(input_dim: usize, include_squares: bool, cap: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be at least 1"));
        }
        let map = FeatureMap {
            input_dim,
            include_squares,
        };
        match map.checked_output_dim() {
            Some(dim) if dim <= cap => Ok(map),
            Some(dim) => Err(Error::CapacityExceeded { needed: dim, cap }),
            None => Err(Error::CapacityExceeded {
                needed: usize::MAX,
                cap,
            }),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `D + D(D-1)/2`, plus D more when squares are included.
    pub fn output_dim(&self) -> usize {
        self.checked_output_dim().expect("checked at construction")
    }

    fn checked_output_dim(&self) -> Option<usize> {
        let d = self.input_dim;
        let pairs = d.checked_mul(d - 1)? / 2;
        let squares = if self.include_squares { d } else { 0 };
        d.checked_add(pairs)?.checked_add(squares)
    }

    /// Column pairs in lexicographic order (d1 < d2).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.input_dim;
        (0..d).flat_map(move |d1| ((d1 + 1)..d).map(move |d2| (d1, d2)))
    }

    /// Expands each row: raw features first, then pair products (then
    /// squares, if enabled).
    pub fn expand(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::invalid(format!(
                "matrix has {} columns but the map expects {}",
                x.ncols(),
                self.input_dim
            )));
        }
        let n = x.nrows();
        let mut out = DMatrix::zeros(n, self.output_dim());
        out.columns_mut(0, self.input_dim).copy_from(x);
        let mut col = self.input_dim;
        for (d1, d2) in self.pairs() {
            for i in 0..n {
                out[(i, col)] = x[(i, d1)] * x[(i, d2)];
            }
            col += 1;
        }
        if self.include_squares {
            for d in 0..self.input_dim {
                for i in 0..n {
                    out[(i, col)] = x[(i, d)] * x[(i, d)];
                }
                col += 1;
            }
        }
        Ok(out)
    }
}

/// Pairs-only expansion with default settings.
pub fn expand_second_order(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    FeatureMap::second_order(x.ncols())?.expand(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn three_features_expand_to_six() {
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let e = expand_second_order(&x).unwrap();
        assert_eq!(
            e,
            DMatrix::from_row_slice(1, 6, &[1.0, 2.0, 3.0, 2.0, 3.0, 6.0])
        );
    }

    #[test]
    fn single_feature_is_unchanged() {
        let x = DMatrix::from_row_slice(2, 1, &[4.0, 5.0]);
        assert_eq!(expand_second_order(&x).unwrap(), x);
    }

    #[test]
    fn output_dim_formula() {
        assert_eq!(FeatureMap::second_order(64).unwrap().output_dim(), 2080);
        for d in 1..30 {
            let map = FeatureMap::second_order(d).unwrap();
            assert_eq!(map.output_dim(), d + d * (d - 1) / 2);
            assert_eq!(map.pairs().count(), d * (d - 1) / 2);
        }
    }

    #[test]
    fn squares_option_adds_d_columns() {
        let map = FeatureMap::with_options(3, true, DEFAULT_COLUMN_CAP).unwrap();
        assert_eq!(map.output_dim(), 3 + 3 + 3);
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let e = map.expand(&x).unwrap();
        assert_eq!(
            e,
            DMatrix::from_row_slice(1, 9, &[1.0, 2.0, 3.0, 2.0, 3.0, 6.0, 1.0, 4.0, 9.0])
        );
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            FeatureMap::with_options(10_000, false, DEFAULT_COLUMN_CAP),
            Err(Error::CapacityExceeded { .. })
        ));
        assert!(FeatureMap::with_options(10, false, 55).is_ok());
        assert!(matches!(
            FeatureMap::with_options(11, false, 55),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn expansion_commutes_with_row_selection() {
        let mut rng = rng_from_seed(5);
        let x = DMatrix::from_fn(7, 5, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let whole = expand_second_order(&x).unwrap();
        for n in 0..7 {
            let row = DMatrix::from_fn(1, 5, |_, j| x[(n, j)]);
            let expanded_row = expand_second_order(&row).unwrap();
            for j in 0..whole.ncols() {
                assert_eq!(whole[(n, j)], expanded_row[(0, j)]);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let map = FeatureMap::second_order(4).unwrap();
        let x = DMatrix::zeros(3, 5);
        assert!(matches!(map.expand(&x), Err(Error::InvalidInput(_))));
    }
}
