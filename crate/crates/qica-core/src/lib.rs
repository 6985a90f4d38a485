//! Quantum-inspired SVD and CCA at desk scale.
//!
//! The pieces, bottom up:
//!
//! - [`sampling`]: prefix-sum trees for O(log N) length-square sampling;
//! - [`store`]: the (I+1)-tree matrix store, row/column samplers, and the
//!   reweighted P x P sketch;
//! - [`linalg`]: exact economy SVD (backed by nalgebra) and centering;
//! - [`qisvd`]: sketch -> small SVD -> coefficient descriptions of right
//!   singular vectors, with metric Gram-Schmidt orthonormalization;
//! - [`cca`]: the exact SVD-route CCA baseline;
//! - [`qicca`]: CCA with both left factors replaced by qiSVD descriptions;
//! - [`features`]: second-order monomial expansion;
//! - [`metrics`]: recovery score, summed correlations, retrieval AUC;
//! - [`data`]: seeded synthetic generators and matrix file formats.
//!
//! All sampling is driven by explicit seeds through [`rng::SampleRng`]
//! (ChaCha8), so any result can be reproduced from its recorded
//! configuration.

pub mod cca;
pub mod data;
pub mod error;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod qicca;
pub mod qisvd;
pub mod rng;
pub mod sampling;
pub mod store;

pub use cca::{canonical_variates, cca, CcaModel};
pub use data::{gen_lowrank, gen_pcca, load_matrix, save_matrix, DatasetPair, MatrixFormat};
pub use error::{Error, Result};
pub use features::{expand_second_order, FeatureMap};
pub use linalg::{apply_centering, center_columns, svd, SvdFactors};
pub use metrics::{mean_auc, recovery_score, sum_correlations, CorrelationSum, EvalReport};
pub use qicca::{
    dense_weights, qicca, variates_from_description, QiCcaModel, QiccaParams, SavedQiccaModel,
    WeightDescription,
};
pub use qisvd::{
    description_entry, materialize, orthonormalize, qisvd, qisvd_from_sketch, qisvd_with,
    Description, QisvdOptions,
};
pub use rng::{rng_from_seed, substream, SampleRng};
pub use sampling::SamplingTree;
pub use store::{MatrixStore, SketchResult};
