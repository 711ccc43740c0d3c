//! Per-class autoencoders that turn encoded logs into 40-dimensional
//! feature vectors for the classifier.
//!
//! Layer plan is `40 → 400 → 200 → 200 → 40`: two tanh encoder layers (the
//! first under an L1 penalty), one tanh decoder layer, and a softmax output
//! trained with categorical cross-entropy against the input distribution.

mod dual;
mod io;
mod model;
mod train;

pub use crate::corpus::Origin;
pub use dual::{add_gaussian_noise, dedup_features, dual_pipeline, DualOutput, NOISE_VARIANCE};
pub use io::{read_features, write_features, FEATURE_MAGIC};
pub use model::{ae_backward, ae_forward, ae_input, AeParams, AeTrace, Dense, AE_DIMS};
pub use train::{ae_train, extract, reconstruction_loss, AeFit, AeTrainConfig};

use crate::corpus::Label;

/// Autoencoder output for one record, tagged with the class of the
/// autoencoder that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub features: Vec<f32>,
    pub label: Label,
    pub origin: Origin,
}
