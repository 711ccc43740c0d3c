//! Imbalanced log anomaly detection: oversample the minority class with a
//! sequence GAN, extract per-class features with a pair of autoencoders, and
//! classify the result with a GRU.
//!
//! Every network here is written out by hand, forward and backward, on top of
//! the small dense layer in [`nn`]. Gradients are verified against central
//! finite differences in the test suites.

pub mod autoencoder;
pub mod corpus;
pub mod error;
pub mod gru;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod seqgan;

pub use autoencoder::{AeParams, AeTrainConfig, FeatureRecord, Origin};
pub use corpus::{EncodedLog, Label, LogRecord, SplitSpec, Vocabulary};
pub use error::{Error, Result};
pub use gru::{ClassifierConfig, ClassifierHead, GruClassifier, GruParams, GruTrace};
pub use metrics::{ConfusionCounts, MetricsReport};
pub use nn::{AdamConfig, AdamState, Matrix, ParamTensor, Parameters, Real};
pub use pipeline::{PipelineConfig, RunReport};
pub use seqgan::{DiscriminatorParams, GanSchedule, GeneratorParams, RolloutConfig};
