//! Gated recurrent unit with hand-written backpropagation through time, and
//! the two-class sequence classifier built on it.
//!
//! Gate convention, per step with row vectors:
//!
//! ```text
//! r = σ(x·W_r + h·U_r + b_r)
//! z = σ(x·W_z + h·U_z + b_z)
//! n = tanh(x·W_h + (r ⊙ h)·U_h + b_h)
//! h' = z ⊙ h + (1 − z) ⊙ n
//! ```
//!
//! `z` weights the *previous* state. Saturating `z` toward one passes the
//! state through unchanged.

mod cell;
mod classifier;

pub use cell::{bptt, bptt_steps, cell_forward, seq_forward, BpttOutput, GruParams, GruStep, GruTrace};
pub use classifier::{
    classify, evaluate_classifier, features_to_sequence, train_classifier, ClassifierConfig,
    ClassifierFit, ClassifierHead, EpochStats, GruClassifier,
};
