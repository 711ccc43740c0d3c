//! End-to-end orchestration: ingest, oversample, features, split, classify,
//! evaluate. Every stage reads its inputs from and writes its outputs to one
//! output directory, so stages can also be run one at a time.

mod checkpoint;
mod config;
mod cv;
mod run;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::PipelineConfig;
pub use cv::{kfold_cv, mean_std, stratified_folds, CvOutcome, FoldStats};
pub use run::{
    content_hash, evaluate_stage, features_stage, load_classifier, oversample_stage, prepare, run_all, synth,
    train_stage, write_report, FeatureSummary, OutputLayout, OversampleSummary, PrepareSummary, Provenance,
    RunReport, SealedTestSet, TrainSummary,
};
