//! Sequence GAN oversampler for the minority class.
//!
//! The generator is a GRU language model over token ids; the discriminator a
//! small text CNN. After MLE pretraining the generator is trained as a policy
//! whose per-token reward is the discriminator's verdict on Monte Carlo
//! completions drawn from a frozen copy of itself.

mod discriminator;
mod generator;
mod oversample;
mod policy;
mod reward;
mod train;

pub use discriminator::{disc_accumulate, disc_forward, ConvBank, DiscriminatorParams};
pub use generator::{mean_token_nll, sample_sequence, sequence_log_prob, weighted_nll_backward, GeneratorParams};
pub use oversample::{canonicalize, chunk_indices, oversample, OversampleConfig, OversampleOutput};
pub use policy::{accumulate_policy_gradient, policy_gradient_step, RewardedSequence};
pub use reward::{enumerate_completions, exhaustive_reward, mc_reward, sequence_rewards, RolloutConfig, MAX_ENUMERATION};
pub use train::{
    adversarial_train, disc_accuracy, pretrain_generator, sample_batch, train_discriminator, train_seqgan, DiscStats,
    GanArchitecture, GanData, GanSchedule, RoundDiagnostics, RoundEvent, SeqGanConfig, SeqGanRun,
};
