//! Seeded fixtures shared by the kernel benchmarks.

use logbal::autoencoder::AE_DIMS;
use logbal::corpus::{TokenId, SEQ_LEN};
use logbal::gru::GruClassifier;
use logbal::rng::from_seed;
use logbal::seqgan::GanArchitecture;
use logbal::{AeParams, DiscriminatorParams, GeneratorParams};
use rand::Rng;

/// Vocabulary size of a mid-sized log corpus.
pub const VOCAB: usize = 500;

pub fn classifier() -> GruClassifier<f32> {
    GruClassifier::new(1, 100, &mut from_seed(1))
}

pub fn feature_vector(seed: u64) -> Vec<f32> {
    let mut rng = from_seed(seed);
    (0..SEQ_LEN).map(|_| rng.random_range(-0.5..0.5)).collect()
}

pub fn autoencoder() -> AeParams<f32> {
    AeParams::new(AE_DIMS, &mut from_seed(2))
}

pub fn ae_vector(seed: u64) -> Vec<f32> {
    let mut rng = from_seed(seed);
    let raw: Vec<f32> = (0..SEQ_LEN).map(|_| rng.random_range(1.0..50.0)).collect();
    let total: f32 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn gan() -> (GeneratorParams<f32>, DiscriminatorParams<f32>) {
    let arch = GanArchitecture::default();
    let mut rng = from_seed(3);
    (arch.generator(VOCAB, &mut rng), arch.discriminator(VOCAB, &mut rng))
}

pub fn token_sequence(seed: u64) -> Vec<TokenId> {
    let mut rng = from_seed(seed);
    (0..SEQ_LEN).map(|_| rng.random_range(2..VOCAB as TokenId)).collect()
}
