use super::train::{ae_train, extract, AeFit, AeTrainConfig};
use super::FeatureRecord;
use crate::corpus::{EncodedLog, Label};
use crate::error::{Error, Result};
use crate::rng::substream;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashSet;

/// Variance of the Gaussian noise added to every feature entry.
pub const NOISE_VARIANCE: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct DualOutput {
    pub features: Vec<FeatureRecord>,
    pub positive: AeFit,
    pub negative: AeFit,
    /// Rows left after dedup, before noise.
    pub pre_noise_count: usize,
    /// Order in which the post-training stages ran.
    pub stages: Vec<&'static str>,
}

/// Drops feature rows whose (label, features rounded to 6 decimals) was
/// already seen. Keeps first occurrences in order.
pub fn dedup_features(records: &[FeatureRecord]) -> Vec<FeatureRecord> {
    let mut seen = HashSet::with_capacity(records.len());
    records
        .iter()
        .filter(|r| {
            let key: Vec<i64> = r.features.iter().map(|&x| (x as f64 * 1e6).round() as i64).collect();
            seen.insert((r.label, key))
        })
        .cloned()
        .collect()
}

pub fn add_gaussian_noise(records: &mut [FeatureRecord], variance: f64, rng: &mut impl Rng) -> Result<()> {
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|e| Error::argument(format!("noise variance {variance}: {e}")))?;
    for r in records.iter_mut() {
        for x in r.features.iter_mut() {
            *x += normal.sample(rng) as f32;
        }
    }
    Ok(())
}

/// Trains the positive and negative autoencoders concurrently, extracts and
/// labels both sides, concatenates, dedups, adds noise and shuffles.
pub fn dual_pipeline(
    positives: &[EncodedLog],
    negatives: &[EncodedLog],
    vocab_size: usize,
    cfg: &AeTrainConfig,
    noise_variance: f64,
    seed: u64,
) -> Result<DualOutput> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::argument("dual autoencoder needs records of both labels"));
    }
    let (pos_fit, neg_fit) = rayon::join(
        || ae_train(positives, vocab_size, cfg, &mut substream(seed, "ae.positive")),
        || ae_train(negatives, vocab_size, cfg, &mut substream(seed, "ae.negative")),
    );
    let (pos_fit, neg_fit) = (pos_fit?, neg_fit?);
    let mut stages = vec!["train"];

    let mut features = extract(positives, &pos_fit.params, Label::Positive, vocab_size)?;
    features.extend(extract(negatives, &neg_fit.params, Label::Negative, vocab_size)?);
    stages.push("extract");

    let mut features = dedup_features(&features);
    let pre_noise_count = features.len();
    stages.push("dedup");

    add_gaussian_noise(&mut features, noise_variance, &mut substream(seed, "ae.noise"))?;
    stages.push("noise");

    features.shuffle(&mut substream(seed, "ae.shuffle"));
    stages.push("shuffle");

    Ok(DualOutput {
        features,
        positive: pos_fit,
        negative: neg_fit,
        pre_noise_count,
        stages,
    })
}
