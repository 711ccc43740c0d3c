use super::generator::sample_sequence;
use super::train::{train_seqgan, SeqGanConfig, SeqGanRun};
use crate::corpus::{dedup, EncodedLog, Label, Origin, TokenId, PAD_ID};
use crate::error::{Error, Result};
use crate::rng::{indexed, substream_seed};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq)]
pub struct OversampleConfig {
    pub seqgan: SeqGanConfig,
    /// Number of contiguous chunks the negatives are split into, one SeqGAN each.
    pub chunk_count: usize,
    /// Generation budget as a multiple of the number of missing records.
    pub budget_factor: usize,
    /// Samples drawn per chunk between merges.
    pub block_size: usize,
}

impl Default for OversampleConfig {
    fn default() -> Self {
        OversampleConfig {
            seqgan: SeqGanConfig::default(),
            chunk_count: 2,
            budget_factor: 20,
            block_size: 256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OversampleOutput {
    /// Originals first, then unique generated records, exactly the target count.
    pub records: Vec<EncodedLog>,
    /// The trained SeqGAN of each chunk.
    pub chunk_runs: Vec<SeqGanRun>,
    pub drawn: usize,
    pub accepted: usize,
}

impl OversampleOutput {
    /// Fraction of drawn samples that were duplicates or empty.
    pub fn duplicate_fraction(&self) -> f64 {
        if self.drawn == 0 {
            0.0
        } else {
            1.0 - self.accepted as f64 / self.drawn as f64
        }
    }
}

/// Forces everything after the first PAD to PAD, matching how real records
/// are encoded.
pub fn canonicalize(seq: &mut [TokenId]) {
    if let Some(p) = seq.iter().position(|&t| t == PAD_ID) {
        seq[p..].fill(PAD_ID);
    }
}

/// Near-equal contiguous chunks of a seeded shuffle.
pub fn chunk_indices(n: usize, chunk_count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::rng::substream(seed, "oversample.chunks"));
    let base = n / chunk_count;
    let extra = n % chunk_count;
    let mut out = Vec::with_capacity(chunk_count);
    let mut start = 0;
    for c in 0..chunk_count {
        let len = base + usize::from(c < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Grows the negative set to `target` records with SeqGAN samples.
pub fn oversample(
    negatives: &[EncodedLog],
    target: usize,
    vocab_size: usize,
    cfg: &OversampleConfig,
    seed: u64,
) -> Result<OversampleOutput> {
    if cfg.chunk_count == 0 {
        return Err(Error::argument("chunk_count must be at least 1"));
    }
    if target < negatives.len() {
        return Err(Error::argument(format!(
            "target {target} is below the {} records already present",
            negatives.len()
        )));
    }
    if negatives.iter().any(|r| r.label != Label::Negative) {
        return Err(Error::argument("oversampling expects negative records only"));
    }
    if target == negatives.len() {
        return Ok(OversampleOutput {
            records: negatives.to_vec(),
            chunk_runs: Vec::new(),
            drawn: 0,
            accepted: 0,
        });
    }
    if cfg.chunk_count > negatives.len() {
        return Err(Error::argument(format!(
            "{} chunks for {} records",
            cfg.chunk_count,
            negatives.len()
        )));
    }
    if cfg.block_size == 0 || cfg.budget_factor == 0 {
        return Err(Error::argument("block_size and budget_factor must be positive"));
    }
    let seq_len = negatives[0].ids.len();
    let chunks = chunk_indices(negatives.len(), cfg.chunk_count, seed);
    let runs: Vec<SeqGanRun> = chunks
        .par_iter()
        .enumerate()
        .map(|(c, idx)| {
            let real: Vec<Vec<TokenId>> = idx.iter().map(|&i| negatives[i].ids.clone()).collect();
            train_seqgan(&real, vocab_size, &cfg.seqgan, substream_seed(seed, &format!("oversample.chunk{c}")))
        })
        .collect::<Result<_>>()?;

    let mut records = dedup(negatives);
    let mut seen: HashSet<Vec<TokenId>> = records.iter().map(|r| r.ids.clone()).collect();
    let budget = cfg.budget_factor * (target - negatives.len());
    let mut drawn = 0usize;
    let mut accepted = 0usize;
    let mut block = 0u64;
    while records.len() < target && drawn < budget {
        let per_chunk = cfg.block_size.min((budget - drawn).div_ceil(runs.len()));
        let blocks: Vec<Vec<Vec<TokenId>>> = runs
            .par_iter()
            .enumerate()
            .map(|(c, run)| {
                let mut rng = indexed(seed, &[c as u64, block]);
                (0..per_chunk)
                    .map(|_| sample_sequence(&run.generator, seq_len, &mut rng, None))
                    .collect()
            })
            .collect::<Result<_>>()?;
        block += 1;
        'merge: for j in 0..per_chunk {
            for b in &blocks {
                if records.len() >= target || drawn >= budget {
                    break 'merge;
                }
                let mut ids = b[j].clone();
                drawn += 1;
                canonicalize(&mut ids);
                if ids[0] == PAD_ID || !seen.insert(ids.clone()) {
                    continue;
                }
                accepted += 1;
                records.push(EncodedLog {
                    ids,
                    label: Label::Negative,
                    origin: Origin::Generated,
                });
            }
        }
    }
    if records.len() < target {
        return Err(Error::PartialResult {
            achieved: records.len(),
            target,
            records: Box::new(records),
        });
    }
    Ok(OversampleOutput {
        records,
        chunk_runs: runs,
        drawn,
        accepted,
    })
}
