use super::discriminator::{disc_accumulate, disc_forward, DiscriminatorParams};
use super::generator::{mean_token_nll, sample_sequence, weighted_nll_backward, GeneratorParams};
use super::policy::{policy_gradient_step, RewardedSequence};
use super::reward::{sequence_rewards, RolloutConfig};
use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, Parameters};
use crate::rng::{indexed, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use std::collections::HashSet;

/// Layer sizes of the generator and discriminator.
#[derive(Clone, Debug, PartialEq)]
pub struct GanArchitecture {
    pub gen_embed_dim: usize,
    pub gen_hidden_dim: usize,
    pub disc_embed_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub disc_keep_prob: f64,
}

impl Default for GanArchitecture {
    fn default() -> Self {
        GanArchitecture {
            gen_embed_dim: 30,
            gen_hidden_dim: 30,
            disc_embed_dim: 32,
            filter_widths: vec![1, 2, 3, 4],
            filters_per_width: 25,
            disc_keep_prob: 0.75,
        }
    }
}

impl GanArchitecture {
    pub fn generator(&self, vocab_size: usize, rng: &mut impl rand::Rng) -> GeneratorParams<f32> {
        GeneratorParams::new(vocab_size, self.gen_embed_dim, self.gen_hidden_dim, rng)
    }

    pub fn discriminator(&self, vocab_size: usize, rng: &mut impl rand::Rng) -> DiscriminatorParams<f32> {
        DiscriminatorParams::new(
            vocab_size,
            self.disc_embed_dim,
            &self.filter_widths,
            self.filters_per_width,
            self.disc_keep_prob,
            rng,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GanSchedule {
    pub pretrain_gen_epochs: usize,
    pub pretrain_disc_epochs: usize,
    pub adversarial_rounds: usize,
    pub g_steps_per_round: usize,
    pub d_steps_per_round: usize,
    /// Step size of the policy-gradient ascent.
    pub policy_lr: f64,
    /// Batch size for MLE pretraining and discriminator training.
    pub batch_size: usize,
    /// Sequences sampled per policy-gradient step.
    pub pg_batch_size: usize,
    pub gen_adam: AdamConfig,
    pub disc_adam: AdamConfig,
    /// Consecutive epochs/rounds of worsening held-out NLL tolerated.
    pub patience: usize,
    pub holdout_fraction: f64,
}

impl Default for GanSchedule {
    fn default() -> Self {
        GanSchedule {
            pretrain_gen_epochs: 30,
            pretrain_disc_epochs: 3,
            adversarial_rounds: 10,
            g_steps_per_round: 1,
            d_steps_per_round: 1,
            policy_lr: 0.05,
            batch_size: 128,
            pg_batch_size: 32,
            gen_adam: AdamConfig::with_alpha(1e-2),
            disc_adam: AdamConfig::with_alpha(1e-3),
            patience: 3,
            holdout_fraction: 0.1,
        }
    }
}

impl GanSchedule {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.pretrain_gen_epochs,
            self.pretrain_disc_epochs,
            self.adversarial_rounds,
            self.g_steps_per_round,
            self.d_steps_per_round,
            self.batch_size,
            self.pg_batch_size,
            self.patience,
        ];
        if counts.contains(&0) {
            return Err(Error::argument("GAN schedule counts must all be at least 1"));
        }
        if !(self.policy_lr > 0.0 && self.policy_lr.is_finite()) {
            return Err(Error::argument(format!("policy_lr {} must be positive", self.policy_lr)));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::argument("holdout_fraction outside [0, 1)"));
        }
        Ok(())
    }
}

/// Everything needed to train one SeqGAN.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SeqGanConfig {
    pub architecture: GanArchitecture,
    pub schedule: GanSchedule,
    pub rollout: RolloutConfig,
}

/// Real sequences split once into a training part and a held-out part used
/// for generator NLL, shared by pretraining and adversarial training.
#[derive(Clone, Debug, PartialEq)]
pub struct GanData {
    pub train: Vec<Vec<TokenId>>,
    pub holdout: Vec<Vec<TokenId>>,
}

impl GanData {
    pub fn split(mut seqs: Vec<Vec<TokenId>>, holdout_fraction: f64, rng: &mut Rng) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::argument("no real sequences to train on"));
        }
        let len = seqs[0].len();
        if len == 0 || seqs.iter().any(|s| s.len() != len) {
            return Err(Error::argument("real sequences must share one positive length"));
        }
        seqs.shuffle(rng);
        let n_hold = (holdout_fraction * seqs.len() as f64).floor() as usize;
        if n_hold == 0 || n_hold == seqs.len() {
            return Ok(GanData {
                holdout: seqs.clone(),
                train: seqs,
            });
        }
        let train = seqs.split_off(n_hold);
        Ok(GanData { train, holdout: seqs })
    }

    pub fn seq_len(&self) -> usize {
        self.train[0].len()
    }
}

/// Teacher-forced MLE training. Keeps the epoch with the lowest held-out
/// per-token NLL and returns that NLL for every epoch run.
pub fn pretrain_generator(
    gen: &mut GeneratorParams<f32>,
    data: &GanData,
    schedule: &GanSchedule,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    schedule.validate()?;
    if data.train.is_empty() {
        return Err(Error::argument("generator pretraining corpus is empty"));
    }
    let mut opt = Adam::new(gen, &schedule.gen_adam);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut history = Vec::new();
    let mut best = (mean_token_nll(gen, &data.holdout)?, gen.clone());
    let mut stale = 0;
    for epoch in 1..=schedule.pretrain_gen_epochs {
        order.shuffle(rng);
        for batch in order.chunks(schedule.batch_size) {
            gen.zero_grad();
            let t = data.seq_len() as f32;
            let w = vec![1.0 / (t * batch.len() as f32); data.seq_len()];
            for &i in batch {
                weighted_nll_backward(gen, &data.train[i], &w)?;
            }
            if !gen.grads_finite() {
                return Err(Error::numeric(format!("non-finite generator gradient in pretraining epoch {epoch}")));
            }
            gen.clip_grad_norm(5.0);
            opt.step(gen)?;
        }
        let nll = mean_token_nll(gen, &data.holdout)?;
        history.push(nll);
        if nll < best.0 {
            best = (nll, gen.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= schedule.patience {
                break;
            }
        }
    }
    *gen = best.1;
    Ok(history)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscStats {
    pub mean_loss: f64,
    pub accuracy: f64,
}

/// Binary cross-entropy training on real (1) versus generated (0)
/// sequences. Each step draws the same number of examples from both sides.
pub fn train_discriminator(
    disc: &mut DiscriminatorParams<f32>,
    real: &[Vec<TokenId>],
    generated: &[Vec<TokenId>],
    epochs: usize,
    batch_size: usize,
    opt: &mut Adam<f32>,
    rng: &mut Rng,
) -> Result<DiscStats> {
    if real.is_empty() || generated.is_empty() {
        return Err(Error::argument("discriminator needs real and generated examples"));
    }
    let half = (batch_size / 2).max(1);
    let steps = (real.len() + generated.len()).div_ceil(2 * half);
    let w = 1.0 / (2 * half) as f32;
    let (mut loss_sum, mut correct, mut seen) = (0.0f64, 0usize, 0usize);
    for _ in 0..epochs {
        for step in 0..steps {
            disc.zero_grad();
            for k in 0..2 * half {
                let is_real = k % 2 == 0;
                let pool = if is_real { real } else { generated };
                let seq = &pool[rng.random_range(0..pool.len())];
                let (loss, p) = disc_accumulate(disc, seq, is_real, w, rng)?;
                if !(loss.is_finite() && loss >= 0.0) {
                    return Err(Error::numeric(format!("discriminator loss {loss} at step {step}")));
                }
                loss_sum += loss as f64;
                correct += usize::from((p >= 0.5) == is_real);
                seen += 1;
            }
            if !disc.grads_finite() {
                return Err(Error::numeric("non-finite discriminator gradient"));
            }
            opt.step(disc)?;
        }
    }
    Ok(DiscStats {
        mean_loss: loss_sum / seen.max(1) as f64,
        accuracy: correct as f64 / seen.max(1) as f64,
    })
}

/// Fraction of `real` scored ≥ 0.5 and `generated` scored < 0.5.
pub fn disc_accuracy(disc: &DiscriminatorParams<f32>, real: &[Vec<TokenId>], generated: &[Vec<TokenId>]) -> Result<f64> {
    let mut correct = 0usize;
    for s in real {
        correct += usize::from(disc_forward(s, disc)? >= 0.5);
    }
    for s in generated {
        correct += usize::from(disc_forward(s, disc)? < 0.5);
    }
    Ok(correct as f64 / (real.len() + generated.len()).max(1) as f64)
}

pub fn sample_batch(gen: &GeneratorParams<f32>, n: usize, seq_len: usize, rng: &mut Rng) -> Result<Vec<Vec<TokenId>>> {
    (0..n).map(|_| sample_sequence(gen, seq_len, rng, None)).collect()
}

/// One row of adversarial-training diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundDiagnostics {
    pub round: usize,
    pub gen_nll: f64,
    pub mean_reward: f64,
    pub disc_accuracy: f64,
    pub unique_fraction: f64,
}

impl RoundDiagnostics {
    pub const TSV_HEADER: &'static str = "round\tgen_nll\tmean_reward\tdisc_accuracy\tunique_fraction";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.round, self.gen_nll, self.mean_reward, self.disc_accuracy, self.unique_fraction
        )
    }
}

/// Seen by the observer right after the rollout generator is refreshed.
pub struct RoundEvent<'a> {
    pub round: usize,
    pub generator: &'a GeneratorParams<f32>,
    pub rollout_generator: &'a GeneratorParams<f32>,
}

fn unique_fraction(seqs: &[Vec<TokenId>]) -> f64 {
    let set: HashSet<&Vec<TokenId>> = seqs.iter().collect();
    set.len() as f64 / seqs.len().max(1) as f64
}

/// Alternates policy-gradient generator steps, a refresh of the rollout
/// generator, and discriminator steps on fresh samples. Stops after the
/// round budget, or when held-out NLL has failed to improve on its best for
/// `patience` consecutive rounds.
pub fn adversarial_train(
    gen: &mut GeneratorParams<f32>,
    disc: &mut DiscriminatorParams<f32>,
    data: &GanData,
    schedule: &GanSchedule,
    rollout: &RolloutConfig,
    seed: u64,
    observer: &mut dyn FnMut(&RoundEvent<'_>),
) -> Result<Vec<RoundDiagnostics>> {
    schedule.validate()?;
    if rollout.n == 0 {
        return Err(Error::argument("rollout count must be positive"));
    }
    let seq_len = data.seq_len();
    let mut beta = gen.clone();
    let mut disc_opt = Adam::new(disc, &schedule.disc_adam);
    let mut best_nll = mean_token_nll(gen, &data.holdout)?;
    let mut stale = 0;
    let mut out = Vec::new();

    for round in 1..=schedule.adversarial_rounds {
        let r = round as u64;
        let mut reward_sum = 0.0;
        let mut reward_count = 0usize;
        for step in 0..schedule.g_steps_per_round {
            let s = step as u64;
            let seqs = sample_batch(gen, schedule.pg_batch_size, seq_len, &mut indexed(seed, &[r, 0, s]))?;
            let batch: Vec<RewardedSequence> = seqs
                .into_par_iter()
                .enumerate()
                .map(|(b, tokens)| {
                    let q = sequence_rewards(&tokens, &beta, disc, rollout.n, seed, &[r, 2, s, b as u64])?;
                    Ok(RewardedSequence { tokens, q })
                })
                .collect::<Result<_>>()?;
            for b in &batch {
                reward_sum += b.q.iter().sum::<f64>();
                reward_count += b.q.len();
            }
            policy_gradient_step(gen, &batch, schedule.policy_lr)
                .map_err(|e| Error::numeric(format!("adversarial round {round}, step {step}: {e}")))?;
        }
        beta.copy_values_from(gen)?;
        observer(&RoundEvent {
            round,
            generator: gen,
            rollout_generator: &beta,
        });

        let mut fresh = Vec::new();
        for d in 0..schedule.d_steps_per_round {
            let mut rng = indexed(seed, &[r, 1, d as u64]);
            fresh = sample_batch(gen, data.train.len(), seq_len, &mut rng)?;
            train_discriminator(disc, &data.train, &fresh, 1, schedule.batch_size, &mut disc_opt, &mut rng)?;
        }
        let eval_fake = sample_batch(gen, data.holdout.len(), seq_len, &mut indexed(seed, &[r, 3]))?;
        let gen_nll = mean_token_nll(gen, &data.holdout)?;
        if !gen_nll.is_finite() {
            return Err(Error::numeric(format!("generator NLL diverged in adversarial round {round}")));
        }
        out.push(RoundDiagnostics {
            round,
            gen_nll,
            mean_reward: reward_sum / reward_count.max(1) as f64,
            disc_accuracy: disc_accuracy(disc, &data.holdout, &eval_fake)?,
            unique_fraction: unique_fraction(&fresh),
        });
        if gen_nll < best_nll {
            best_nll = gen_nll;
            stale = 0;
        } else {
            stale += 1;
            if stale >= schedule.patience {
                break;
            }
        }
    }
    Ok(out)
}

/// A trained SeqGAN and its training record.
#[derive(Clone, Debug)]
pub struct SeqGanRun {
    pub generator: GeneratorParams<f32>,
    pub discriminator: DiscriminatorParams<f32>,
    pub pretrain_nll: Vec<f64>,
    pub rounds: Vec<RoundDiagnostics>,
}

/// Pretrains the generator, pretrains the discriminator against its
/// samples, then runs the adversarial rounds.
pub fn train_seqgan(real: &[Vec<TokenId>], vocab_size: usize, cfg: &SeqGanConfig, seed: u64) -> Result<SeqGanRun> {
    cfg.schedule.validate()?;
    let mut rng = crate::rng::substream(seed, "seqgan.init");
    let data = GanData::split(real.to_vec(), cfg.schedule.holdout_fraction, &mut rng)?;
    let mut gen = cfg.architecture.generator(vocab_size, &mut rng);
    let mut disc = cfg.architecture.discriminator(vocab_size, &mut rng);
    let pretrain_nll = pretrain_generator(&mut gen, &data, &cfg.schedule, &mut crate::rng::substream(seed, "seqgan.mle"))?;

    let mut drng = crate::rng::substream(seed, "seqgan.disc");
    let mut opt = Adam::new(&disc, &cfg.schedule.disc_adam);
    for _ in 0..cfg.schedule.pretrain_disc_epochs {
        let fake = sample_batch(&gen, data.train.len(), data.seq_len(), &mut drng)?;
        train_discriminator(&mut disc, &data.train, &fake, 1, cfg.schedule.batch_size, &mut opt, &mut drng)?;
    }
    let rounds = adversarial_train(
        &mut gen,
        &mut disc,
        &data,
        &cfg.schedule,
        &cfg.rollout,
        crate::rng::substream_seed(seed, "seqgan.adversarial"),
        &mut |_| {},
    )?;
    Ok(SeqGanRun {
        generator: gen,
        discriminator: disc,
        pretrain_nll,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    fn small_arch() -> GanArchitecture {
        GanArchitecture {
            gen_embed_dim: 8,
            gen_hidden_dim: 16,
            disc_embed_dim: 8,
            filter_widths: vec![1, 2, 3],
            filters_per_width: 8,
            disc_keep_prob: 0.75,
        }
    }

    fn fast_schedule() -> GanSchedule {
        GanSchedule {
            pretrain_gen_epochs: 5,
            pretrain_disc_epochs: 1,
            adversarial_rounds: 2,
            batch_size: 32,
            pg_batch_size: 8,
            ..GanSchedule::default()
        }
    }

    /// Sequences over tokens 1..=5 whose parity alternates.
    fn alternating(n: usize, len: usize, rng: &mut Rng) -> Vec<Vec<TokenId>> {
        (0..n)
            .map(|_| {
                let mut odd = rng.random_bool(0.5);
                (0..len)
                    .map(|_| {
                        let t = if odd { [1, 3, 5][rng.random_range(0..3)] } else { [2, 4][rng.random_range(0..2)] };
                        odd = !odd;
                        t
                    })
                    .collect()
            })
            .collect()
    }

    fn follows_grammar(s: &[TokenId]) -> bool {
        s.iter().all(|&t| t != 0) && s.windows(2).all(|w| w[0] % 2 != w[1] % 2)
    }

    fn grammar_rate(gen: &GeneratorParams<f32>, len: usize, seed: u64) -> f64 {
        let s = sample_batch(gen, 1000, len, &mut from_seed(seed)).unwrap();
        s.iter().filter(|x| follows_grammar(x)).count() as f64 / s.len() as f64
    }

    #[test]
    fn defaults_follow_the_reference_setup() {
        let a = GanArchitecture::default();
        assert_eq!((a.gen_hidden_dim, a.gen_embed_dim), (30, 30));
        assert_eq!(a.filter_widths, vec![1, 2, 3, 4]);
        assert_eq!(GanSchedule::default().batch_size, 128);
        assert_eq!(RolloutConfig::default().n, 16);
        assert!(GanSchedule {
            policy_lr: 0.0,
            ..GanSchedule::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn memorizes_a_repeated_sequence() {
        let seq: Vec<TokenId> = vec![3, 1, 4, 1, 5, 2, 6, 0];
        let data = GanData::split(vec![seq; 40], 0.1, &mut from_seed(0)).unwrap();
        let mut gen = small_arch().generator(7, &mut from_seed(1));
        let schedule = GanSchedule {
            pretrain_gen_epochs: 60,
            batch_size: 8,
            patience: 60,
            ..GanSchedule::default()
        };
        pretrain_generator(&mut gen, &data, &schedule, &mut from_seed(2)).unwrap();
        assert!(mean_token_nll(&gen, &data.holdout).unwrap() < 0.1);
    }

    #[test]
    fn pretraining_nll_mostly_decreases() {
        let seqs = alternating(300, 8, &mut from_seed(3));
        let data = GanData::split(seqs, 0.1, &mut from_seed(4)).unwrap();
        let mut gen = small_arch().generator(6, &mut from_seed(5));
        let schedule = GanSchedule {
            pretrain_gen_epochs: 5,
            batch_size: 32,
            patience: 5,
            ..GanSchedule::default()
        };
        let h = pretrain_generator(&mut gen, &data, &schedule, &mut from_seed(6)).unwrap();
        assert_eq!(h.len(), 5);
        let violations = h.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(violations <= 1, "{h:?}");
        assert!(pretrain_generator(&mut gen, &GanData { train: vec![], holdout: vec![] }, &schedule, &mut from_seed(0)).is_err());
    }

    fn disc_run(real: &[Vec<TokenId>], fake: &[Vec<TokenId>], held_real: &[Vec<TokenId>], held_fake: &[Vec<TokenId>], seed: u64) -> f64 {
        let mut rng = from_seed(seed);
        let mut disc = small_arch().discriminator(6, &mut rng);
        let mut opt = Adam::new(&disc, &AdamConfig::with_alpha(1e-2));
        let stats = train_discriminator(&mut disc, real, fake, 5, 32, &mut opt, &mut rng).unwrap();
        assert!(stats.mean_loss.is_finite() && stats.mean_loss >= 0.0);
        disc_accuracy(&disc, held_real, held_fake).unwrap()
    }

    #[test]
    fn discriminator_separates_disjoint_tokens() {
        let real = vec![vec![1; 8]; 100];
        let fake = vec![vec![0; 8]; 100];
        assert!(disc_run(&real, &fake, &real[..20], &fake[..20], 0) > 0.95);
        let mut rng = from_seed(1);
        let mk = |t: u32, rng: &mut Rng| -> Vec<Vec<TokenId>> {
            (0..120).map(|_| (0..8).map(|_| if rng.random_bool(0.7) { t } else { rng.random_range(2..6) }).collect()).collect()
        };
        let real = mk(1, &mut rng);
        let fake = mk(0, &mut rng);
        assert!(disc_run(&real[..100], &fake[..100], &real[100..], &fake[100..], 2) > 0.95);
    }

    #[test]
    fn discriminator_cannot_beat_chance_on_identical_distributions() {
        let mut accs: Vec<f64> = (0..5)
            .map(|seed| {
                let all = alternating(600, 8, &mut from_seed(100 + seed));
                disc_run(&all[..200], &all[200..400], &all[400..500], &all[500..], seed)
            })
            .collect();
        accs.sort_by(f64::total_cmp);
        assert!((0.4..=0.6).contains(&accs[2]), "{accs:?}");
    }

    #[test]
    fn discriminator_rejects_empty_batches() {
        let mut rng = from_seed(0);
        let mut disc = small_arch().discriminator(6, &mut rng);
        let mut opt = Adam::new(&disc, &AdamConfig::default());
        assert!(train_discriminator(&mut disc, &[], &[vec![1]], 1, 8, &mut opt, &mut rng).is_err());
    }

    #[test]
    fn rollout_generator_tracks_the_generator() {
        let seqs = alternating(60, 6, &mut from_seed(7));
        let data = GanData::split(seqs, 0.2, &mut from_seed(8)).unwrap();
        let mut rng = from_seed(9);
        let mut gen = small_arch().generator(6, &mut rng);
        let mut disc = small_arch().discriminator(6, &mut rng);
        let schedule = GanSchedule {
            adversarial_rounds: 3,
            patience: 10,
            ..fast_schedule()
        };
        let mut refreshes = 0;
        let rounds = adversarial_train(&mut gen, &mut disc, &data, &schedule, &RolloutConfig { n: 2 }, 5, &mut |ev| {
            assert!(ev.rollout_generator.values_bit_equal(ev.generator));
            refreshes += 1;
            assert_eq!(ev.round, refreshes);
        })
        .unwrap();
        assert!(rounds.len() <= 3);
        assert_eq!(refreshes, rounds.len());
        for r in &rounds {
            assert!(r.gen_nll.is_finite());
            assert!((0.0..=1.0).contains(&r.mean_reward));
            assert!((0.0..=1.0).contains(&r.unique_fraction));
        }
    }

    #[test]
    fn adversarial_training_is_deterministic() {
        let seqs = alternating(60, 6, &mut from_seed(10));
        let cfg = SeqGanConfig {
            architecture: small_arch(),
            schedule: fast_schedule(),
            rollout: RolloutConfig { n: 2 },
        };
        let a = train_seqgan(&seqs, 6, &cfg, 3).unwrap();
        let b = train_seqgan(&seqs, 6, &cfg, 3).unwrap();
        assert!(a.generator.values_bit_equal(&b.generator));
        assert_eq!(a.rounds, b.rounds);
    }

    #[test]
    fn adversarial_training_improves_grammar_adherence() {
        let mut gains: Vec<f64> = (0..5u64)
            .map(|seed| {
                let seqs = alternating(200, 6, &mut from_seed(200 + seed));
                let data = GanData::split(seqs, 0.1, &mut from_seed(seed)).unwrap();
                let mut rng = from_seed(300 + seed);
                let mut gen = small_arch().generator(6, &mut rng);
                let mut disc = small_arch().discriminator(6, &mut rng);
                let schedule = GanSchedule {
                    pretrain_gen_epochs: 3,
                    pretrain_disc_epochs: 3,
                    adversarial_rounds: 15,
                    pg_batch_size: 32,
                    patience: 15,
                    policy_lr: 0.5,
                    batch_size: 32,
                    disc_adam: AdamConfig::with_alpha(5e-3),
                    ..GanSchedule::default()
                };
                pretrain_generator(&mut gen, &data, &schedule, &mut rng).unwrap();
                let mut opt = Adam::new(&disc, &schedule.disc_adam);
                for _ in 0..schedule.pretrain_disc_epochs {
                    let fake = sample_batch(&gen, data.train.len(), 6, &mut rng).unwrap();
                    train_discriminator(&mut disc, &data.train, &fake, 1, 32, &mut opt, &mut rng).unwrap();
                }
                let before = grammar_rate(&gen, 6, 1);
                adversarial_train(&mut gen, &mut disc, &data, &schedule, &RolloutConfig { n: 8 }, seed, &mut |_| {}).unwrap();
                grammar_rate(&gen, 6, 1) - before
            })
            .collect();
        gains.sort_by(f64::total_cmp);
        assert!(gains[2] > 0.0, "{gains:?}");
    }
}
