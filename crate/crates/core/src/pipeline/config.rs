//! Flat `key = value` configuration. Lines starting with `#` are comments;
//! every field of [`PipelineConfig`] has exactly one key.

use crate::autoencoder::AeTrainConfig;
use crate::corpus::{SplitSpec, SynthConfig};
use crate::error::{Error, Result};
use crate::gru::ClassifierConfig;
use crate::seqgan::OversampleConfig;
use sha2::{Digest, Sha256};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// `label<TAB>message` corpus. Relative paths resolve against the
    /// config file's directory.
    pub corpus: PathBuf,
    /// Dataset name written to the report.
    pub dataset: String,
    pub seed: u64,
    pub oversample: bool,
    /// Negatives are grown to `round(balance_ratio · positives)`.
    pub balance_ratio: f64,
    pub min_count: usize,
    pub noise_variance: f64,
    pub split: SplitSpec,
    pub synth: SynthConfig,
    pub gan: OversampleConfig,
    pub ae: AeTrainConfig,
    pub classifier: ClassifierConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: PathBuf::from("corpus.tsv"),
            dataset: "synthetic".into(),
            seed: 0,
            oversample: true,
            balance_ratio: 1.0,
            min_count: 1,
            noise_variance: crate::autoencoder::NOISE_VARIANCE,
            split: SplitSpec::default(),
            synth: SynthConfig::default(),
            gan: OversampleConfig::default(),
            ae: AeTrainConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::format(format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        let gan = &mut self.gan;
        let arch = &mut gan.seqgan.architecture;
        let sched = &mut gan.seqgan.schedule;
        let clf = &mut self.classifier;
        match key {
            "corpus" => self.corpus = PathBuf::from(v),
            "dataset" => self.dataset = v.to_string(),
            "seed" => self.seed = parse(key, v)?,
            "oversample" => self.oversample = parse(key, v)?,
            "balance_ratio" => self.balance_ratio = parse(key, v)?,
            "min_count" => self.min_count = parse(key, v)?,
            "noise_variance" => self.noise_variance = parse(key, v)?,

            "split.test_fraction" => self.split.test_fraction = parse(key, v)?,
            "split.val_fraction" => self.split.val_fraction_of_train = parse(key, v)?,
            "split.shuffle" => self.split.shuffle = parse(key, v)?,

            "synth.records" => self.synth.n_total = parse(key, v)?,
            "synth.negative_fraction" => self.synth.negative_fraction = parse(key, v)?,
            "synth.templates" => self.synth.n_templates = parse(key, v)?,

            "gan.chunk_count" => gan.chunk_count = parse(key, v)?,
            "gan.budget_factor" => gan.budget_factor = parse(key, v)?,
            "gan.block_size" => gan.block_size = parse(key, v)?,
            "gan.rollouts" => gan.seqgan.rollout.n = parse(key, v)?,
            "gan.gen_embed_dim" => arch.gen_embed_dim = parse(key, v)?,
            "gan.gen_hidden_dim" => arch.gen_hidden_dim = parse(key, v)?,
            "gan.disc_embed_dim" => arch.disc_embed_dim = parse(key, v)?,
            "gan.filter_widths" => arch.filter_widths = parse_list(key, v)?,
            "gan.filters_per_width" => arch.filters_per_width = parse(key, v)?,
            "gan.disc_keep_prob" => arch.disc_keep_prob = parse(key, v)?,
            "gan.pretrain_gen_epochs" => sched.pretrain_gen_epochs = parse(key, v)?,
            "gan.pretrain_disc_epochs" => sched.pretrain_disc_epochs = parse(key, v)?,
            "gan.adversarial_rounds" => sched.adversarial_rounds = parse(key, v)?,
            "gan.g_steps" => sched.g_steps_per_round = parse(key, v)?,
            "gan.d_steps" => sched.d_steps_per_round = parse(key, v)?,
            "gan.policy_lr" => sched.policy_lr = parse(key, v)?,
            "gan.batch_size" => sched.batch_size = parse(key, v)?,
            "gan.pg_batch_size" => sched.pg_batch_size = parse(key, v)?,
            "gan.gen_learning_rate" => sched.gen_adam.alpha = parse(key, v)?,
            "gan.disc_learning_rate" => sched.disc_adam.alpha = parse(key, v)?,
            "gan.patience" => sched.patience = parse(key, v)?,
            "gan.holdout_fraction" => sched.holdout_fraction = parse(key, v)?,

            "ae.dims" => {
                let d = parse_list(key, v)?;
                self.ae.dims = d
                    .try_into()
                    .map_err(|_| Error::format("`ae.dims` needs exactly five widths"))?;
            }
            "ae.max_epochs" => self.ae.max_epochs = parse(key, v)?,
            "ae.batch_size" => self.ae.batch_size = parse(key, v)?,
            "ae.keep_prob" => self.ae.keep_prob = parse(key, v)?,
            "ae.patience" => self.ae.patience = parse(key, v)?,
            "ae.l1_lambda" => self.ae.l1_lambda = parse(key, v)?,
            "ae.holdout_fraction" => self.ae.holdout_fraction = parse(key, v)?,
            "ae.learning_rate" => self.ae.adam.alpha = parse(key, v)?,

            "clf.input_dim" => clf.input_dim = parse(key, v)?,
            "clf.hidden_dim" => clf.hidden_dim = parse(key, v)?,
            "clf.max_epochs" => clf.max_epochs = parse(key, v)?,
            "clf.batch_size" => clf.batch_size = parse(key, v)?,
            "clf.keep_prob" => clf.keep_prob = parse(key, v)?,
            "clf.patience" => clf.patience = parse(key, v)?,
            "clf.folds" => clf.folds = parse(key, v)?,
            "clf.clip_norm" => clf.clip_norm = parse(key, v)?,
            "clf.learning_rate" => clf.adam.alpha = parse(key, v)?,

            "adam.beta1" | "adam.beta2" | "adam.epsilon" => {
                let x: f64 = parse(key, v)?;
                for a in [&mut self.ae.adam, &mut sched.gen_adam, &mut sched.disc_adam, &mut clf.adam] {
                    match key {
                        "adam.beta1" => a.beta1 = x,
                        "adam.beta2" => a.beta2 = x,
                        _ => a.epsilon = x,
                    }
                }
            }
            _ => return Err(Error::format(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let gan = &self.gan;
        let arch = &gan.seqgan.architecture;
        let sched = &gan.seqgan.schedule;
        let clf = &self.classifier;
        vec![
            ("corpus", self.corpus.display().to_string()),
            ("dataset", self.dataset.clone()),
            ("seed", self.seed.to_string()),
            ("oversample", self.oversample.to_string()),
            ("balance_ratio", self.balance_ratio.to_string()),
            ("min_count", self.min_count.to_string()),
            ("noise_variance", self.noise_variance.to_string()),
            ("split.test_fraction", self.split.test_fraction.to_string()),
            ("split.val_fraction", self.split.val_fraction_of_train.to_string()),
            ("split.shuffle", self.split.shuffle.to_string()),
            ("synth.records", self.synth.n_total.to_string()),
            ("synth.negative_fraction", self.synth.negative_fraction.to_string()),
            ("synth.templates", self.synth.n_templates.to_string()),
            ("gan.chunk_count", gan.chunk_count.to_string()),
            ("gan.budget_factor", gan.budget_factor.to_string()),
            ("gan.block_size", gan.block_size.to_string()),
            ("gan.rollouts", gan.seqgan.rollout.n.to_string()),
            ("gan.gen_embed_dim", arch.gen_embed_dim.to_string()),
            ("gan.gen_hidden_dim", arch.gen_hidden_dim.to_string()),
            ("gan.disc_embed_dim", arch.disc_embed_dim.to_string()),
            ("gan.filter_widths", join(&arch.filter_widths)),
            ("gan.filters_per_width", arch.filters_per_width.to_string()),
            ("gan.disc_keep_prob", arch.disc_keep_prob.to_string()),
            ("gan.pretrain_gen_epochs", sched.pretrain_gen_epochs.to_string()),
            ("gan.pretrain_disc_epochs", sched.pretrain_disc_epochs.to_string()),
            ("gan.adversarial_rounds", sched.adversarial_rounds.to_string()),
            ("gan.g_steps", sched.g_steps_per_round.to_string()),
            ("gan.d_steps", sched.d_steps_per_round.to_string()),
            ("gan.policy_lr", sched.policy_lr.to_string()),
            ("gan.batch_size", sched.batch_size.to_string()),
            ("gan.pg_batch_size", sched.pg_batch_size.to_string()),
            ("gan.gen_learning_rate", sched.gen_adam.alpha.to_string()),
            ("gan.disc_learning_rate", sched.disc_adam.alpha.to_string()),
            ("gan.patience", sched.patience.to_string()),
            ("gan.holdout_fraction", sched.holdout_fraction.to_string()),
            ("ae.dims", join(&self.ae.dims)),
            ("ae.max_epochs", self.ae.max_epochs.to_string()),
            ("ae.batch_size", self.ae.batch_size.to_string()),
            ("ae.keep_prob", self.ae.keep_prob.to_string()),
            ("ae.patience", self.ae.patience.to_string()),
            ("ae.l1_lambda", self.ae.l1_lambda.to_string()),
            ("ae.holdout_fraction", self.ae.holdout_fraction.to_string()),
            ("ae.learning_rate", self.ae.adam.alpha.to_string()),
            ("clf.input_dim", clf.input_dim.to_string()),
            ("clf.hidden_dim", clf.hidden_dim.to_string()),
            ("clf.max_epochs", clf.max_epochs.to_string()),
            ("clf.batch_size", clf.batch_size.to_string()),
            ("clf.keep_prob", clf.keep_prob.to_string()),
            ("clf.patience", clf.patience.to_string()),
            ("clf.folds", clf.folds.to_string()),
            ("clf.clip_norm", clf.clip_norm.to_string()),
            ("clf.learning_rate", clf.adam.alpha.to_string()),
            ("adam.beta1", clf.adam.beta1.to_string()),
            ("adam.beta2", clf.adam.beta2.to_string()),
            ("adam.epsilon", clf.adam.epsilon.to_string()),
        ]
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::format(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if cfg.corpus.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.corpus = dir.join(&cfg.corpus);
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.ae.validate()?;
        self.gan.seqgan.schedule.validate()?;
        if !(self.balance_ratio > 0.0 && self.balance_ratio.is_finite()) {
            return Err(Error::argument("balance_ratio must be positive"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::argument("noise_variance must be non-negative"));
        }
        if self.classifier.folds < 2 {
            return Err(Error::argument("clf.folds must be at least 2"));
        }
        if self.gan.chunk_count == 0 {
            return Err(Error::argument("gan.chunk_count must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 over every setting except the corpus location and seed, which
    /// provenance records separately.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if k != "corpus" && k != "seed" {
                h.update(format!("{k}={v}\n"));
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
