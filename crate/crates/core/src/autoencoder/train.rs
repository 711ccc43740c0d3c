use super::model::{ae_backward, ae_forward, ae_input, AeParams, AE_DIMS};
use super::FeatureRecord;
use crate::corpus::{EncodedLog, Label};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, l1_penalty, Adam, AdamConfig, Parameters};
use crate::rng::Rng;
use rand::seq::SliceRandom;

#[derive(Clone, Debug, PartialEq)]
pub struct AeTrainConfig {
    pub dims: [usize; 5],
    pub max_epochs: usize,
    pub batch_size: usize,
    pub keep_prob: f64,
    pub patience: usize,
    pub l1_lambda: f64,
    /// Fraction of records held out for early stopping.
    pub holdout_fraction: f64,
    pub adam: AdamConfig,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        AeTrainConfig {
            dims: AE_DIMS,
            max_epochs: 100,
            batch_size: 128,
            keep_prob: 0.8,
            patience: 5,
            l1_lambda: 1e-5,
            holdout_fraction: 0.1,
            adam: AdamConfig::default(),
        }
    }
}

impl AeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::argument("max_epochs, batch_size and patience must be positive"));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::argument(format!("keep_prob {} outside (0, 1]", self.keep_prob)));
        }
        if !(self.l1_lambda >= 0.0 && self.l1_lambda.is_finite()) {
            return Err(Error::argument(format!("l1_lambda {} must be non-negative", self.l1_lambda)));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::argument(format!("holdout_fraction {} outside [0, 1)", self.holdout_fraction)));
        }
        if self.dims[0] != self.dims[4] || self.dims.contains(&0) {
            return Err(Error::argument(format!("bad autoencoder dims {:?}", self.dims)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AeFit {
    pub params: AeParams<f32>,
    pub label: Label,
    /// Per-epoch (train loss including L1, held-out reconstruction loss).
    pub history: Vec<(f64, f64)>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

/// Mean reconstruction cross-entropy in inference mode.
pub fn reconstruction_loss(params: &AeParams<f32>, inputs: &[Vec<f32>]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::argument("no inputs to score"));
    }
    let mut rng = crate::rng::from_seed(0);
    let mut total = 0.0f64;
    for x in inputs {
        let (out, _) = ae_forward(x, params, 1.0, &mut rng)?;
        total += cross_entropy(&out, x)? as f64;
    }
    Ok(total / inputs.len() as f64)
}

/// Trains one autoencoder on records that all carry the same label.
pub fn ae_train(records: &[EncodedLog], vocab_size: usize, cfg: &AeTrainConfig, rng: &mut Rng) -> Result<AeFit> {
    cfg.validate()?;
    let label = match records.first() {
        Some(r) => r.label,
        None => return Err(Error::argument("autoencoder training set is empty")),
    };
    if records.iter().any(|r| r.label != label) {
        return Err(Error::argument("autoencoder training records mix labels"));
    }
    if records[0].ids.len() != cfg.dims[0] {
        return Err(Error::argument(format!(
            "records have {} tokens, autoencoder expects {}",
            records[0].ids.len(),
            cfg.dims[0]
        )));
    }
    let inputs = records
        .iter()
        .map(|r| ae_input::<f32>(r, vocab_size))
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(rng);
    let n_hold = (cfg.holdout_fraction * inputs.len() as f64).floor() as usize;
    // Too few records to spare a holdout: monitor the training set instead.
    let (hold_idx, train_idx) = if n_hold == 0 || n_hold == inputs.len() {
        (order.clone(), order)
    } else {
        let (h, t) = order.split_at(n_hold);
        (h.to_vec(), t.to_vec())
    };
    let holdout: Vec<Vec<f32>> = hold_idx.iter().map(|&i| inputs[i].clone()).collect();
    let mut train_idx = train_idx;

    let mut params = AeParams::<f32>::new(cfg.dims, rng);
    let mut opt = Adam::new(&params, &cfg.adam);
    let lambda = cfg.l1_lambda as f32;
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, AeParams<f32>)> = None;
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(rng);
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        for batch in train_idx.chunks(cfg.batch_size) {
            params.zero_grad();
            let w = 1.0 / batch.len() as f32;
            let mut batch_loss = 0.0f64;
            for &i in batch {
                let x = &inputs[i];
                let (out, trace) = ae_forward(x, &params, cfg.keep_prob, rng)?;
                batch_loss += cross_entropy(&out, x)? as f64;
                ae_backward(&trace, x, &mut params, w)?;
            }
            batch_loss /= batch.len() as f64;
            if lambda > 0.0 {
                let (pen, grad) = l1_penalty(&params.layers[0].w.value, lambda);
                params.layers[0].w.grad.add_assign(&grad)?;
                batch_loss += pen as f64;
            }
            if !params.grads_finite() {
                return Err(Error::numeric(format!("non-finite autoencoder gradient in epoch {epoch}")));
            }
            opt.step(&mut params)?;
            loss_sum += batch_loss;
            batches += 1;
        }
        let val = reconstruction_loss(&params, &holdout)?;
        history.push((loss_sum / batches as f64, val));
        if best.as_ref().is_none_or(|(b, _, _)| val < *b) {
            best = Some((val, epoch, params.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(AeFit {
        params,
        label,
        history,
        best_epoch,
    })
}

/// Runs every record through a frozen autoencoder and tags the softmax
/// output with `label`.
pub fn extract(
    records: &[EncodedLog],
    params: &AeParams<f32>,
    label: Label,
    vocab_size: usize,
) -> Result<Vec<FeatureRecord>> {
    let mut rng = crate::rng::from_seed(0);
    records
        .iter()
        .map(|r| {
            let x = ae_input::<f32>(r, vocab_size)?;
            let (features, _) = ae_forward(&x, params, 1.0, &mut rng)?;
            Ok(FeatureRecord {
                features,
                label,
                origin: r.origin,
            })
        })
        .collect()
}
