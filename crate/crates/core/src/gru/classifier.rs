use super::cell::{bptt, seq_forward, GruParams};
use crate::autoencoder::FeatureRecord;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::nn::{
    cross_entropy, dropout_mask, mat_vec_acc, outer_acc, softmax, vec_mat_acc, Adam, AdamConfig,
    ParamTensor, Parameters, Real,
};
use crate::rng::Rng;
use rand::seq::SliceRandom;

/// Affine map from the final hidden state to two logits.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierHead<T = f32> {
    pub w_out: ParamTensor<T>,
    pub b_out: ParamTensor<T>,
}

impl<T: Real> ClassifierHead<T> {
    pub fn zeros(hidden_dim: usize) -> Self {
        ClassifierHead {
            w_out: ParamTensor::zeros(hidden_dim, 2),
            b_out: ParamTensor::zeros(1, 2),
        }
    }

    fn logits(&self, h: &[T]) -> Vec<T> {
        let mut out = self.b_out.value.as_slice().to_vec();
        vec_mat_acc(h, &self.w_out.value, &mut out);
        out
    }
}

/// Softmax over the head applied to the GRU's final state.
pub fn classify<T: Real, X: AsRef<[T]>>(
    feature_seq: &[X],
    params: &GruParams<T>,
    head: &ClassifierHead<T>,
) -> Result<Vec<T>> {
    if head.w_out.shape() != (params.hidden_dim, 2) {
        return Err(Error::Shape {
            op: "classifier head",
            left: head.w_out.shape(),
            right: (params.hidden_dim, 2),
        });
    }
    let trace = seq_forward(feature_seq, params, None)?;
    softmax(&head.logits(trace.final_state()))
}

/// Splits a flat feature vector into GRU steps of `input_dim` values.
pub fn features_to_sequence<T: Real>(features: &[T], input_dim: usize) -> Vec<&[T]> {
    features.chunks(input_dim).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GruClassifier<T = f32> {
    pub gru: GruParams<T>,
    pub head: ClassifierHead<T>,
}

impl<T: Real> GruClassifier<T> {
    pub fn new(input_dim: usize, hidden_dim: usize, rng: &mut impl rand::Rng) -> Self {
        GruClassifier {
            gru: GruParams::new(input_dim, hidden_dim, rng),
            head: ClassifierHead {
                w_out: ParamTensor::xavier(hidden_dim, 2, rng),
                b_out: ParamTensor::zeros(1, 2),
            },
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.gru.hidden_dim
    }

    /// Class probabilities indexed by [`Label::index`].
    pub fn predict_proba(&self, features: &[T]) -> Result<Vec<T>> {
        if !features.len().is_multiple_of(self.gru.input_dim) {
            return Err(Error::Shape {
                op: "classifier input",
                left: (1, features.len()),
                right: (1, self.gru.input_dim),
            });
        }
        classify(&features_to_sequence(features, self.gru.input_dim), &self.gru, &self.head)
    }

    pub fn predict(&self, features: &[T]) -> Result<Label> {
        let p = self.predict_proba(features)?;
        Ok(if p[1] >= p[0] { Label::Positive } else { Label::Negative })
    }

    /// Forward and backward for one example; gradients are scaled by `weight`
    /// and accumulated. Returns `(loss, probabilities)`.
    pub fn accumulate(
        &mut self,
        features: &[T],
        label: Label,
        keep_prob: f64,
        weight: T,
        rng: &mut Rng,
    ) -> Result<(T, Vec<T>)> {
        let seq = features_to_sequence(features, self.gru.input_dim);
        let trace = seq_forward(&seq, &self.gru, None)?;
        let mask: Vec<T> = dropout_mask(self.gru.hidden_dim, keep_prob, rng)?;
        let h: Vec<T> = trace.final_state().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
        let probs = softmax(&self.head.logits(&h))?;
        let mut target = [T::zero(); 2];
        target[label.index()] = T::one();
        let loss = cross_entropy(&probs, &target)?;

        let dlogits: Vec<T> = probs.iter().zip(&target).map(|(&p, &t)| (p - t) * weight).collect();
        outer_acc(&mut self.head.w_out.grad, &h, &dlogits);
        crate::nn::add_acc(self.head.b_out.grad.as_mut_slice(), &dlogits);
        let mut dh = vec![T::zero(); self.gru.hidden_dim];
        mat_vec_acc(&self.head.w_out.value, &dlogits, &mut dh);
        dh.iter_mut().zip(&mask).for_each(|(d, &m)| *d *= m);
        bptt(&trace, &dh, &mut self.gru)?;
        Ok((loss, probs))
    }

    pub fn cast<U: Real>(&self) -> GruClassifier<U> {
        GruClassifier {
            gru: self.gru.cast(),
            head: ClassifierHead {
                w_out: self.head.w_out.cast(),
                b_out: self.head.b_out.cast(),
            },
        }
    }
}

impl<T: Real> Parameters<T> for GruClassifier<T> {
    fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        let mut v: Vec<_> = self
            .gru
            .named_params()
            .into_iter()
            .map(|(n, p)| (format!("gru.{n}"), p))
            .collect();
        v.push(("head.w_out".into(), &self.head.w_out));
        v.push(("head.b_out".into(), &self.head.b_out));
        v
    }

    fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)> {
        let mut v: Vec<_> = self
            .gru
            .named_params_mut()
            .into_iter()
            .map(|(n, p)| (format!("gru.{n}"), p))
            .collect();
        v.push(("head.w_out".into(), &mut self.head.w_out));
        v.push(("head.b_out".into(), &mut self.head.b_out));
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub keep_prob: f64,
    pub patience: usize,
    pub folds: usize,
    pub clip_norm: f64,
    pub adam: AdamConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            input_dim: 1,
            hidden_dim: 100,
            max_epochs: 100,
            batch_size: 128,
            keep_prob: 0.8,
            patience: 5,
            folds: 10,
            clip_norm: 5.0,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ClassifierFit {
    pub model: GruClassifier<f32>,
    pub history: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl ClassifierFit {
    pub fn best(&self) -> &EpochStats {
        &self.history[self.best_epoch - 1]
    }
}

/// Mean loss and accuracy in inference mode.
pub fn evaluate_classifier(model: &GruClassifier<f32>, records: &[FeatureRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::argument("cannot evaluate on an empty set"));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for r in records {
        let p = model.predict_proba(&r.features)?;
        let mut target = [0.0f32; 2];
        target[r.label.index()] = 1.0;
        loss += cross_entropy(&p, &target)? as f64;
        let pred = if p[1] >= p[0] { Label::Positive } else { Label::Negative };
        correct += usize::from(pred == r.label);
    }
    let n = records.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Mini-batch ADAM training. With `val`, stops after `patience` epochs
/// without a lower validation loss and returns the best epoch's parameters;
/// without it, runs `epochs` (or `max_epochs`) and returns the last.
pub fn train_classifier(
    train: &[FeatureRecord],
    val: Option<&[FeatureRecord]>,
    cfg: &ClassifierConfig,
    epochs: Option<usize>,
    rng: &mut Rng,
) -> Result<ClassifierFit> {
    if train.is_empty() {
        return Err(Error::argument("classifier training set is empty"));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::argument("batch_size and max_epochs must be positive"));
    }
    let mut model = GruClassifier::<f32>::new(cfg.input_dim, cfg.hidden_dim, rng);
    let mut opt = Adam::new(&model, &cfg.adam);
    let n_epochs = epochs.unwrap_or(cfg.max_epochs).max(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, GruClassifier<f32>)> = None;
    let mut stale = 0usize;

    for epoch in 1..=n_epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            model.zero_grad();
            let w = 1.0 / batch.len() as f32;
            for &i in batch {
                let r = &train[i];
                let (loss, p) = model.accumulate(&r.features, r.label, cfg.keep_prob, w, rng)?;
                loss_sum += loss as f64;
                let pred = if p[1] >= p[0] { Label::Positive } else { Label::Negative };
                correct += usize::from(pred == r.label);
            }
            if !model.grads_finite() {
                return Err(Error::numeric(format!("non-finite classifier gradient in epoch {epoch}")));
            }
            model.clip_grad_norm(cfg.clip_norm as f32);
            opt.step(&mut model)?;
        }
        let mut stats = EpochStats {
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss: None,
            val_acc: None,
        };
        if let Some(val) = val {
            let (vl, va) = evaluate_classifier(&model, val)?;
            stats.val_loss = Some(vl);
            stats.val_acc = Some(va);
            history.push(stats);
            if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                best = Some((vl, epoch, model.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        } else {
            history.push(stats);
        }
    }
    let (model, best_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (model, history.len()),
    };
    Ok(ClassifierFit {
        model,
        history,
        best_epoch,
    })
}
