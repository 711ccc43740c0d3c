use crate::autoencoder::FeatureRecord;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::gru::{train_classifier, ClassifierConfig, GruClassifier};
use crate::rng::substream;
use rand::seq::SliceRandom;
use rayon::prelude::*;

/// Stats of one fold, taken at its early-stopping epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldStats {
    pub fold: usize,
    pub best_epoch: usize,
    pub train_acc: f64,
    pub val_acc: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

impl FoldStats {
    pub const TSV_HEADER: &'static str = "fold\tbest_epoch\ttrain_acc\tval_acc\ttrain_loss\tval_loss";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.fold, self.best_epoch, self.train_acc, self.val_acc, self.train_loss, self.val_loss
        )
    }

    pub fn parse_tsv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::format(format!("fold row has {} fields: `{line}`", f.len())));
        }
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::format(format!("bad number `{s}`"))) };
        let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| Error::format(format!("bad integer `{s}`"))) };
        Ok(FoldStats {
            fold: int(f[0])?,
            best_epoch: int(f[1])?,
            train_acc: num(f[2])?,
            val_acc: num(f[3])?,
            train_loss: num(f[4])?,
            val_loss: num(f[5])?,
        })
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Assigns indices to `k` folds: each label's indices are shuffled and dealt
/// round-robin, so fold sizes per label differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::argument(format!("{k} folds; need at least 2")));
    }
    let mut rng = substream(seed, "cv.assign");
    let mut folds = vec![Vec::new(); k];
    for label in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if idx.len() < k {
            return Err(Error::argument(format!(
                "{} records of label {} cannot fill {k} folds",
                idx.len(),
                label.as_u8()
            )));
        }
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub folds: Vec<FoldStats>,
    pub assignment: Vec<Vec<usize>>,
    /// Epochs used to retrain on the full pool: the median fold best epoch.
    pub final_epochs: usize,
    pub model: GruClassifier<f32>,
}

fn median(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]).div_ceil(2)
    }
}

/// Stratified k-fold training with early stopping per fold, then a final
/// model trained on the whole pool for the median best epoch count.
pub fn kfold_cv(pool: &[FeatureRecord], cfg: &ClassifierConfig, seed: u64) -> Result<CvOutcome> {
    let labels: Vec<Label> = pool.iter().map(|r| r.label).collect();
    let assignment = stratified_folds(&labels, cfg.folds, seed)?;
    let folds: Vec<FoldStats> = assignment
        .par_iter()
        .enumerate()
        .map(|(j, held)| {
            let mut in_fold = vec![false; pool.len()];
            held.iter().for_each(|&i| in_fold[i] = true);
            let train: Vec<FeatureRecord> = (0..pool.len()).filter(|&i| !in_fold[i]).map(|i| pool[i].clone()).collect();
            let val: Vec<FeatureRecord> = held.iter().map(|&i| pool[i].clone()).collect();
            let fit = train_classifier(&train, Some(&val), cfg, None, &mut substream(seed, &format!("cv.fold{j}")))?;
            let best = fit.best();
            Ok(FoldStats {
                fold: j + 1,
                best_epoch: fit.best_epoch,
                train_acc: best.train_acc,
                val_acc: best.val_acc.unwrap_or(f64::NAN),
                train_loss: best.train_loss,
                val_loss: best.val_loss.unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<_>>()?;
    let final_epochs = median(folds.iter().map(|f| f.best_epoch).collect());
    let fit = train_classifier(pool, None, cfg, Some(final_epochs), &mut substream(seed, "cv.final"))?;
    Ok(CvOutcome {
        folds,
        assignment,
        final_epochs,
        model: fit.model,
    })
}
