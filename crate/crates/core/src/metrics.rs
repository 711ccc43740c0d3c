//! Binary classification metrics. A metric with a zero denominator is an
//! [`Error::UndefinedMetric`], shown as `n/a` in reports.

use crate::corpus::Label;
use crate::error::{Error, Result};
use std::fmt;

/// Confusion counts with one label playing the positive role.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Tallies `(predicted, truth)` pairs with `positive` as the positive class.
    pub fn from_pairs(pairs: &[(Label, Label)], positive: Label) -> Self {
        let mut c = ConfusionCounts::default();
        for &(pred, truth) in pairs {
            match (pred == positive, truth == positive) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    match c.total() {
        0 => Err(Error::UndefinedMetric("accuracy")),
        n => Ok((c.tp + c.tn) as f64 / n as f64),
    }
}

pub fn precision(c: &ConfusionCounts) -> Result<f64> {
    match c.tp + c.fp {
        0 => Err(Error::UndefinedMetric("precision")),
        d => Ok(c.tp as f64 / d as f64),
    }
}

pub fn recall(c: &ConfusionCounts) -> Result<f64> {
    match c.tp + c.fn_ {
        0 => Err(Error::UndefinedMetric("recall")),
        d => Ok(c.tp as f64 / d as f64),
    }
}

/// Harmonic mean of precision and recall.
pub fn f_measure(p: f64, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&r) {
        return Err(Error::argument(format!("precision {p} / recall {r} outside [0, 1]")));
    }
    if p + r == 0.0 {
        return Err(Error::UndefinedMetric("f_measure"));
    }
    Ok(2.0 * p * r / (p + r))
}

/// A metric that may be undefined for the data at hand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric(pub Option<f64>);

impl Metric {
    fn of(r: Result<f64>) -> Self {
        Metric(r.ok())
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }
}

/// Percent with one decimal, or `n/a`.
impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{:.1}%", v * 100.0),
            None => f.write_str("n/a"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelRow {
    pub label: Label,
    pub counts: ConfusionCounts,
    pub precision: Metric,
    pub recall: Metric,
    pub f_measure: Metric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// Rows for label 0 then label 1.
    pub rows: [LabelRow; 2],
}

impl MetricsReport {
    pub fn row(&self, label: Label) -> &LabelRow {
        &self.rows[label.index()]
    }
}

pub fn per_label_report(pairs: &[(Label, Label)]) -> Result<MetricsReport> {
    if pairs.is_empty() {
        return Err(Error::argument("no predictions to evaluate"));
    }
    let row = |label: Label| {
        let counts = ConfusionCounts::from_pairs(pairs, label);
        let p = precision(&counts);
        let r = recall(&counts);
        let f = match (&p, &r) {
            (Ok(p), Ok(r)) => f_measure(*p, *r),
            _ => Err(Error::UndefinedMetric("f_measure")),
        };
        LabelRow {
            label,
            counts,
            precision: Metric::of(p),
            recall: Metric::of(r),
            f_measure: Metric::of(f),
        }
    };
    let rows = [row(Label::Negative), row(Label::Positive)];
    Ok(MetricsReport {
        accuracy: accuracy(&rows[1].counts)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    #[test]
    fn accuracy_cases() {
        assert!((accuracy(&counts(9, 89, 1, 1)).unwrap() - 0.98).abs() < 1e-12);
        assert_eq!(accuracy(&counts(3, 4, 0, 0)).unwrap(), 1.0);
        assert!(matches!(accuracy(&counts(0, 0, 0, 0)), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn precision_recall_cases() {
        assert_eq!(precision(&counts(5, 0, 0, 3)).unwrap(), 1.0);
        assert_eq!(recall(&counts(0, 4, 2, 3)).unwrap(), 0.0);
        assert!(precision(&counts(0, 4, 0, 3)).is_err());
        assert!(recall(&counts(0, 4, 2, 0)).is_err());
    }

    #[test]
    fn f_measure_cases() {
        assert!((f_measure(0.989, 0.916).unwrap() - 0.9511).abs() < 5e-5);
        assert!((f_measure(0.979, 0.871).unwrap() - 0.9218).abs() < 5e-5);
        assert_eq!(f_measure(0.7, 0.7).unwrap(), 0.7);
        assert!(matches!(f_measure(0.0, 0.0), Err(Error::UndefinedMetric(_))));
        assert!(f_measure(1.2, 0.5).is_err());
    }

    #[test]
    fn recount_oracle() {
        let mut rng = from_seed(7);
        for _ in 0..1000 {
            let n = rng.random_range(1..60);
            let pairs: Vec<(Label, Label)> = (0..n)
                .map(|_| (Label::from_index(rng.random_range(0..2)), Label::from_index(rng.random_range(0..2))))
                .collect();
            let correct = pairs.iter().filter(|(p, t)| p == t).count();
            let rep = per_label_report(&pairs).unwrap();
            assert!((rep.accuracy - correct as f64 / n as f64).abs() < 1e-12);
            for label in Label::ALL {
                let predicted = pairs.iter().filter(|(p, _)| *p == label).count();
                let actual = pairs.iter().filter(|(_, t)| *t == label).count();
                let hit = pairs.iter().filter(|(p, t)| *p == label && *t == label).count();
                let row = rep.row(label);
                assert_eq!(row.precision.value(), (predicted > 0).then(|| hit as f64 / predicted as f64));
                assert_eq!(row.recall.value(), (actual > 0).then(|| hit as f64 / actual as f64));
            }
        }
    }

    #[test]
    fn perfect_and_flipped() {
        let perfect = [(Label::Positive, Label::Positive), (Label::Negative, Label::Negative)];
        let rep = per_label_report(&perfect).unwrap();
        assert_eq!(rep.accuracy, 1.0);
        for row in &rep.rows {
            assert_eq!((row.precision.0, row.recall.0, row.f_measure.0), (Some(1.0), Some(1.0), Some(1.0)));
        }
        let flipped = [(Label::Negative, Label::Positive), (Label::Positive, Label::Negative)];
        let rep = per_label_report(&flipped).unwrap();
        assert_eq!(rep.accuracy, 0.0);
        assert!(rep.rows.iter().all(|r| r.recall.0 == Some(0.0)));
        assert!(per_label_report(&[]).is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(Metric(Some(0.95112)).to_string(), "95.1%");
        assert_eq!(Metric(None).to_string(), "n/a");
    }

    fn flip(l: Label) -> Label {
        Label::from_index(1 - l.index())
    }

    proptest! {
        #[test]
        fn swapping_labels_swaps_rows(raw in proptest::collection::vec((0usize..2, 0usize..2), 1..80)) {
            let pairs: Vec<_> = raw.iter().map(|&(p, t)| (Label::from_index(p), Label::from_index(t))).collect();
            let swapped: Vec<_> = pairs.iter().map(|&(p, t)| (flip(p), flip(t))).collect();
            let a = per_label_report(&pairs).unwrap();
            let b = per_label_report(&swapped).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            for i in 0..2 {
                prop_assert_eq!(a.rows[i].precision, b.rows[1 - i].precision);
                prop_assert_eq!(a.rows[i].recall, b.rows[1 - i].recall);
                prop_assert_eq!(a.rows[i].f_measure, b.rows[1 - i].f_measure);
            }
        }

        #[test]
        fn f_between_p_and_r(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            prop_assume!(p + r > 0.0);
            let f = f_measure(p, r).unwrap();
            prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
        }

        #[test]
        fn accuracy_is_weighted_mean_of_recalls(raw in proptest::collection::vec((0usize..2, 0usize..2), 1..80)) {
            let pairs: Vec<_> = raw.iter().map(|&(p, t)| (Label::from_index(p), Label::from_index(t))).collect();
            let rep = per_label_report(&pairs).unwrap();
            let mut weighted = 0.0;
            for label in Label::ALL {
                let n = pairs.iter().filter(|(_, t)| *t == label).count() as f64;
                weighted += n * rep.row(label).recall.0.unwrap_or(0.0);
            }
            prop_assert!((weighted / pairs.len() as f64 - rep.accuracy).abs() < 1e-12);
        }
    }
}
