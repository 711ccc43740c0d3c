use crate::error::{Error, Result};
use crate::rng;
use rand::seq::SliceRandom;

/// Train/validation/test proportions. `test_fraction` is taken from the whole
/// set; `val_fraction_of_train` from what remains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.95,
            val_fraction_of_train: 0.95,
            seed: 0,
            shuffle: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::argument(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitParts<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

// Absorbs representation error such as (1 - 0.95) * 100 = 5.000000000000004.
fn floor_frac(total: usize, frac: f64) -> usize {
    (total as f64 * frac + 1e-6).floor() as usize
}

/// `(train, validation, test)` sizes for `total` records.
pub fn split_counts(total: usize, spec: &SplitSpec) -> Result<(usize, usize, usize)> {
    spec.validate()?;
    let pool = floor_frac(total, 1.0 - spec.test_fraction);
    let train = floor_frac(pool, 1.0 - spec.val_fraction_of_train);
    let counts = (train, pool - train, total - pool);
    if counts.0 == 0 || counts.1 == 0 || counts.2 == 0 {
        return Err(Error::argument(format!(
            "{total} records leave an empty part under {spec:?}: {counts:?}"
        )));
    }
    Ok(counts)
}

/// Partitions `records` into train, validation and test. With `shuffle` the
/// order is a seeded permutation.
pub fn split<T: Clone>(records: &[T], spec: &SplitSpec) -> Result<SplitParts<T>> {
    let (n_train, n_val, _) = split_counts(records.len(), spec)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    if spec.shuffle {
        order.shuffle(&mut rng::from_seed(spec.seed));
    }
    let take = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok(SplitParts {
        train: take(&order[..n_train]),
        validation: take(&order[n_train..n_train + n_val]),
        test: take(&order[n_train + n_val..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn reproduces_reference_counts() {
        let spec = SplitSpec::default();
        assert_eq!(split_counts(4_747_963, &spec).unwrap(), (11_869, 225_529, 4_510_565));
        assert_eq!(split_counts(8_537_019, &spec).unwrap(), (21_342, 405_508, 8_110_169));
    }

    #[test]
    fn empty_part_is_an_error() {
        assert!(split_counts(10, &SplitSpec::default()).is_err());
        assert!(split(&[1, 2, 3], &SplitSpec::default()).is_err());
    }

    #[test]
    fn fractions_validated() {
        let bad = SplitSpec { test_fraction: 1.0, ..Default::default() };
        assert!(split_counts(1000, &bad).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let data: Vec<u32> = (0..2000).collect();
        let spec = SplitSpec { seed: 5, ..Default::default() };
        assert_eq!(split(&data, &spec).unwrap(), split(&data, &spec).unwrap());
        let other = SplitSpec { seed: 6, ..Default::default() };
        assert_ne!(split(&data, &spec).unwrap().train, split(&data, &other).unwrap().train);
    }

    proptest! {
        #[test]
        fn parts_partition_input(total in 10usize..10_000, seed in any::<u64>()) {
            let spec = SplitSpec { test_fraction: 0.5, val_fraction_of_train: 0.5, seed, shuffle: true };
            let data: Vec<usize> = (0..total).collect();
            let parts = split(&data, &spec).unwrap();
            prop_assert_eq!(parts.train.len() + parts.validation.len() + parts.test.len(), total);
            let all: HashSet<usize> = parts.train.iter().chain(&parts.validation).chain(&parts.test).copied().collect();
            prop_assert_eq!(all.len(), total);
        }
    }
}
