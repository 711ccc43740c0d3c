use super::Real;
use crate::error::{Error, Result};
use rand::Rng;

/// Inverted-dropout mask: each entry is `1/keep_prob` with probability
/// `keep_prob`, else 0.
pub fn dropout_mask<T: Real>(length: usize, keep_prob: f64, rng: &mut impl Rng) -> Result<Vec<T>> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::argument(format!(
            "keep_prob must lie in (0, 1], got {keep_prob}"
        )));
    }
    if keep_prob == 1.0 {
        return Ok(vec![T::one(); length]);
    }
    let scale = T::lit(1.0 / keep_prob);
    Ok((0..length)
        .map(|_| {
            if rng.random::<f64>() < keep_prob {
                scale
            } else {
                T::zero()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn keep_all() {
        let m: Vec<f32> = dropout_mask(10, 1.0, &mut from_seed(0)).unwrap();
        assert!(m.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<f32> = dropout_mask(100, 0.8, &mut from_seed(4)).unwrap();
        let b: Vec<f32> = dropout_mask(100, 0.8, &mut from_seed(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn keep_fraction_and_expectation() {
        let m: Vec<f64> = dropout_mask(100_000, 0.8, &mut from_seed(12)).unwrap();
        let kept = m.iter().filter(|&&v| v != 0.0).count() as f64 / m.len() as f64;
        assert!((0.79..=0.81).contains(&kept), "{kept}");
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn rejects_bad_keep_prob() {
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(dropout_mask::<f32>(3, p, &mut from_seed(0)).is_err());
        }
    }
}
