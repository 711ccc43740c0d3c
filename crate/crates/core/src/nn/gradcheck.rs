use super::{Matrix, ParamTensor};
use crate::error::{Error, Result};

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Compares `param.grad` against central differences of `loss` at
/// `param.value`, returning the largest relative error over coordinates.
pub fn grad_check<F>(param: &ParamTensor<f64>, step: f64, mut loss: F) -> Result<f64>
where
    F: FnMut(&Matrix<f64>) -> f64,
{
    if step.is_nan() || step <= 0.0 {
        return Err(Error::argument("finite-difference step must be positive"));
    }
    let mut probe = param.value.clone();
    let mut worst = 0.0f64;
    for i in 0..probe.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + step;
        let plus = loss(&probe);
        probe.as_mut_slice()[i] = orig - step;
        let minus = loss(&probe);
        probe.as_mut_slice()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::numeric(format!("non-finite loss at coordinate {i}")));
        }
        let fd = (plus - minus) / (2.0 * step);
        worst = worst.max(relative_error(param.grad.as_slice()[i], fd));
    }
    Ok(worst)
}
