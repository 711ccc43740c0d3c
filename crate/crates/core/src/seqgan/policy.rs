use super::generator::{weighted_nll_backward, GeneratorParams};
use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::nn::{Parameters, Real};

/// A sampled sequence with the action value of each of its tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardedSequence {
    pub tokens: Vec<TokenId>,
    pub q: Vec<f64>,
}

/// Accumulates the gradient of the weighted NLL `Σ_b Σ_t Q_bt/(T·B) · (−log G)`,
/// which is the negated policy-gradient estimate `∇J`.
pub fn accumulate_policy_gradient<T: Real>(gen: &mut GeneratorParams<T>, batch: &[RewardedSequence]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::argument("empty policy-gradient batch"));
    }
    let b = batch.len() as f64;
    for s in batch {
        if s.q.len() != s.tokens.len() {
            return Err(Error::argument(format!("{} rewards for {} tokens", s.q.len(), s.tokens.len())));
        }
        if let Some(q) = s.q.iter().find(|q| !(q.is_finite() && (0.0..=1.0).contains(*q))) {
            return Err(Error::numeric(format!("action value {q} outside [0, 1]")));
        }
        let t = s.tokens.len() as f64;
        let weights: Vec<T> = s.q.iter().map(|&q| T::lit(q / (t * b))).collect();
        weighted_nll_backward(gen, &s.tokens, &weights)?;
    }
    Ok(())
}

/// One ascent step `θ ← θ + α ∇J` on the expected reward. Nothing is
/// changed when the gradient is not finite.
pub fn policy_gradient_step<T: Real>(gen: &mut GeneratorParams<T>, batch: &[RewardedSequence], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::argument(format!("learning rate {alpha} must be positive")));
    }
    gen.zero_grad();
    accumulate_policy_gradient(gen, batch)?;
    if !gen.grads_finite() {
        gen.zero_grad();
        return Err(Error::numeric("non-finite policy gradient; update aborted"));
    }
    let a = T::lit(alpha);
    for (_, p) in gen.named_params_mut() {
        let grad = p.grad.as_slice().to_vec();
        for (v, g) in p.value.as_mut_slice().iter_mut().zip(grad) {
            *v -= a * g;
        }
    }
    Ok(())
}
