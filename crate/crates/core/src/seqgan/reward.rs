use super::discriminator::{disc_forward, DiscriminatorParams};
use super::generator::{continue_sequence, GeneratorParams};
use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::nn::{softmax, Real};
use crate::rng::indexed;
use rand::Rng;

/// Largest completion space [`exhaustive_reward`] will enumerate.
pub const MAX_ENUMERATION: usize = 100_000;

/// Monte Carlo rollout settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RolloutConfig {
    /// Completions sampled per intermediate state.
    pub n: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig { n: 16 }
    }
}

fn check_prefix(len: usize, seq_len: usize) -> Result<()> {
    if len == 0 || len > seq_len {
        return Err(Error::argument(format!("prefix length {len} outside 1..={seq_len}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn rollout_mean<T: Real>(
    prefix: &[TokenId],
    h: &[T],
    last: TokenId,
    seq_len: usize,
    beta: &GeneratorParams<T>,
    disc: &DiscriminatorParams<T>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let mut total = 0.0;
    let mut seq = Vec::with_capacity(seq_len);
    for _ in 0..n {
        seq.clear();
        seq.extend_from_slice(prefix);
        continue_sequence(beta, h.to_vec(), last, &mut seq, seq_len, rng)?;
        total += disc_forward(&seq, disc)?.as_f64();
    }
    Ok(total / n as f64)
}

/// Action value of the state `prefix`: the discriminator score itself when
/// the prefix is complete, otherwise the mean score of `n` completions drawn
/// from the rollout generator `beta`.
pub fn mc_reward<T: Real>(
    prefix: &[TokenId],
    seq_len: usize,
    beta: &GeneratorParams<T>,
    disc: &DiscriminatorParams<T>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    check_prefix(prefix.len(), seq_len)?;
    if prefix.len() == seq_len {
        return Ok(disc_forward(prefix, disc)?.as_f64());
    }
    if n == 0 {
        return Err(Error::argument("rollout count must be positive"));
    }
    let (h, last) = beta.state_after(prefix)?;
    rollout_mean(prefix, &h, last, seq_len, beta, disc, n, rng)
}

/// Action values for every position of `seq`. The rollouts for position `t`
/// draw from the stream `indexed(root, [stream.., t])`, so the result does not
/// depend on how calls are scheduled.
pub fn sequence_rewards<T: Real>(
    seq: &[TokenId],
    beta: &GeneratorParams<T>,
    disc: &DiscriminatorParams<T>,
    n: usize,
    root: u64,
    stream: &[u64],
) -> Result<Vec<f64>> {
    let seq_len = seq.len();
    check_prefix(seq_len, seq_len)?;
    if n == 0 {
        return Err(Error::argument("rollout count must be positive"));
    }
    let mut q = Vec::with_capacity(seq_len);
    let mut h = vec![T::zero(); beta.hidden_dim()];
    let mut last = crate::corpus::PAD_ID;
    let mut idx = stream.to_vec();
    idx.push(0);
    for t in 1..seq_len {
        beta.check_token(seq[t - 1])?;
        h = beta.advance(last, &h)?;
        last = seq[t - 1];
        *idx.last_mut().expect("non-empty") = t as u64;
        let mut rng = indexed(root, &idx);
        q.push(rollout_mean(&seq[..t], &h, last, seq_len, beta, disc, n, &mut rng)?);
    }
    q.push(disc_forward(seq, disc)?.as_f64());
    Ok(q)
}

/// Every completion of `prefix` to `seq_len` tokens with its probability
/// under `gen`.
pub fn enumerate_completions<T: Real>(
    prefix: &[TokenId],
    seq_len: usize,
    gen: &GeneratorParams<T>,
) -> Result<Vec<(Vec<TokenId>, T)>> {
    if prefix.len() > seq_len {
        return Err(Error::argument(format!("prefix length {} exceeds {seq_len}", prefix.len())));
    }
    let v = gen.vocab_size();
    let free = (seq_len - prefix.len()) as u32;
    let space = v.checked_pow(free).filter(|&s| s <= MAX_ENUMERATION);
    if space.is_none() {
        return Err(Error::Capacity(format!(
            "{v}^{free} completions exceed the enumeration limit of {MAX_ENUMERATION}"
        )));
    }
    let (h, last) = gen.state_after(prefix)?;
    let mut out = Vec::with_capacity(space.unwrap_or(0));
    let mut seq = prefix.to_vec();
    expand(gen, h, last, T::one(), &mut seq, seq_len, &mut out)?;
    Ok(out)
}

fn expand<T: Real>(
    gen: &GeneratorParams<T>,
    h: Vec<T>,
    last: TokenId,
    prob: T,
    seq: &mut Vec<TokenId>,
    seq_len: usize,
    out: &mut Vec<(Vec<TokenId>, T)>,
) -> Result<()> {
    if seq.len() == seq_len {
        out.push((seq.clone(), prob));
        return Ok(());
    }
    let h = gen.advance(last, &h)?;
    let probs = softmax(&gen.logits(&h))?;
    for (y, &p) in probs.iter().enumerate() {
        seq.push(y as TokenId);
        expand(gen, h.clone(), y as TokenId, prob * p, seq, seq_len, out)?;
        seq.pop();
    }
    Ok(())
}

/// Exact expected discriminator score over all completions of `prefix`.
pub fn exhaustive_reward<T: Real>(
    prefix: &[TokenId],
    seq_len: usize,
    gen: &GeneratorParams<T>,
    disc: &DiscriminatorParams<T>,
) -> Result<T> {
    check_prefix(prefix.len(), seq_len)?;
    let mut total = T::zero();
    for (seq, p) in enumerate_completions(prefix, seq_len, gen)? {
        total += p * disc_forward(&seq, disc)?;
    }
    Ok(total)
}
