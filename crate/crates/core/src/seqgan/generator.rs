use crate::corpus::{TokenId, PAD_ID};
use crate::error::{Error, Result};
use crate::gru::{bptt_steps, cell_forward, seq_forward, GruParams};
use crate::nn::{add_acc, log_softmax, mat_vec_acc, outer_acc, softmax, vec_mat_acc, ParamTensor, Parameters, Real};
use rand::Rng;

/// Token embedding, a GRU over the embedded previous token, and a projection
/// from the hidden state to next-token logits. Step 0 is fed the PAD token.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams<T = f32> {
    pub embedding: ParamTensor<T>,
    pub gru: GruParams<T>,
    pub proj_w: ParamTensor<T>,
    pub proj_b: ParamTensor<T>,
}

impl<T: Real> GeneratorParams<T> {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        GeneratorParams {
            embedding: ParamTensor::xavier(vocab_size, embed_dim, rng),
            gru: GruParams::new(embed_dim, hidden_dim, rng),
            proj_w: ParamTensor::xavier(hidden_dim, vocab_size, rng),
            proj_b: ParamTensor::zeros(1, vocab_size),
        }
    }

    /// All-zero parameters: the uniform distribution at every step.
    pub fn zeros(vocab_size: usize, embed_dim: usize, hidden_dim: usize) -> Self {
        GeneratorParams {
            embedding: ParamTensor::zeros(vocab_size, embed_dim),
            gru: GruParams::zeros(embed_dim, hidden_dim),
            proj_w: ParamTensor::zeros(hidden_dim, vocab_size),
            proj_b: ParamTensor::zeros(1, vocab_size),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.shape().0
    }

    pub fn hidden_dim(&self) -> usize {
        self.gru.hidden_dim
    }

    pub fn cast<U: Real>(&self) -> GeneratorParams<U> {
        GeneratorParams {
            embedding: self.embedding.cast(),
            gru: self.gru.cast(),
            proj_w: self.proj_w.cast(),
            proj_b: self.proj_b.cast(),
        }
    }

    pub fn from_tensors(mut get: impl FnMut(&str) -> Result<ParamTensor<T>>) -> Result<Self> {
        let embedding = get("embedding")?;
        let gru = GruParams::from_tensors(|n| get(&format!("gru.{n}")))?;
        let proj_w = get("proj_w")?;
        let proj_b = get("proj_b")?;
        let v = embedding.shape().0;
        if embedding.shape().1 != gru.input_dim
            || proj_w.shape() != (gru.hidden_dim, v)
            || proj_b.shape() != (1, v)
        {
            return Err(Error::Shape {
                op: "generator params",
                left: embedding.shape(),
                right: proj_w.shape(),
            });
        }
        Ok(GeneratorParams {
            embedding,
            gru,
            proj_w,
            proj_b,
        })
    }

    pub(crate) fn check_token(&self, tok: TokenId) -> Result<()> {
        if (tok as usize) < self.vocab_size() {
            Ok(())
        } else {
            Err(Error::argument(format!("token {tok} outside vocabulary of {}", self.vocab_size())))
        }
    }

    /// Feeds `input` and returns the next hidden state.
    pub(crate) fn advance(&self, input: TokenId, h: &[T]) -> Result<Vec<T>> {
        Ok(cell_forward(self.embedding.value.row(input as usize), h, &self.gru)?.h)
    }

    pub(crate) fn logits(&self, h: &[T]) -> Vec<T> {
        let mut out = self.proj_b.value.as_slice().to_vec();
        vec_mat_acc(h, &self.proj_w.value, &mut out);
        out
    }

    /// State after consuming `prefix`: the hidden state that emitted its
    /// last token, and that token (PAD and zeros for an empty prefix).
    pub(crate) fn state_after(&self, prefix: &[TokenId]) -> Result<(Vec<T>, TokenId)> {
        let mut h = vec![T::zero(); self.hidden_dim()];
        let mut last = PAD_ID;
        for &y in prefix {
            self.check_token(y)?;
            h = self.advance(last, &h)?;
            last = y;
        }
        Ok((h, last))
    }

    /// Distribution over the token following `prefix`.
    pub fn next_probs(&self, prefix: &[TokenId]) -> Result<Vec<T>> {
        let (h, last) = self.state_after(prefix)?;
        softmax(&self.logits(&self.advance(last, &h)?))
    }
}

impl<T: Real> Parameters<T> for GeneratorParams<T> {
    fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        let mut v = vec![("embedding".to_string(), &self.embedding)];
        v.extend(self.gru.named_params().into_iter().map(|(n, p)| (format!("gru.{n}"), p)));
        v.push(("proj_w".into(), &self.proj_w));
        v.push(("proj_b".into(), &self.proj_b));
        v
    }

    fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)> {
        let mut v = vec![("embedding".to_string(), &mut self.embedding)];
        v.extend(self.gru.named_params_mut().into_iter().map(|(n, p)| (format!("gru.{n}"), p)));
        v.push(("proj_w".into(), &mut self.proj_w));
        v.push(("proj_b".into(), &mut self.proj_b));
        v
    }
}

pub(crate) fn sample_categorical<T: Real>(probs: &[T], rng: &mut impl Rng) -> TokenId {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i as TokenId;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    probs.iter().rposition(|&p| p > T::zero()).unwrap_or(0) as TokenId
}

/// Samples tokens from state `(h, last)` until `seq` has `seq_len` entries.
pub(crate) fn continue_sequence<T: Real>(
    gen: &GeneratorParams<T>,
    mut h: Vec<T>,
    mut last: TokenId,
    seq: &mut Vec<TokenId>,
    seq_len: usize,
    rng: &mut impl Rng,
) -> Result<()> {
    while seq.len() < seq_len {
        h = gen.advance(last, &h)?;
        let probs = softmax(&gen.logits(&h))?;
        last = sample_categorical(&probs, rng);
        seq.push(last);
    }
    Ok(())
}

/// Autoregressive multinomial sampling of a length-`seq_len` sequence,
/// optionally continuing `prefix`.
pub fn sample_sequence<T: Real>(
    gen: &GeneratorParams<T>,
    seq_len: usize,
    rng: &mut impl Rng,
    prefix: Option<&[TokenId]>,
) -> Result<Vec<TokenId>> {
    if seq_len == 0 {
        return Err(Error::argument("sequence length must be positive"));
    }
    let prefix = prefix.unwrap_or(&[]);
    if prefix.len() > seq_len {
        return Err(Error::argument(format!("prefix of {} exceeds length {seq_len}", prefix.len())));
    }
    let (h, last) = gen.state_after(prefix)?;
    let mut seq = prefix.to_vec();
    continue_sequence(gen, h, last, &mut seq, seq_len, rng)?;
    Ok(seq)
}

/// `log G(seq)`, the sum of per-step log-probabilities.
pub fn sequence_log_prob<T: Real>(gen: &GeneratorParams<T>, seq: &[TokenId]) -> Result<T> {
    let mut h = vec![T::zero(); gen.hidden_dim()];
    let mut last = PAD_ID;
    let mut total = T::zero();
    for &y in seq {
        gen.check_token(y)?;
        h = gen.advance(last, &h)?;
        total += log_softmax(&gen.logits(&h))?[y as usize];
        last = y;
    }
    Ok(total)
}

/// Mean per-token negative log-likelihood over `seqs`.
pub fn mean_token_nll<T: Real>(gen: &GeneratorParams<T>, seqs: &[Vec<TokenId>]) -> Result<f64> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for s in seqs {
        total -= sequence_log_prob(gen, s)?.as_f64();
        tokens += s.len();
    }
    if tokens == 0 {
        return Err(Error::argument("no tokens to score"));
    }
    Ok(total / tokens as f64)
}

/// Teacher-forced backward of `Σ_t weights[t] · (−log G(y_t | y_<t))`,
/// accumulated into the gradients. Returns that weighted loss.
pub fn weighted_nll_backward<T: Real>(gen: &mut GeneratorParams<T>, seq: &[TokenId], weights: &[T]) -> Result<T> {
    if seq.is_empty() || weights.len() != seq.len() {
        return Err(Error::argument(format!(
            "{} weights for a sequence of {} tokens",
            weights.len(),
            seq.len()
        )));
    }
    for &y in seq {
        gen.check_token(y)?;
    }
    let inputs: Vec<&[T]> = std::iter::once(PAD_ID)
        .chain(seq[..seq.len() - 1].iter().copied())
        .map(|t| gen.embedding.value.row(t as usize))
        .collect();
    let trace = seq_forward(&inputs, &gen.gru, None)?;
    let mut loss = T::zero();
    let mut dl_dh = Vec::with_capacity(seq.len());
    for (t, step) in trace.steps.iter().enumerate() {
        let w = weights[t];
        if w == T::zero() {
            dl_dh.push(Vec::new());
            continue;
        }
        let logits = gen.logits(&step.h);
        let logp = log_softmax(&logits)?;
        let y = seq[t] as usize;
        loss -= w * logp[y];
        let mut d: Vec<T> = logp.iter().map(|&l| l.exp() * w).collect();
        d[y] -= w;
        outer_acc(&mut gen.proj_w.grad, &step.h, &d);
        add_acc(gen.proj_b.grad.as_mut_slice(), &d);
        let mut dh = vec![T::zero(); gen.hidden_dim()];
        mat_vec_acc(&gen.proj_w.value, &d, &mut dh);
        dl_dh.push(dh);
    }
    let out = bptt_steps(&trace, &dl_dh, &mut gen.gru)?;
    let inputs_tok = std::iter::once(PAD_ID).chain(seq[..seq.len() - 1].iter().copied());
    for (tok, dx) in inputs_tok.zip(&out.dx) {
        add_acc(gen.embedding.grad.row_mut(tok as usize), dx);
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::rng::from_seed;

    #[test]
    fn degenerate_generator_always_emits_one() {
        let mut g = GeneratorParams::<f32>::zeros(2, 3, 4);
        g.proj_b.value.as_mut_slice().copy_from_slice(&[-50.0, 50.0]);
        let mut rng = from_seed(0);
        for _ in 0..100 {
            assert_eq!(sample_sequence(&g, 6, &mut rng, None).unwrap(), vec![1; 6]);
        }
    }

    #[test]
    fn uniform_generator_marginals() {
        let g = GeneratorParams::<f32>::zeros(4, 3, 5);
        let mut rng = from_seed(1);
        let mut counts = [[0usize; 4]; 3];
        for _ in 0..10_000 {
            let s = sample_sequence(&g, 3, &mut rng, None).unwrap();
            for (t, &y) in s.iter().enumerate() {
                counts[t][y as usize] += 1;
            }
        }
        for row in counts {
            for c in row {
                let f = c as f64 / 10_000.0;
                assert!((0.22..=0.28).contains(&f), "{f}");
            }
        }
    }

    #[test]
    fn prefix_handling() {
        let g = GeneratorParams::<f32>::new(5, 3, 4, &mut from_seed(2));
        let mut rng = from_seed(3);
        assert_eq!(sample_sequence(&g, 3, &mut rng, Some(&[1, 2, 3])).unwrap(), vec![1, 2, 3]);
        let s = sample_sequence(&g, 6, &mut rng, Some(&[4, 4])).unwrap();
        assert_eq!(&s[..2], &[4, 4]);
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|&y| y < 5));
        assert!(sample_sequence(&g, 0, &mut rng, None).is_err());
        assert!(sample_sequence(&g, 2, &mut rng, Some(&[1, 1, 1])).is_err());
        assert!(sample_sequence(&g, 4, &mut rng, Some(&[9])).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let g = GeneratorParams::<f32>::new(7, 4, 4, &mut from_seed(4));
        let a = sample_sequence(&g, 10, &mut from_seed(5), None).unwrap();
        let b = sample_sequence(&g, 10, &mut from_seed(5), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn next_probs_chain_to_sequence_probability() {
        let g = GeneratorParams::<f64>::new(3, 2, 3, &mut from_seed(6));
        let seq = [2, 0, 1];
        let mut lp = 0.0;
        for t in 0..seq.len() {
            lp += g.next_probs(&seq[..t]).unwrap()[seq[t] as usize].ln();
        }
        assert!((lp - sequence_log_prob(&g, &seq).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn teacher_forcing_gradient_matches_finite_differences() {
        for seed in 0..3u64 {
            let mut g = GeneratorParams::<f64>::new(3, 2, 3, &mut from_seed(seed));
            g.proj_b.value.as_mut_slice().copy_from_slice(&[0.1, -0.2, 0.05]);
            let seq = [1, 2, (seed % 3) as TokenId];
            let w = [0.7, 0.2, 1.3];
            g.zero_grad();
            let loss = weighted_nll_backward(&mut g, &seq, &w).unwrap();
            let lp_loss = |q: &GeneratorParams<f64>| {
                let mut h = vec![0.0; q.hidden_dim()];
                let mut last = PAD_ID;
                let mut total = 0.0;
                for (t, &y) in seq.iter().enumerate() {
                    h = q.advance(last, &h).unwrap();
                    total -= w[t] * log_softmax(&q.logits(&h)).unwrap()[y as usize];
                    last = y;
                }
                total
            };
            assert!((loss - lp_loss(&g)).abs() < 1e-12);
            let names: Vec<String> = g.named_params().into_iter().map(|(n, _)| n).collect();
            for name in names {
                let t = g.named_params().into_iter().find(|(n, _)| *n == name).unwrap().1.clone();
                let err = grad_check(&t, 1e-6, |v| {
                    let mut q = g.clone();
                    q.named_params_mut().into_iter().find(|(n, _)| *n == name).unwrap().1.value = v.clone();
                    lp_loss(&q)
                })
                .unwrap();
                assert!(err < 1e-3, "seed {seed} {name}: {err}");
            }
        }
    }

    #[test]
    fn default_hidden_size_is_supported() {
        let g = GeneratorParams::<f32>::new(50, 30, 30, &mut from_seed(0));
        assert_eq!(g.hidden_dim(), 30);
        assert_eq!(g.proj_w.shape(), (30, 50));
        assert_eq!(g.logits(&[0.0; 30]).len(), 50);
    }
}
