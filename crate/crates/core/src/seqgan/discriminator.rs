use crate::corpus::TokenId;
use crate::error::{Error, Result};
use crate::nn::{dropout_mask, sigmoid_scalar, ParamTensor, Parameters, Real};
use rand::Rng;

/// Convolution filters of one width over the embedded sequence. Weight rows
/// are indexed `offset · embed_dim + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvBank<T = f32> {
    pub width: usize,
    pub w: ParamTensor<T>,
    pub b: ParamTensor<T>,
}

/// Text CNN: embedding, ReLU convolutions of several widths, max-over-time
/// pooling, dropout and a sigmoid unit giving P(real).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams<T = f32> {
    pub embedding: ParamTensor<T>,
    pub convs: Vec<ConvBank<T>>,
    pub head_w: ParamTensor<T>,
    pub head_b: ParamTensor<T>,
    /// Dropout keep probability on the pooled features during training.
    pub keep_prob: f64,
}

impl<T: Real> DiscriminatorParams<T> {
    pub fn new(
        vocab_size: usize,
        embed_dim: usize,
        widths: &[usize],
        filters: usize,
        keep_prob: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let convs = widths
            .iter()
            .map(|&k| ConvBank {
                width: k,
                w: ParamTensor::xavier(k * embed_dim, filters, rng),
                b: ParamTensor::zeros(1, filters),
            })
            .collect();
        DiscriminatorParams {
            embedding: ParamTensor::xavier(vocab_size, embed_dim, rng),
            convs,
            head_w: ParamTensor::xavier(widths.len() * filters, 1, rng),
            head_b: ParamTensor::zeros(1, 1),
            keep_prob,
        }
    }

    pub fn zeros(vocab_size: usize, embed_dim: usize, widths: &[usize], filters: usize) -> Self {
        DiscriminatorParams {
            embedding: ParamTensor::zeros(vocab_size, embed_dim),
            convs: widths
                .iter()
                .map(|&k| ConvBank {
                    width: k,
                    w: ParamTensor::zeros(k * embed_dim, filters),
                    b: ParamTensor::zeros(1, filters),
                })
                .collect(),
            head_w: ParamTensor::zeros(widths.len() * filters, 1),
            head_b: ParamTensor::zeros(1, 1),
            keep_prob: 1.0,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.shape().0
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.shape().1
    }

    pub fn feature_count(&self) -> usize {
        self.convs.iter().map(|c| c.w.shape().1).sum()
    }

    pub fn cast<U: Real>(&self) -> DiscriminatorParams<U> {
        DiscriminatorParams {
            embedding: self.embedding.cast(),
            convs: self
                .convs
                .iter()
                .map(|c| ConvBank {
                    width: c.width,
                    w: c.w.cast(),
                    b: c.b.cast(),
                })
                .collect(),
            head_w: self.head_w.cast(),
            head_b: self.head_b.cast(),
            keep_prob: self.keep_prob,
        }
    }

    /// Rebuilds from named tensors; filter widths are recovered from the
    /// `conv{k}.w` shapes.
    pub fn from_tensors(
        names: &[String],
        keep_prob: f64,
        mut get: impl FnMut(&str) -> Result<ParamTensor<T>>,
    ) -> Result<Self> {
        let embedding = get("embedding")?;
        let e = embedding.shape().1;
        let mut convs = Vec::new();
        for name in names {
            let Some(k) = name.strip_prefix("conv").and_then(|s| s.strip_suffix(".w")) else {
                continue;
            };
            let width: usize = k.parse().map_err(|_| Error::format(format!("bad section {name}")))?;
            let w = get(name)?;
            let b = get(&format!("conv{width}.b"))?;
            if w.shape().0 != width * e || b.shape() != (1, w.shape().1) {
                return Err(Error::Shape {
                    op: "discriminator conv",
                    left: w.shape(),
                    right: b.shape(),
                });
            }
            convs.push(ConvBank { width, w, b });
        }
        let head_w = get("head_w")?;
        let head_b = get("head_b")?;
        let f: usize = convs.iter().map(|c| c.w.shape().1).sum();
        if head_w.shape() != (f, 1) || head_b.shape() != (1, 1) {
            return Err(Error::Shape {
                op: "discriminator head",
                left: head_w.shape(),
                right: (f, 1),
            });
        }
        Ok(DiscriminatorParams {
            embedding,
            convs,
            head_w,
            head_b,
            keep_prob,
        })
    }
}

impl<T: Real> Parameters<T> for DiscriminatorParams<T> {
    fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        let mut v = vec![("embedding".to_string(), &self.embedding)];
        for c in &self.convs {
            v.push((format!("conv{}.w", c.width), &c.w));
            v.push((format!("conv{}.b", c.width), &c.b));
        }
        v.push(("head_w".into(), &self.head_w));
        v.push(("head_b".into(), &self.head_b));
        v
    }

    fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)> {
        let mut v = vec![("embedding".to_string(), &mut self.embedding)];
        for c in &mut self.convs {
            v.push((format!("conv{}.w", c.width), &mut c.w));
            v.push((format!("conv{}.b", c.width), &mut c.b));
        }
        v.push(("head_w".into(), &mut self.head_w));
        v.push(("head_b".into(), &mut self.head_b));
        v
    }
}

struct DiscTrace<T> {
    /// Pooled (post-ReLU) feature per filter, banks concatenated.
    pooled: Vec<T>,
    /// Window start that produced each pooled value; `None` when the bank
    /// is wider than the sequence.
    argmax: Vec<Option<usize>>,
    mask: Option<Vec<T>>,
    logit: T,
}

fn check_seq<T: Real>(seq: &[TokenId], disc: &DiscriminatorParams<T>) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::argument("discriminator input is empty"));
    }
    match seq.iter().find(|&&y| y as usize >= disc.vocab_size()) {
        Some(y) => Err(Error::argument(format!("token {y} outside vocabulary of {}", disc.vocab_size()))),
        None => Ok(()),
    }
}

fn forward<T: Real>(
    seq: &[TokenId],
    disc: &DiscriminatorParams<T>,
    keep_prob: f64,
    rng: Option<&mut dyn rand::RngCore>,
) -> Result<DiscTrace<T>> {
    check_seq(seq, disc)?;
    let e = disc.embed_dim();
    let mut pooled = Vec::with_capacity(disc.feature_count());
    let mut argmax = Vec::with_capacity(disc.feature_count());
    for bank in &disc.convs {
        let f = bank.w.shape().1;
        if bank.width > seq.len() {
            pooled.extend(std::iter::repeat_n(T::zero(), f));
            argmax.extend(std::iter::repeat_n(None, f));
            continue;
        }
        let mut best = vec![T::neg_infinity(); f];
        let mut best_at = vec![0usize; f];
        let mut a = vec![T::zero(); f];
        for p in 0..=seq.len() - bank.width {
            a.copy_from_slice(bank.b.value.as_slice());
            for o in 0..bank.width {
                let emb = disc.embedding.value.row(seq[p + o] as usize);
                for (j, &x) in emb.iter().enumerate() {
                    for (av, &wv) in a.iter_mut().zip(bank.w.value.row(o * e + j)) {
                        *av += x * wv;
                    }
                }
            }
            for k in 0..f {
                if a[k] > best[k] {
                    best[k] = a[k];
                    best_at[k] = p;
                }
            }
        }
        pooled.extend(best.iter().map(|&v| v.max(T::zero())));
        argmax.extend(best_at.into_iter().map(Some));
    }
    let mask = match rng {
        Some(mut rng) if keep_prob < 1.0 => Some(dropout_mask::<T>(pooled.len(), keep_prob, &mut rng)?),
        _ => None,
    };
    let mut logit = disc.head_b.value.as_slice()[0];
    for (i, (&v, &w)) in pooled.iter().zip(disc.head_w.value.as_slice()).enumerate() {
        let m = mask.as_ref().map_or(T::one(), |m| m[i]);
        logit += v * m * w;
    }
    Ok(DiscTrace {
        pooled,
        argmax,
        mask,
        logit,
    })
}

/// P(real) for `seq`, in inference mode.
pub fn disc_forward<T: Real>(seq: &[TokenId], disc: &DiscriminatorParams<T>) -> Result<T> {
    Ok(sigmoid_scalar(forward(seq, disc, 1.0, None)?.logit))
}

/// Accumulates `weight · ∂BCE/∂ϕ` for one example with target
/// `real ∈ {0, 1}`, dropout active per `disc.keep_prob`. Returns the loss and
/// the predicted P(real).
pub fn disc_accumulate<T: Real>(
    disc: &mut DiscriminatorParams<T>,
    seq: &[TokenId],
    real: bool,
    weight: T,
    rng: &mut impl Rng,
) -> Result<(T, T)> {
    let keep = disc.keep_prob;
    let trace = forward(seq, disc, keep, Some(rng))?;
    let prob = sigmoid_scalar(trace.logit);
    let target = if real { T::one() } else { T::zero() };
    // softplus(−s) for real, softplus(s) for fake, evaluated stably.
    let s = if real { -trace.logit } else { trace.logit };
    let loss = s.max(T::zero()) + (-s.abs()).exp().ln_1p();
    let dlogit = (prob - target) * weight;

    disc.head_b.grad.as_mut_slice()[0] += dlogit;
    let e = disc.embed_dim();
    let mut offset = 0;
    for bi in 0..disc.convs.len() {
        let f = disc.convs[bi].w.shape().1;
        let width = disc.convs[bi].width;
        for k in 0..f {
            let idx = offset + k;
            let m = trace.mask.as_ref().map_or(T::one(), |m| m[idx]);
            disc.head_w.grad.as_mut_slice()[idx] += trace.pooled[idx] * m * dlogit;
            let Some(p) = trace.argmax[idx] else { continue };
            if trace.pooled[idx] <= T::zero() {
                continue;
            }
            let d = disc.head_w.value.as_slice()[idx] * m * dlogit;
            if d == T::zero() {
                continue;
            }
            let DiscriminatorParams { embedding, convs, .. } = &mut *disc;
            let bank = &mut convs[bi];
            bank.b.grad.as_mut_slice()[k] += d;
            for o in 0..width {
                let tok = seq[p + o] as usize;
                for j in 0..e {
                    let row = o * e + j;
                    let x = embedding.value.get(tok, j);
                    let wv = bank.w.value.get(row, k);
                    let g = bank.w.grad.get(row, k) + x * d;
                    bank.w.grad.set(row, k, g);
                    let ge = embedding.grad.get(tok, j) + wv * d;
                    embedding.grad.set(tok, j, ge);
                }
            }
        }
        offset += f;
    }
    Ok((loss, prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::rng::from_seed;

    #[test]
    fn zero_params_score_one_half() {
        let d = DiscriminatorParams::<f32>::zeros(6, 4, &[1, 2, 3, 4], 5);
        for seq in [vec![0u32], vec![1, 2, 3, 4, 5], vec![5; 40]] {
            assert_eq!(disc_forward(&seq, &d).unwrap(), 0.5);
        }
    }

    #[test]
    fn outputs_are_probabilities() {
        use rand::Rng as _;
        let d = DiscriminatorParams::<f32>::new(20, 8, &[1, 2, 3, 4], 6, 0.75, &mut from_seed(0));
        let mut rng = from_seed(1);
        for _ in 0..1000 {
            let n = rng.random_range(1..12);
            let seq: Vec<u32> = (0..n).map(|_| rng.random_range(0..20)).collect();
            let p = disc_forward(&seq, &d).unwrap();
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn rejects_out_of_vocabulary_tokens() {
        let d = DiscriminatorParams::<f32>::zeros(3, 2, &[1], 2);
        assert!(matches!(disc_forward(&[0, 3], &d), Err(Error::Argument(_))));
        assert!(disc_forward(&[], &d).is_err());
    }

    #[test]
    fn default_scale_layout() {
        let d = DiscriminatorParams::<f32>::new(100, 32, &[1, 2, 3, 4], 25, 0.75, &mut from_seed(0));
        assert_eq!(d.feature_count(), 100);
        let shapes: Vec<_> = d.convs.iter().map(|c| c.w.shape()).collect();
        assert_eq!(shapes, vec![(32, 25), (64, 25), (96, 25), (128, 25)]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..3u64 {
            let mut d = DiscriminatorParams::<f64>::new(4, 3, &[1, 2, 3, 4], 3, 1.0, &mut from_seed(seed));
            for c in &mut d.convs {
                c.b.value.as_mut_slice().iter_mut().for_each(|b| *b = 0.3);
            }
            // Width 4 exceeds the sequence and must contribute nothing.
            let seq = [1u32, 3, (seed % 4) as u32];
            let real = seed % 2 == 0;
            d.zero_grad();
            disc_accumulate(&mut d, &seq, real, 1.0, &mut from_seed(0)).unwrap();
            let loss = |q: &DiscriminatorParams<f64>| {
                let p = disc_forward(&seq, q).unwrap();
                if real {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            };
            let names: Vec<String> = d.named_params().into_iter().map(|(n, _)| n).collect();
            for name in names {
                let t = d.named_params().into_iter().find(|(n, _)| *n == name).unwrap().1.clone();
                let err = grad_check(&t, 1e-6, |v| {
                    let mut q = d.clone();
                    q.named_params_mut().into_iter().find(|(n, _)| *n == name).unwrap().1.value = v.clone();
                    loss(&q)
                })
                .unwrap();
                assert!(err < 1e-3, "seed {seed} {name}: {err}");
            }
            let wide = d.convs.iter().find(|c| c.width == 4).unwrap();
            assert!(wide.w.grad.as_slice().iter().all(|&g| g == 0.0));
        }
    }
}
