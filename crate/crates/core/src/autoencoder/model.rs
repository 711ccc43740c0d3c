use crate::corpus::EncodedLog;
use crate::error::{Error, Result};
use crate::nn::{
    add_acc, dropout_mask, mat_vec_acc, outer_acc, softmax, vec_mat_acc, ParamTensor, Parameters, Real,
};
use rand::Rng;

/// Layer widths: input, encoder 1, encoder 2, decoder, output.
pub const AE_DIMS: [usize; 5] = [40, 400, 200, 200, 40];

const LAYER_NAMES: [&str; 4] = ["enc1", "enc2", "dec1", "out"];

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T = f32> {
    pub w: ParamTensor<T>,
    pub b: ParamTensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AeParams<T = f32> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Real> AeParams<T> {
    pub fn new(dims: [usize; 5], rng: &mut impl Rng) -> Self {
        AeParams {
            layers: dims
                .windows(2)
                .map(|w| Dense {
                    w: ParamTensor::xavier(w[0], w[1], rng),
                    b: ParamTensor::zeros(1, w[1]),
                })
                .collect(),
        }
    }

    pub fn zeros(dims: [usize; 5]) -> Self {
        AeParams {
            layers: dims
                .windows(2)
                .map(|w| Dense {
                    w: ParamTensor::zeros(w[0], w[1]),
                    b: ParamTensor::zeros(1, w[1]),
                })
                .collect(),
        }
    }

    pub fn dims(&self) -> [usize; 5] {
        let mut d = [0; 5];
        d[0] = self.layers[0].w.shape().0;
        for (i, l) in self.layers.iter().enumerate() {
            d[i + 1] = l.w.shape().1;
        }
        d
    }

    /// The L1-regularized first encoder weights.
    pub fn enc1(&self) -> &ParamTensor<T> {
        &self.layers[0].w
    }

    pub fn cast<U: Real>(&self) -> AeParams<U> {
        AeParams {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    w: l.w.cast(),
                    b: l.b.cast(),
                })
                .collect(),
        }
    }

    pub fn from_tensors(mut get: impl FnMut(&str) -> Result<ParamTensor<T>>) -> Result<Self> {
        let mut layers = Vec::with_capacity(4);
        for name in LAYER_NAMES {
            let w = get(&format!("{name}.w"))?;
            let b = get(&format!("{name}.b"))?;
            if b.shape() != (1, w.shape().1) {
                return Err(Error::Shape {
                    op: "autoencoder layer",
                    left: w.shape(),
                    right: b.shape(),
                });
            }
            if let Some(prev) = layers.last().map(|l: &Dense<T>| l.w.shape().1) {
                if prev != w.shape().0 {
                    return Err(Error::Shape {
                        op: "autoencoder chain",
                        left: (prev, prev),
                        right: w.shape(),
                    });
                }
            }
            layers.push(Dense { w, b });
        }
        Ok(AeParams { layers })
    }
}

impl<T: Real> Parameters<T> for AeParams<T> {
    fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        self.layers
            .iter()
            .zip(LAYER_NAMES)
            .flat_map(|(l, n)| [(format!("{n}.w"), &l.w), (format!("{n}.b"), &l.b)])
            .collect()
    }

    fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)> {
        self.layers
            .iter_mut()
            .zip(LAYER_NAMES)
            .flat_map(|(l, n)| [(format!("{n}.w"), &mut l.w), (format!("{n}.b"), &mut l.b)])
            .collect()
    }
}

/// Shifted token ids normalized to a probability vector:
/// `x[i] = (id[i] + 1) / Σ (id[j] + 1)`.
pub fn ae_input<T: Real>(encoded: &EncodedLog, vocab_size: usize) -> Result<Vec<T>> {
    if let Some(&bad) = encoded.ids.iter().find(|&&i| i as usize >= vocab_size) {
        return Err(Error::argument(format!("token id {bad} outside vocabulary of {vocab_size}")));
    }
    let total: f64 = encoded.ids.iter().map(|&i| i as f64 + 1.0).sum();
    Ok(encoded
        .ids
        .iter()
        .map(|&i| T::lit((i as f64 + 1.0) / total))
        .collect())
}

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct AeTrace<T = f32> {
    /// Input of each layer (after dropout for hidden layers).
    pub inputs: Vec<Vec<T>>,
    /// tanh activations of the three hidden layers, before dropout.
    pub hidden: Vec<Vec<T>>,
    pub masks: Vec<Option<Vec<T>>>,
    pub output: Vec<T>,
}

/// Hidden layers use tanh and, when `keep_prob < 1`, inverted dropout.
pub fn ae_forward<T: Real>(
    x: &[T],
    params: &AeParams<T>,
    keep_prob: f64,
    rng: &mut impl Rng,
) -> Result<(Vec<T>, AeTrace<T>)> {
    let dims = params.dims();
    if x.len() != dims[0] {
        return Err(Error::Shape {
            op: "ae_forward",
            left: (1, x.len()),
            right: (1, dims[0]),
        });
    }
    let mut inputs = vec![x.to_vec()];
    let mut hidden = Vec::with_capacity(3);
    let mut masks = Vec::with_capacity(3);
    for layer in &params.layers[..3] {
        let mut a = layer.b.value.as_slice().to_vec();
        vec_mat_acc(inputs.last().expect("non-empty"), &layer.w.value, &mut a);
        let h: Vec<T> = a.into_iter().map(|v| v.tanh()).collect();
        let mask = if keep_prob < 1.0 {
            Some(dropout_mask::<T>(h.len(), keep_prob, rng)?)
        } else {
            None
        };
        let next = match &mask {
            Some(m) => h.iter().zip(m).map(|(&a, &b)| a * b).collect(),
            None => h.clone(),
        };
        hidden.push(h);
        masks.push(mask);
        inputs.push(next);
    }
    let out_layer = &params.layers[3];
    let mut logits = out_layer.b.value.as_slice().to_vec();
    vec_mat_acc(&inputs[3], &out_layer.w.value, &mut logits);
    let output = softmax(&logits)?;
    Ok((
        output.clone(),
        AeTrace {
            inputs,
            hidden,
            masks,
            output,
        },
    ))
}

/// Accumulates `weight · ∂CE(output, target)/∂θ`. The L1 term is added
/// separately, once per batch.
pub fn ae_backward<T: Real>(trace: &AeTrace<T>, target: &[T], params: &mut AeParams<T>, weight: T) -> Result<()> {
    if target.len() != trace.output.len() {
        return Err(Error::Shape {
            op: "ae_backward",
            left: (1, target.len()),
            right: (1, trace.output.len()),
        });
    }
    let mut d: Vec<T> = trace
        .output
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * weight)
        .collect();
    for l in (0..4).rev() {
        let layer = &mut params.layers[l];
        outer_acc(&mut layer.w.grad, &trace.inputs[l], &d);
        add_acc(layer.b.grad.as_mut_slice(), &d);
        if l == 0 {
            break;
        }
        let mut d_in = vec![T::zero(); trace.inputs[l].len()];
        mat_vec_acc(&layer.w.value, &d, &mut d_in);
        let h = &trace.hidden[l - 1];
        if let Some(m) = &trace.masks[l - 1] {
            d_in.iter_mut().zip(m).for_each(|(v, &mv)| *v *= mv);
        }
        d = d_in
            .iter()
            .zip(h)
            .map(|(&g, &hv)| g * (T::one() - hv * hv))
            .collect();
    }
    Ok(())
}
