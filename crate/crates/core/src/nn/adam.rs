use super::{Matrix, ParamTensor, Parameters, Real};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        AdamConfig {
            alpha,
            ..Default::default()
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState<T = f32> {
    pub m: Matrix<T>,
    pub v: Matrix<T>,
    pub t: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(rows: usize, cols: usize, cfg: &AdamConfig) -> Self {
        AdamState {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            t: 0,
            alpha: cfg.alpha,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
        }
    }
}

/// One bias-corrected ADAM descent step. The gradient is left in place.
pub fn adam_step<T: Real>(param: &mut ParamTensor<T>, state: &mut AdamState<T>) -> Result<()> {
    if param.value.shape() != state.m.shape() || param.grad.shape() != state.m.shape() {
        return Err(Error::Shape {
            op: "adam_step",
            left: param.value.shape(),
            right: state.m.shape(),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let b1 = T::lit(state.beta1);
    let b2 = T::lit(state.beta2);
    let c1 = T::lit(1.0 - state.beta1.powi(t));
    let c2 = T::lit(1.0 - state.beta2.powi(t));
    let alpha = T::lit(state.alpha);
    let eps = T::lit(state.epsilon);
    let g = param.grad.as_slice();
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for (i, w) in param.value.as_mut_slice().iter_mut().enumerate() {
        m[i] = b1 * m[i] + (T::one() - b1) * g[i];
        v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        *w -= alpha * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// ADAM over every tensor of a [`Parameters`] model.
#[derive(Clone, Debug)]
pub struct Adam<T = f32> {
    states: Vec<AdamState<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new<M: Parameters<T>>(model: &M, cfg: &AdamConfig) -> Self {
        let states = model
            .named_params()
            .iter()
            .map(|(_, p)| {
                let (r, c) = p.shape();
                AdamState::new(r, c, cfg)
            })
            .collect();
        Adam { states }
    }

    pub fn step<M: Parameters<T>>(&mut self, model: &mut M) -> Result<()> {
        let mut params = model.named_params_mut();
        if params.len() != self.states.len() {
            return Err(Error::Consistency(
                "optimizer built for a different model".into(),
            ));
        }
        for ((_, p), s) in params.iter_mut().zip(self.states.iter_mut()) {
            adam_step(p, s)?;
        }
        Ok(())
    }
}
