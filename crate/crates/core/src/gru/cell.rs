use crate::error::{Error, Result};
use crate::nn::{add_acc, mat_vec_acc, outer_acc, sigmoid_scalar, vec_mat_acc, ParamTensor, Parameters, Real};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<T = f32> {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_r: ParamTensor<T>,
    pub w_z: ParamTensor<T>,
    pub w_h: ParamTensor<T>,
    pub u_r: ParamTensor<T>,
    pub u_z: ParamTensor<T>,
    pub u_h: ParamTensor<T>,
    pub b_r: ParamTensor<T>,
    pub b_z: ParamTensor<T>,
    pub b_h: ParamTensor<T>,
}

impl<T: Real> GruParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || ParamTensor::zeros(input_dim, hidden_dim);
        let u = || ParamTensor::zeros(hidden_dim, hidden_dim);
        let b = || ParamTensor::zeros(1, hidden_dim);
        GruParams {
            input_dim,
            hidden_dim,
            w_r: w(),
            w_z: w(),
            w_h: w(),
            u_r: u(),
            u_z: u(),
            u_h: u(),
            b_r: b(),
            b_z: b(),
            b_h: b(),
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn new(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        for t in [&mut p.w_r, &mut p.w_z, &mut p.w_h] {
            *t = ParamTensor::xavier(input_dim, hidden_dim, rng);
        }
        for t in [&mut p.u_r, &mut p.u_z, &mut p.u_h] {
            *t = ParamTensor::xavier(hidden_dim, hidden_dim, rng);
        }
        p
    }

    pub fn cast<U: Real>(&self) -> GruParams<U> {
        GruParams {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            w_r: self.w_r.cast(),
            w_z: self.w_z.cast(),
            w_h: self.w_h.cast(),
            u_r: self.u_r.cast(),
            u_z: self.u_z.cast(),
            u_h: self.u_h.cast(),
            b_r: self.b_r.cast(),
            b_z: self.b_z.cast(),
            b_h: self.b_h.cast(),
        }
    }

    /// Checks every tensor against `(input_dim, hidden_dim)`.
    pub fn check_shapes(&self) -> Result<()> {
        let (d, h) = (self.input_dim, self.hidden_dim);
        for (name, p) in self.named_params() {
            let want = match &name[..1] {
                "w" => (d, h),
                "u" => (h, h),
                _ => (1, h),
            };
            if p.shape() != want {
                return Err(Error::Shape {
                    op: "gru params",
                    left: p.shape(),
                    right: want,
                });
            }
        }
        Ok(())
    }

    /// Rebuilds from tensors named as in [`Parameters::named_params`].
    pub fn from_tensors(mut get: impl FnMut(&str) -> Result<ParamTensor<T>>) -> Result<Self> {
        let w_r = get("w_r")?;
        let (input_dim, hidden_dim) = w_r.shape();
        let p = GruParams {
            input_dim,
            hidden_dim,
            w_r,
            w_z: get("w_z")?,
            w_h: get("w_h")?,
            u_r: get("u_r")?,
            u_z: get("u_z")?,
            u_h: get("u_h")?,
            b_r: get("b_r")?,
            b_z: get("b_z")?,
            b_h: get("b_h")?,
        };
        p.check_shapes()?;
        Ok(p)
    }
}

impl<T: Real> Parameters<T> for GruParams<T> {
    fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        vec![
            ("w_r".into(), &self.w_r),
            ("u_r".into(), &self.u_r),
            ("b_r".into(), &self.b_r),
            ("w_z".into(), &self.w_z),
            ("u_z".into(), &self.u_z),
            ("b_z".into(), &self.b_z),
            ("w_h".into(), &self.w_h),
            ("u_h".into(), &self.u_h),
            ("b_h".into(), &self.b_h),
        ]
    }

    fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)> {
        vec![
            ("w_r".into(), &mut self.w_r),
            ("u_r".into(), &mut self.u_r),
            ("b_r".into(), &mut self.b_r),
            ("w_z".into(), &mut self.w_z),
            ("u_z".into(), &mut self.u_z),
            ("b_z".into(), &mut self.b_z),
            ("w_h".into(), &mut self.w_h),
            ("u_h".into(), &mut self.u_h),
            ("b_h".into(), &mut self.b_h),
        ]
    }
}

/// Cached values of one step, enough to run it backwards.
#[derive(Clone, Debug, PartialEq)]
pub struct GruStep<T = f32> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub r: Vec<T>,
    pub z: Vec<T>,
    pub candidate: Vec<T>,
    pub h: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GruTrace<T = f32> {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub steps: Vec<GruStep<T>>,
}

impl<T: Real> GruTrace<T> {
    pub fn final_state(&self) -> &[T] {
        &self.steps.last().expect("traces are never empty").h
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn cell_forward<T: Real>(x: &[T], h_prev: &[T], p: &GruParams<T>) -> Result<GruStep<T>> {
    let h = p.hidden_dim;
    if x.len() != p.input_dim || h_prev.len() != h {
        return Err(Error::Shape {
            op: "gru cell",
            left: (x.len(), h_prev.len()),
            right: (p.input_dim, h),
        });
    }
    let gate = |w: &ParamTensor<T>, u: &ParamTensor<T>, b: &ParamTensor<T>, hin: &[T]| {
        let mut a = b.value.as_slice().to_vec();
        vec_mat_acc(x, &w.value, &mut a);
        vec_mat_acc(hin, &u.value, &mut a);
        a
    };
    let r: Vec<T> = gate(&p.w_r, &p.u_r, &p.b_r, h_prev)
        .into_iter()
        .map(sigmoid_scalar)
        .collect();
    let z: Vec<T> = gate(&p.w_z, &p.u_z, &p.b_z, h_prev)
        .into_iter()
        .map(sigmoid_scalar)
        .collect();
    let rh: Vec<T> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
    let candidate: Vec<T> = gate(&p.w_h, &p.u_h, &p.b_h, &rh)
        .into_iter()
        .map(|v| v.tanh())
        .collect();
    let h_new = (0..h)
        .map(|j| z[j] * h_prev[j] + (T::one() - z[j]) * candidate[j])
        .collect();
    Ok(GruStep {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        r,
        z,
        candidate,
        h: h_new,
    })
}

/// Unrolls the cell over `xs` from `h0` (zeros when `None`).
pub fn seq_forward<T: Real, X: AsRef<[T]>>(
    xs: &[X],
    p: &GruParams<T>,
    h0: Option<&[T]>,
) -> Result<GruTrace<T>> {
    if xs.is_empty() {
        return Err(Error::argument("GRU input sequence is empty"));
    }
    let zero = vec![T::zero(); p.hidden_dim];
    let mut steps: Vec<GruStep<T>> = Vec::with_capacity(xs.len());
    for x in xs {
        let prev = steps.last().map_or(h0.unwrap_or(&zero), |s| s.h.as_slice());
        let step = cell_forward(x.as_ref(), prev, p)?;
        steps.push(step);
    }
    Ok(GruTrace {
        input_dim: p.input_dim,
        hidden_dim: p.hidden_dim,
        steps,
    })
}

#[derive(Clone, Debug)]
pub struct BpttOutput<T = f32> {
    /// ∂L/∂x_t for every step.
    pub dx: Vec<Vec<T>>,
    /// ∂L/∂h_0.
    pub dh0: Vec<T>,
}

/// Backpropagates `dl_dh_final` through the whole trace, accumulating into
/// the parameter gradients.
pub fn bptt<T: Real>(trace: &GruTrace<T>, dl_dh_final: &[T], p: &mut GruParams<T>) -> Result<BpttOutput<T>> {
    let mut grads = vec![Vec::new(); trace.len()];
    grads[trace.len() - 1] = dl_dh_final.to_vec();
    bptt_steps(trace, &grads, p)
}

/// Like [`bptt`], with a direct loss gradient on every `h_t`. An empty
/// entry means zero.
pub fn bptt_steps<T: Real>(trace: &GruTrace<T>, dl_dh: &[Vec<T>], p: &mut GruParams<T>) -> Result<BpttOutput<T>> {
    let h = p.hidden_dim;
    if trace.input_dim != p.input_dim || trace.hidden_dim != h {
        return Err(Error::Consistency(format!(
            "trace built for ({}, {}), params are ({}, {h})",
            trace.input_dim, trace.hidden_dim, p.input_dim
        )));
    }
    if dl_dh.len() != trace.len() {
        return Err(Error::Consistency("one gradient entry per step required".into()));
    }
    if dl_dh.iter().any(|g| !g.is_empty() && g.len() != h) {
        return Err(Error::Shape {
            op: "bptt",
            left: (1, dl_dh.iter().map(Vec::len).max().unwrap_or(0)),
            right: (1, h),
        });
    }
    let mut carry = vec![T::zero(); h];
    let mut dx = vec![Vec::new(); trace.len()];
    let mut dz = vec![T::zero(); h];
    let mut da_n = vec![T::zero(); h];
    let mut da_z = vec![T::zero(); h];
    let mut da_r = vec![T::zero(); h];
    let mut rh = vec![T::zero(); h];
    for t in (0..trace.len()).rev() {
        let s = &trace.steps[t];
        let mut dh = std::mem::replace(&mut carry, vec![T::zero(); h]);
        add_acc(&mut dh, &dl_dh[t]);

        let mut dh_prev = vec![T::zero(); h];
        for j in 0..h {
            dz[j] = dh[j] * (s.h_prev[j] - s.candidate[j]);
            let dn = dh[j] * (T::one() - s.z[j]);
            da_n[j] = dn * (T::one() - s.candidate[j] * s.candidate[j]);
            dh_prev[j] = dh[j] * s.z[j];
            rh[j] = s.r[j] * s.h_prev[j];
        }

        // Candidate path.
        outer_acc(&mut p.w_h.grad, &s.x, &da_n);
        outer_acc(&mut p.u_h.grad, &rh, &da_n);
        add_acc(p.b_h.grad.as_mut_slice(), &da_n);
        let mut d_rh = vec![T::zero(); h];
        mat_vec_acc(&p.u_h.value, &da_n, &mut d_rh);
        for j in 0..h {
            dh_prev[j] += d_rh[j] * s.r[j];
            let dr = d_rh[j] * s.h_prev[j];
            da_r[j] = dr * s.r[j] * (T::one() - s.r[j]);
            da_z[j] = dz[j] * s.z[j] * (T::one() - s.z[j]);
        }

        // Update and reset gates.
        outer_acc(&mut p.w_z.grad, &s.x, &da_z);
        outer_acc(&mut p.u_z.grad, &s.h_prev, &da_z);
        add_acc(p.b_z.grad.as_mut_slice(), &da_z);
        mat_vec_acc(&p.u_z.value, &da_z, &mut dh_prev);

        outer_acc(&mut p.w_r.grad, &s.x, &da_r);
        outer_acc(&mut p.u_r.grad, &s.h_prev, &da_r);
        add_acc(p.b_r.grad.as_mut_slice(), &da_r);
        mat_vec_acc(&p.u_r.value, &da_r, &mut dh_prev);

        let mut dxt = vec![T::zero(); p.input_dim];
        mat_vec_acc(&p.w_h.value, &da_n, &mut dxt);
        mat_vec_acc(&p.w_z.value, &da_z, &mut dxt);
        mat_vec_acc(&p.w_r.value, &da_r, &mut dxt);
        dx[t] = dxt;
        carry = dh_prev;
    }
    Ok(BpttOutput { dx, dh0: carry })
}
