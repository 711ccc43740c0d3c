use super::{Matrix, Real};
use crate::error::{Error, Result};
use rand::Rng;

/// A trainable tensor and its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor<T = f32> {
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
}

impl<T: Real> ParamTensor<T> {
    pub fn new(value: Matrix<T>) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        ParamTensor { value, grad }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Matrix::zeros(rows, cols))
    }

    pub fn xavier(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        Self::new(xavier_uniform(rows, cols, rng))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }

    pub fn cast<U: Real>(&self) -> ParamTensor<U> {
        ParamTensor {
            value: self.value.cast(),
            grad: self.grad.cast(),
        }
    }
}

/// Uniform in `±√(6/(fan_in+fan_out))`.
pub fn xavier_uniform<T: Real>(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.random_range(-bound..bound)))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches shape")
}

/// A model made of named parameter tensors, visited in a fixed order.
pub trait Parameters<T: Real> {
    fn named_params(&self) -> Vec<(String, &ParamTensor<T>)>;
    fn named_params_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)>;

    fn zero_grad(&mut self) {
        for (_, p) in self.named_params_mut() {
            p.zero_grad();
        }
    }

    fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.value.len()).sum()
    }

    fn grad_norm(&self) -> T {
        self.named_params()
            .iter()
            .flat_map(|(_, p)| p.grad.as_slice().iter())
            .map(|&g| g * g)
            .sum::<T>()
            .sqrt()
    }

    /// Rescales all gradients so their global L2 norm is at most `max_norm`.
    fn clip_grad_norm(&mut self, max_norm: T) -> T {
        let norm = self.grad_norm();
        if norm > max_norm && norm > T::zero() {
            let s = max_norm / norm;
            for (_, p) in self.named_params_mut() {
                p.grad.scale(s);
            }
        }
        norm
    }

    fn grads_finite(&self) -> bool {
        self.named_params().iter().all(|(_, p)| p.grad.is_finite())
    }

    /// Adds `other`'s gradients into ours. Both must have the same layout.
    fn accumulate_grads(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        let src = other.named_params();
        let mut dst = self.named_params_mut();
        if src.len() != dst.len() {
            return Err(Error::Consistency("parameter layouts differ".into()));
        }
        for ((_, d), (_, s)) in dst.iter_mut().zip(&src) {
            d.grad.add_assign(&s.grad)?;
        }
        Ok(())
    }

    /// Copies parameter values (not gradients) from `other`.
    fn copy_values_from(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        let src = other.named_params();
        let mut dst = self.named_params_mut();
        if src.len() != dst.len() {
            return Err(Error::Consistency("parameter layouts differ".into()));
        }
        for ((_, d), (_, s)) in dst.iter_mut().zip(&src) {
            d.value.check_same("copy_values_from", &s.value)?;
            d.value = s.value.clone();
        }
        Ok(())
    }

    /// Bitwise equality of all parameter values.
    fn values_bit_equal(&self, other: &Self) -> bool
    where
        Self: Sized,
    {
        let a = self.named_params();
        let b = other.named_params();
        a.len() == b.len()
            && a.iter().zip(&b).all(|((na, pa), (nb, pb))| {
                na == nb
                    && pa.value.shape() == pb.value.shape()
                    && pa
                        .value
                        .as_slice()
                        .iter()
                        .zip(pb.value.as_slice())
                        .all(|(x, y)| x.as_f64().to_bits() == y.as_f64().to_bits())
            })
    }
}
