//! Dense numeric layer shared by every network in the crate.

mod adam;
mod dropout;
mod gradcheck;
mod matrix;
mod ops;
mod params;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use dropout::dropout_mask;
pub use gradcheck::{grad_check, relative_error};
pub use matrix::Matrix;
pub use ops::{
    affine, cross_entropy, l1_penalty, log_softmax, sigmoid, sigmoid_scalar, softmax,
    softmax_cross_entropy_grad, tanh_act, CE_CLIP,
};
pub use params::{xavier_uniform, ParamTensor, Parameters};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Scalar type of the networks: `f32` for training, `f64` for gradient checks.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `out += x · w` for a row vector `x` of length `w.rows()`.
#[inline]
pub(crate) fn vec_mat_acc<T: Real>(x: &[T], w: &Matrix<T>, out: &mut [T]) {
    debug_assert_eq!(x.len(), w.rows());
    debug_assert_eq!(out.len(), w.cols());
    for (k, &xk) in x.iter().enumerate() {
        if xk == T::zero() {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(w.row(k)) {
            *o += xk * wv;
        }
    }
}

/// `out += w · d` where `d` has length `w.cols()`; the backward of [`vec_mat_acc`].
#[inline]
pub(crate) fn mat_vec_acc<T: Real>(w: &Matrix<T>, d: &[T], out: &mut [T]) {
    debug_assert_eq!(d.len(), w.cols());
    debug_assert_eq!(out.len(), w.rows());
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = T::zero();
        for (&wv, &dv) in w.row(k).iter().zip(d) {
            s += wv * dv;
        }
        *o += s;
    }
}

/// `g += aᵀ b`, the weight gradient of [`vec_mat_acc`].
#[inline]
pub(crate) fn outer_acc<T: Real>(g: &mut Matrix<T>, a: &[T], b: &[T]) {
    debug_assert_eq!(a.len(), g.rows());
    debug_assert_eq!(b.len(), g.cols());
    for (k, &ak) in a.iter().enumerate() {
        if ak == T::zero() {
            continue;
        }
        for (gv, &bv) in g.row_mut(k).iter_mut().zip(b) {
            *gv += ak * bv;
        }
    }
}

#[inline]
pub(crate) fn add_acc<T: Real>(g: &mut [T], d: &[T]) {
    for (gv, &dv) in g.iter_mut().zip(d) {
        *gv += dv;
    }
}
