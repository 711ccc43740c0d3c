use super::{Matrix, Real};
use crate::error::{Error, Result};

/// Probability floor inside the log of [`cross_entropy`].
pub const CE_CLIP: f64 = 1e-12;

/// `x · w + b` with `b` broadcast over the batch rows.
pub fn affine<T: Real>(x: &Matrix<T>, w: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(Error::Shape {
            op: "affine bias",
            left: w.shape(),
            right: b.shape(),
        });
    }
    let mut out = x.matmul(w).map_err(|_| Error::Shape {
        op: "affine",
        left: x.shape(),
        right: w.shape(),
    })?;
    for i in 0..out.rows() {
        for (o, &bv) in out.row_mut(i).iter_mut().zip(b.as_slice()) {
            *o += bv;
        }
    }
    Ok(out)
}

#[inline]
pub fn sigmoid_scalar<T: Real>(x: T) -> T {
    // Branch on sign so exp never overflows.
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    x.map(sigmoid_scalar)
}

pub fn tanh_act<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| v.tanh())
}

pub fn softmax<T: Real>(logits: &[T]) -> Result<Vec<T>> {
    let max = max_of(logits)?;
    let mut out: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: T = out.iter().copied().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

pub fn log_softmax<T: Real>(logits: &[T]) -> Result<Vec<T>> {
    let max = max_of(logits)?;
    let lse = logits.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    Ok(logits.iter().map(|&v| v - lse).collect())
}

fn max_of<T: Real>(v: &[T]) -> Result<T> {
    if v.is_empty() {
        return Err(Error::argument("softmax of an empty vector"));
    }
    Ok(v.iter().copied().fold(T::neg_infinity(), T::max))
}

/// `−Σ target·ln(pred + 1e-12)`.
pub fn cross_entropy<T: Real>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() {
        return Err(Error::Shape {
            op: "cross_entropy",
            left: (1, pred.len()),
            right: (1, target.len()),
        });
    }
    let total: f64 = target.iter().map(|t| t.as_f64()).sum();
    if (total - 1.0).abs() > 1e-5 {
        return Err(Error::argument(format!(
            "cross-entropy target sums to {total}, expected 1"
        )));
    }
    if pred.iter().any(|&p| p < T::zero()) {
        return Err(Error::argument("cross-entropy prediction has negative entries"));
    }
    let clip = T::lit(CE_CLIP);
    Ok(-pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| t * (p + clip).ln())
        .sum::<T>())
}

/// Gradient of `cross_entropy(softmax(z), target)` with respect to `z`.
pub fn softmax_cross_entropy_grad<T: Real>(pred: &[T], target: &[T]) -> Vec<T> {
    pred.iter().zip(target).map(|(&p, &t)| p - t).collect()
}

/// `λ·Σ|w|` and its subgradient `λ·sign(w)`, with `sign(0) = 0`.
pub fn l1_penalty<T: Real>(w: &Matrix<T>, lambda: T) -> (T, Matrix<T>) {
    let loss = lambda * w.as_slice().iter().map(|v| v.abs()).sum::<T>();
    let grad = w.map(|v| {
        if v > T::zero() {
            lambda
        } else if v < T::zero() {
            -lambda
        } else {
            T::zero()
        }
    });
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, ParamTensor};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_matmul(x: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; w[0].len()]; x.len()];
        for i in 0..x.len() {
            for j in 0..w[0].len() {
                for k in 0..w.len() {
                    out[i][j] += x[i][k] * w[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn affine_small_cases() {
        let x = Matrix::from_rows(&[&[1.0f32, 2.0]]);
        let w = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = Matrix::zeros(1, 2);
        assert_eq!(affine(&x, &w, &b).unwrap().as_slice(), &[1.0, 2.0]);

        let x = Matrix::from_rows(&[&[1.0f32, 1.0]]);
        let w = Matrix::from_rows(&[&[2.0], &[3.0]]);
        let b = Matrix::from_rows(&[&[1.0]]);
        assert_eq!(affine(&x, &w, &b).unwrap().as_slice(), &[6.0]);
    }

    #[test]
    fn affine_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let w: Vec<Vec<f64>> = (0..4).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let b: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let expect = naive_matmul(&x, &w);

        let xm = Matrix::from_rows(&x.iter().map(|r| r.as_slice()).collect::<Vec<_>>()).cast::<f32>();
        let wm = Matrix::from_rows(&w.iter().map(|r| r.as_slice()).collect::<Vec<_>>()).cast::<f32>();
        let bm = Matrix::row_vector(b.clone()).cast::<f32>();
        let got = affine(&xm, &wm, &bm).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((got.get(i, j) as f64 - (expect[i][j] + b[j])).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let x = Matrix::<f32>::zeros(2, 3);
        let w = Matrix::<f32>::zeros(2, 2);
        let b = Matrix::<f32>::zeros(1, 2);
        let err = affine(&x, &w, &b).unwrap_err().to_string();
        assert!(err.contains("(2, 3)") && err.contains("(2, 2)"), "{err}");
    }

    #[test]
    fn activations_at_zero() {
        assert_eq!(sigmoid_scalar(0.0f64), 0.5);
        assert_eq!(tanh_act(&Matrix::<f64>::zeros(1, 1)).get(0, 0), 0.0);
    }

    #[test]
    fn sigmoid_reflection_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x: f32 = rng.random_range(-20.0..20.0);
            assert!((sigmoid_scalar(-x) - (1.0 - sigmoid_scalar(x))).abs() < 1e-6);
        }
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        let m = sigmoid(&Matrix::from_rows(&[&[-1e4f32, 1e4, -80.0, 80.0]]));
        assert!(m.is_finite());
        assert!(m.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[0.0f64, 0.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(softmax(&[1000.0f64, 1000.0]).unwrap(), vec![0.5, 0.5]);
        assert!(softmax::<f64>(&[]).is_err());
        assert!(log_softmax::<f64>(&[]).is_err());
    }

    #[test]
    fn exp_log_softmax_matches_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let v: Vec<f64> = (0..rng.random_range(1..20)).map(|_| rng.random_range(-30.0..30.0)).collect();
            let s = softmax(&v).unwrap();
            let ls = log_softmax(&v).unwrap();
            for (a, b) in s.iter().zip(&ls) {
                assert!((a - b.exp()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cross_entropy_cases() {
        assert!(cross_entropy(&[1.0f64, 0.0], &[1.0, 0.0]).unwrap() <= 1e-11);
        let ce = cross_entropy(&[0.5f64, 0.5], &[1.0, 0.0]).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-9);
        assert!(matches!(
            cross_entropy(&[0.5f64, 0.5], &[1.0]),
            Err(Error::Shape { .. })
        ));
        assert!(cross_entropy(&[0.5f64, 0.5], &[0.5, 0.4]).is_err());
    }

    #[test]
    fn softmax_ce_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let target = softmax(&(0..5).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>()).unwrap();
        let mut p = ParamTensor::new(Matrix::row_vector(logits.clone()));
        let pred = softmax(&logits).unwrap();
        p.grad = Matrix::row_vector(softmax_cross_entropy_grad(&pred, &target));
        let err = grad_check(&p, 1e-5, |z| {
            cross_entropy(&softmax(z.as_slice()).unwrap(), &target).unwrap()
        })
        .unwrap();
        assert!(err < 1e-4, "rel err {err}");
    }

    #[test]
    fn l1_cases() {
        let w = Matrix::from_rows(&[&[1.0f64, -2.0]]);
        let (loss, grad) = l1_penalty(&w, 0.0);
        assert_eq!(loss, 0.0);
        assert!(grad.as_slice().iter().all(|&g| g == 0.0));

        let (loss, grad) = l1_penalty(&w, 0.5);
        assert_eq!(loss, 1.5);
        assert_eq!(grad.as_slice(), &[0.5, -0.5]);

        let (_, grad) = l1_penalty(&Matrix::from_rows(&[&[0.0f64]]), 1.0);
        assert_eq!(grad.get(0, 0), 0.0);
    }

    #[test]
    fn l1_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<f64> = (0..6)
            .map(|_| {
                let v: f64 = rng.random_range(0.1..1.0);
                if rng.random::<bool>() { v } else { -v }
            })
            .collect();
        let mut p = ParamTensor::new(Matrix::from_vec(2, 3, vals).unwrap());
        p.grad = l1_penalty(&p.value, 0.3).1;
        let err = grad_check(&p, 1e-6, |w| l1_penalty(w, 0.3).0).unwrap();
        assert!(err < 1e-4, "rel err {err}");
    }

    fn prob_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, len).prop_map(|v| softmax(&v).unwrap())
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(v in proptest::collection::vec(-500.0f64..500.0, 1..2000)) {
            let s = softmax(&v).unwrap();
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            prop_assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn gibbs_inequality((p, q) in (1usize..=16).prop_flat_map(|n| (prob_vec(n), prob_vec(n)))) {
            let self_ce = cross_entropy(&p, &p).unwrap();
            let cross = cross_entropy(&q, &p).unwrap();
            prop_assert!(self_ce <= cross + 1e-9);
        }
    }
}
