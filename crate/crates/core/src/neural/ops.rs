use serde::{Deserialize, Serialize};

use super::{NeuralError, Parameter, Tensor2D};

/// `Y = X·W + b`.
pub fn linear_forward(x: &Tensor2D, w: &Parameter, b: &Parameter) -> Result<Tensor2D, NeuralError> {
    let mut y = x.matmul(&w.value)?;
    y.add_row_assign(&b.value)?;
    Ok(y)
}

/// Accumulates `dW += Xᵀ·upstream` and `db += colsum(upstream)`; returns `dX`.
pub fn linear_backward(
    x: &Tensor2D,
    w: &mut Parameter,
    b: &mut Parameter,
    upstream: &Tensor2D,
) -> Result<Tensor2D, NeuralError> {
    if upstream.shape() != (x.rows(), w.value.cols()) {
        return Err(NeuralError::Shape {
            op: "linear_backward",
            left: (x.rows(), w.value.cols()),
            right: upstream.shape(),
        });
    }
    w.grad.add_assign(&x.t_matmul(upstream)?)?;
    b.grad.add_assign(&upstream.column_sums())?;
    upstream.matmul_t(&w.value)
}

/// Forward and backward in one call: returns `(Y, dX)`.
pub fn linear_forward_backward(
    x: &Tensor2D,
    w: &mut Parameter,
    b: &mut Parameter,
    upstream: &Tensor2D,
) -> Result<(Tensor2D, Tensor2D), NeuralError> {
    let y = linear_forward(x, w, b)?;
    let dx = linear_backward(x, w, b, upstream)?;
    Ok((y, dx))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Elu { alpha: f64 },
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Elu { alpha } => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * libm::expm1(x)
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative at `x` (right derivative at 0).
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Elu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha * libm::exp(x)
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn forward(self, x: &Tensor2D) -> Tensor2D {
        x.map(|v| self.apply(v))
    }

    /// `dX = upstream ⊙ f'(X)`.
    pub fn backward(self, x: &Tensor2D, upstream: &Tensor2D) -> Result<Tensor2D, NeuralError> {
        if x.shape() != upstream.shape() {
            return Err(NeuralError::Shape { op: "activation", left: x.shape(), right: upstream.shape() });
        }
        let values = x
            .values()
            .iter()
            .zip(upstream.values())
            .map(|(&v, &u)| u * self.derivative(v))
            .collect();
        Tensor2D::from_vec(x.rows(), x.cols(), values)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Tensor2D) -> Tensor2D {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Mean negative log-likelihood and `dLogits = (softmax - onehot) / n`.
pub fn softmax_cross_entropy(logits: &Tensor2D, labels: &[usize]) -> Result<(f64, Tensor2D), NeuralError> {
    if labels.len() != logits.rows() {
        return Err(NeuralError::Shape { op: "softmax_cross_entropy", left: logits.shape(), right: (labels.len(), 1) });
    }
    let k = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(NeuralError::LabelOutOfRange { label: bad, classes: k });
    }
    let n = labels.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Tensor2D::zeros(logits.rows(), k);
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_total = libm::log(row.iter().map(|v| libm::exp(v - max)).sum::<f64>()) + max;
        loss += log_total - row[label];
        let g = grad.row_mut(r);
        for (c, gv) in g.iter_mut().enumerate() {
            *gv = libm::exp(row[c] - log_total) / n;
        }
        g[label] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::gradient_check;
    use super::*;
    use crate::rng::rng_from_seed;
    use alloc::vec;
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Tensor2D {
        let mut rng = rng_from_seed(seed);
        Tensor2D::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_input_returns_weights() {
        let mut w = Parameter::new(Tensor2D::from_vec(2, 2, vec![1., 2., 3., 4.]).unwrap());
        let mut b = Parameter::new(Tensor2D::zeros(1, 2));
        let (y, _) = linear_forward_backward(&Tensor2D::identity(2), &mut w, &mut b, &Tensor2D::zeros(2, 2)).unwrap();
        assert_eq!(y.values(), &[1., 2., 3., 4.]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let x = random(3, 4, 1);
        let mut w = Parameter::new(random(4, 2, 2));
        let mut b = Parameter::new(random(1, 2, 3));
        let (_, dx) = linear_forward_backward(&x, &mut w, &mut b, &Tensor2D::zeros(3, 2)).unwrap();
        assert!(dx.values().iter().chain(w.grad.values()).chain(b.grad.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch_names_shapes() {
        let mut w = Parameter::new(random(4, 2, 2));
        let mut b = Parameter::new(random(1, 2, 3));
        let err = linear_forward_backward(&random(3, 5, 1), &mut w, &mut b, &Tensor2D::zeros(3, 2)).unwrap_err();
        assert_eq!(err, NeuralError::Shape { op: "matmul", left: (3, 5), right: (4, 2) });
        assert!(alloc::string::ToString::to_string(&err).contains("(3, 5)"));
    }

    #[test]
    fn linear_gradients_match_finite_differences() {
        // loss = Σ Y ⊙ R for a fixed random R, so upstream = R
        let x = random(3, 4, 4);
        let r = random(3, 2, 5);
        let mut w = Parameter::new(random(4, 2, 6));
        let mut b = Parameter::new(random(1, 2, 7));
        let dx = linear_backward(&x, &mut w, &mut b, &r).unwrap();
        let bias = b.value.clone();
        let loss_w = |theta: &[f64]| {
            let w = Parameter::new(Tensor2D::from_vec(4, 2, theta.to_vec()).unwrap());
            let y = linear_forward(&x, &w, &Parameter::new(bias.clone())).unwrap();
            y.values().iter().zip(r.values()).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut theta = w.value.values().to_vec();
        assert!(gradient_check(loss_w, &mut theta, w.grad.values(), 1e-5).unwrap() < 1e-6);
        let wv = w.value.clone();
        let loss_x = |theta: &[f64]| {
            let x = Tensor2D::from_vec(3, 4, theta.to_vec()).unwrap();
            let y = linear_forward(&x, &Parameter::new(wv.clone()), &Parameter::new(bias.clone())).unwrap();
            y.values().iter().zip(r.values()).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut theta = x.values().to_vec();
        assert!(gradient_check(loss_x, &mut theta, dx.values(), 1e-5).unwrap() < 1e-6);
        assert_eq!(b.grad, r.column_sums());
    }

    #[test]
    fn gradients_accumulate() {
        let x = random(2, 3, 8);
        let up = random(2, 2, 9);
        let mut w = Parameter::new(random(3, 2, 10));
        let mut b = Parameter::new(random(1, 2, 11));
        linear_backward(&x, &mut w, &mut b, &up).unwrap();
        let once = w.grad.clone();
        linear_backward(&x, &mut w, &mut b, &up).unwrap();
        assert_eq!(w.grad, once.map(|v| 2.0 * v));
    }

    #[test]
    fn activation_values() {
        assert_eq!(Activation::LeakyRelu { slope: 0.2 }.apply(-1.0), -0.2);
        let elu = Activation::Elu { alpha: 1.0 };
        assert_eq!(elu.apply(0.0), 0.0);
        assert_eq!(elu.derivative(0.0), 1.0);
    }

    #[test]
    fn activation_gradients_match_finite_differences() {
        let x = random(4, 5, 12);
        let r = random(4, 5, 13);
        for act in [Activation::LeakyRelu { slope: 0.2 }, Activation::Elu { alpha: 1.0 }, Activation::Elu { alpha: 0.5 }] {
            let dx = act.backward(&x, &r).unwrap();
            let loss = |theta: &[f64]| theta.iter().zip(r.values()).map(|(&v, &u)| act.apply(v) * u).sum::<f64>();
            let mut theta = x.values().to_vec();
            assert!(gradient_check(loss, &mut theta, dx.values(), 1e-5).unwrap() < 1e-6, "{act:?}");
        }
    }

    #[test]
    fn uniform_logits_give_ln_k() {
        let (loss, _) = softmax_cross_entropy(&Tensor2D::zeros(3, 4), &[0, 1, 3]).unwrap();
        assert!((loss - libm::log(4.0)).abs() < 1e-15);
        let p = softmax_rows(&Tensor2D::zeros(3, 4));
        assert!(p.values().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn loss_falls_as_true_logit_grows() {
        let mut last = f64::INFINITY;
        for step in 0..20 {
            let logits = Tensor2D::from_vec(1, 3, vec![step as f64, 0.5, -0.5]).unwrap();
            let (loss, _) = softmax_cross_entropy(&logits, &[0]).unwrap();
            assert!(loss < last && loss >= 0.0);
            last = loss;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn label_out_of_range() {
        assert_eq!(
            softmax_cross_entropy(&Tensor2D::zeros(1, 3), &[3]).unwrap_err(),
            NeuralError::LabelOutOfRange { label: 3, classes: 3 }
        );
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let logits = random(5, 3, 14).map(|v| 3.0 * v);
        let labels = [0, 2, 1, 1, 0];
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        let loss = |theta: &[f64]| {
            softmax_cross_entropy(&Tensor2D::from_vec(5, 3, theta.to_vec()).unwrap(), &labels).unwrap().0
        };
        let mut theta = logits.values().to_vec();
        assert!(gradient_check(loss, &mut theta, grad.values(), 1e-5).unwrap() < 1e-5);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax_rows(&random(6, 7, 15).map(|v| 50.0 * v));
        for r in 0..6 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 1.0, 0.5]), 0);
        assert_eq!(argmax(&[0.0, 2.0, 2.0]), 1);
    }
}
