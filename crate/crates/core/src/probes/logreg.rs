use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_labels, check_rows, ProbeError};
use crate::neural::{argmax, softmax_cross_entropy, softmax_rows, Tensor2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { l2_lambda: 1e-3, learning_rate: 0.1, epochs: 2000 }
    }
}

/// Multinomial logistic regression, `K × d` weights plus `K` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub l2_lambda: f64,
    /// Class indices, sorted: always `0..K`.
    pub classes: Vec<usize>,
    /// Objective after the final update.
    pub final_loss: f64,
}

impl LogRegModel {
    pub fn zeros(class_count: usize, dim: usize, l2_lambda: f64) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; class_count],
            bias: vec![0.0; class_count],
            l2_lambda,
            classes: (0..class_count).collect(),
            final_loss: f64::NAN,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn logits(&self, rows: &[Vec<f64>]) -> Tensor2D {
        let k = self.bias.len();
        let mut out = Tensor2D::zeros(rows.len(), k);
        for (i, x) in rows.iter().enumerate() {
            for c in 0..k {
                let z: f64 = self.weights[c].iter().zip(x).map(|(w, v)| w * v).sum();
                out.set(i, c, z + self.bias[c]);
            }
        }
        out
    }

    /// Mean cross-entropy plus `λ/2 · ‖W‖²`, with gradients for W and b.
    pub fn loss_and_grad(&self, rows: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>, Vec<f64>), ProbeError> {
        let (ce, dlogits) = softmax_cross_entropy(&self.logits(rows), labels)?;
        let k = self.bias.len();
        let d = self.dim();
        let mut dw = vec![vec![0.0; d]; k];
        let mut db = vec![0.0; k];
        for (i, x) in rows.iter().enumerate() {
            for c in 0..k {
                let g = dlogits.get(i, c);
                db[c] += g;
                for (w, v) in dw[c].iter_mut().zip(x) {
                    *w += g * v;
                }
            }
        }
        let mut penalty = 0.0;
        for (wc, dwc) in self.weights.iter().zip(&mut dw) {
            for (w, g) in wc.iter().zip(dwc.iter_mut()) {
                penalty += w * w;
                *g += self.l2_lambda * w;
            }
        }
        Ok((ce + 0.5 * self.l2_lambda * penalty, dw, db))
    }

    /// Class probabilities, one row per input.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ProbeError> {
        check_rows(rows, Some(self.dim()))?;
        Ok(softmax_rows(&self.logits(rows)).to_rows())
    }

    /// Argmax labels (lowest index on ties) and probability rows.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<(Vec<usize>, Vec<Vec<f64>>), ProbeError> {
        let proba = self.predict_proba(rows)?;
        Ok((proba.iter().map(|p| argmax(p)).collect(), proba))
    }
}

/// Full-batch proximal gradient descent from zero initialization.
///
/// The cross-entropy gradient step is followed by the exact proximal map of
/// the L2 penalty, `W ← W / (1 + lr·λ)`, which keeps the iteration stable for
/// any λ. Biases are not penalized.
pub fn train_logreg(
    rows: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    config: &LogRegConfig,
) -> Result<LogRegModel, ProbeError> {
    let d = check_rows(rows, None)?;
    check_labels(rows.len(), labels, class_count)?;
    let mut model = LogRegModel::zeros(class_count, d, config.l2_lambda);
    // cross-entropy gradient only; the penalty goes through the proximal map
    let mut probe = LogRegModel::zeros(class_count, d, 0.0);
    let lr = config.learning_rate;
    let shrink = 1.0 / (1.0 + lr * config.l2_lambda);
    for _ in 0..config.epochs {
        probe.weights.clone_from(&model.weights);
        probe.bias.clone_from(&model.bias);
        let (_, dw, db) = probe.loss_and_grad(rows, labels)?;
        for (wc, gc) in model.weights.iter_mut().zip(&dw) {
            for (w, g) in wc.iter_mut().zip(gc) {
                *w = (*w - lr * g) * shrink;
            }
        }
        for (b, g) in model.bias.iter_mut().zip(&db) {
            *b -= lr * g;
        }
    }
    model.final_loss = model.loss_and_grad(rows, labels)?.0;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradient_check;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn separable() -> (Vec<Vec<f64>>, Vec<usize>) {
        let xs = [-3.0, -2.0, -1.5, -1.0, 1.0, 1.2, 2.0, 3.5];
        (xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|&x| usize::from(x > 0.0)).collect())
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = LogRegModel::zeros(7, 3, 0.0);
        let (labels, proba) = model.predict(&[vec![1.0, -4.0, 2.0], vec![0.0; 3]]).unwrap();
        assert_eq!(labels, vec![0, 0]);
        for row in proba {
            assert!(row.iter().all(|&p| (p - 1.0 / 7.0).abs() < 1e-15));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_toy_set() {
        let (x, y) = separable();
        let model = train_logreg(&x, &y, 2, &LogRegConfig::default()).unwrap();
        assert_eq!(model.predict(&x).unwrap().0, y);
        assert_eq!(model.predict(&[vec![-0.8], vec![0.9], vec![10.0]]).unwrap().0, vec![0, 1, 1]);
        assert!(model.final_loss.is_finite());
    }

    #[test]
    fn huge_penalty_shrinks_weights() {
        let (x, y) = separable();
        let config = LogRegConfig { l2_lambda: 1e6, ..Default::default() };
        let model = train_logreg(&x, &y, 2, &config).unwrap();
        let norm: f64 = model.weights.iter().flatten().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-2, "{norm}");
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert_eq!(train_logreg(&x, &[1, 1], 2, &LogRegConfig::default()).unwrap_err(), ProbeError::SingleClass(1));
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let model = LogRegModel::zeros(2, 3, 0.0);
        assert!(matches!(model.predict(&[vec![1.0]]), Err(ProbeError::Dimension { expected: 3, found: 1, .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(21);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let labels = [0, 1, 2, 2, 1, 0];
        let mut model = LogRegModel::zeros(3, 4, 0.3);
        for w in model.weights.iter_mut().flatten().chain(model.bias.iter_mut()) {
            *w = rng.random_range(-1.0..1.0);
        }
        let (_, dw, db) = model.loss_and_grad(&rows, &labels).unwrap();
        let analytic: Vec<f64> = dw.iter().flatten().chain(&db).copied().collect();
        let mut theta: Vec<f64> = model.weights.iter().flatten().chain(&model.bias).copied().collect();
        let loss = |t: &[f64]| {
            let mut m = model.clone();
            m.weights = t[..12].chunks(4).map(<[f64]>::to_vec).collect();
            m.bias = t[12..].to_vec();
            m.loss_and_grad(&rows, &labels).unwrap().0
        };
        assert!(gradient_check(loss, &mut theta, &analytic, 1e-5).unwrap() < 1e-5);
    }
}
