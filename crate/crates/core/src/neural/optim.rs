use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Parameter, Tensor2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to the gradient before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

/// Bias-corrected adaptive-moment optimizer.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    first: Vec<Tensor2D>,
    second: Vec<Tensor2D>,
    timestep: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[&Parameter]) -> Self {
        let zeros = || params.iter().map(|p| Tensor2D::zeros(p.value.rows(), p.value.cols())).collect();
        Self { config, first: zeros(), second: zeros(), timestep: 0 }
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    /// One update from the gradients currently stored in `params`.
    ///
    /// `params` must come in the same order as at construction.
    pub fn step(&mut self, params: &mut [&mut Parameter]) {
        assert_eq!(params.len(), self.first.len(), "parameter list changed");
        self.timestep += 1;
        let AdamConfig { learning_rate, beta1, beta2, eps, weight_decay } = self.config;
        let t = self.timestep as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            assert_eq!(p.value.shape(), m.shape(), "parameter shape changed");
            let grads = p.grad.values().to_vec();
            let values = p.value.values_mut();
            for (i, g) in grads.into_iter().enumerate() {
                let g = g + weight_decay * values[i];
                let mi = &mut m.values_mut()[i];
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                let m_hat = *mi / c1;
                let vi = &mut v.values_mut()[i];
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let v_hat = *vi / c2;
                values[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
    }
}
