//! Embedding-space augmentation with a small autoencoder.
//!
//! The autoencoder (`d → hidden → k → hidden → d`, ELU hidden layers, linear
//! output, MSE loss) is fitted on training embeddings only. Synthetic samples
//! perturb the latent code of each real training embedding with
//! `Normal(0, σ²)` noise and decode it back.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{linear_backward, linear_forward, Activation, Adam, AdamConfig, NeuralError, Parameter, Tensor2D};
use crate::rng::rng_from_seed;
use crate::split::SplitPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub noise_sigma: f64,
    pub multiplier: usize,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            input_dim: 64,
            latent_dim: 8,
            hidden_dim: 32,
            epochs: 500,
            learning_rate: 1e-3,
            noise_sigma: 0.1,
            multiplier: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEmbedding {
    pub id: String,
    pub origin: Origin,
    /// The novel itself for real rows, the parent novel for synthetic rows.
    pub novel_id: String,
    pub label: usize,
    pub values: Vec<f64>,
}

impl LabeledEmbedding {
    pub fn real(novel_id: impl Into<String>, label: usize, values: Vec<f64>) -> Self {
        let novel_id = novel_id.into();
        Self { id: novel_id.clone(), origin: Origin::Real, novel_id, label, values }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("leakage: test novel {0} was passed to autoencoder training")]
    Leakage(String),
    #[error("embedding {0} is not a real training embedding")]
    NotReal(String),
    #[error("embedding {id} has dimension {found}, expected {expected}")]
    Dimension { id: String, expected: usize, found: usize },
    #[error("embedding {0} has non-finite entries")]
    NonFinite(String),
    #[error("no training embeddings")]
    Empty,
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub config: AutoencoderConfig,
    /// Encoder hidden, encoder latent, decoder hidden, decoder output; each `(W, b)`.
    pub layers: Vec<(Parameter, Parameter)>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

const ACTIVATIONS: [Activation; 4] =
    [Activation::Elu { alpha: 1.0 }, Activation::Identity, Activation::Elu { alpha: 1.0 }, Activation::Identity];

struct Trace {
    inputs: Vec<Tensor2D>,
    pre: Vec<Tensor2D>,
}

impl Autoencoder {
    pub fn init(config: AutoencoderConfig) -> Result<Self, AugmentError> {
        let AutoencoderConfig { input_dim: d, latent_dim: k, hidden_dim: h, .. } = config;
        if k == 0 || h == 0 || k >= d {
            return Err(AugmentError::Config(format!("need 0 < latent_dim < input_dim, got k = {k}, d = {d}")));
        }
        if config.noise_sigma.is_nan() || config.noise_sigma < 0.0 {
            return Err(AugmentError::Config(format!("noise sigma {} is negative", config.noise_sigma)));
        }
        let mut rng = rng_from_seed(config.seed);
        let layers = [(d, h), (h, k), (k, h), (h, d)]
            .into_iter()
            .map(|(i, o)| (Parameter::new(Tensor2D::glorot(i, o, &mut rng)), Parameter::new(Tensor2D::zeros(1, o))))
            .collect();
        Ok(Self { config, layers, initial_loss: f64::NAN, final_loss: f64::NAN })
    }

    fn run(&self, x: &Tensor2D, range: core::ops::Range<usize>) -> Result<(Tensor2D, Trace), AugmentError> {
        let mut trace = Trace { inputs: Vec::new(), pre: Vec::new() };
        let mut h = x.clone();
        for l in range {
            let (w, b) = &self.layers[l];
            let pre = linear_forward(&h, w, b)?;
            let next = ACTIVATIONS[l].forward(&pre);
            trace.inputs.push(h);
            trace.pre.push(pre);
            h = next;
        }
        Ok((h, trace))
    }

    pub fn encode(&self, x: &Tensor2D) -> Result<Tensor2D, AugmentError> {
        Ok(self.run(x, 0..2)?.0)
    }

    pub fn decode(&self, z: &Tensor2D) -> Result<Tensor2D, AugmentError> {
        Ok(self.run(z, 2..4)?.0)
    }

    pub fn reconstruct(&self, x: &Tensor2D) -> Result<Tensor2D, AugmentError> {
        Ok(self.run(x, 0..4)?.0)
    }

    /// Mean squared reconstruction error over all entries; accumulates gradients.
    pub fn loss_and_backward(&mut self, x: &Tensor2D) -> Result<f64, AugmentError> {
        let (out, trace) = self.run(x, 0..4)?;
        let n = x.values().len() as f64;
        let mut loss = 0.0;
        let mut grad = Tensor2D::zeros(out.rows(), out.cols());
        for ((g, o), t) in grad.values_mut().iter_mut().zip(out.values()).zip(x.values()) {
            let diff = o - t;
            loss += diff * diff;
            *g = 2.0 * diff / n;
        }
        for l in (0..4).rev() {
            let upstream = ACTIVATIONS[l].backward(&trace.pre[l], &grad)?;
            let (w, b) = &mut self.layers[l];
            grad = linear_backward(&trace.inputs[l], w, b, &upstream)?;
        }
        Ok(loss / n)
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(|(w, b)| [w, b]).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers.iter_mut().flat_map(|(w, b)| [w, b]).collect()
    }

    pub fn flat_parameters(&self) -> Vec<f64> {
        self.parameters().iter().flat_map(|p| p.value.values().iter().copied()).collect()
    }

    pub fn flat_gradients(&self) -> Vec<f64> {
        self.parameters().iter().flat_map(|p| p.grad.values().iter().copied()).collect()
    }

    pub fn set_flat_parameters(&mut self, flat: &[f64]) {
        let mut at = 0;
        for p in self.parameters_mut() {
            let len = p.len();
            p.value.values_mut().copy_from_slice(&flat[at..at + len]);
            at += len;
        }
        assert_eq!(at, flat.len(), "flat parameter length");
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}

fn stack(rows: &[LabeledEmbedding], dim: usize) -> Result<Tensor2D, AugmentError> {
    let mut values = Vec::with_capacity(rows.len() * dim);
    for r in rows {
        if r.values.len() != dim {
            return Err(AugmentError::Dimension { id: r.id.clone(), expected: dim, found: r.values.len() });
        }
        if r.values.iter().any(|v| !v.is_finite()) {
            return Err(AugmentError::NonFinite(r.id.clone()));
        }
        values.extend_from_slice(&r.values);
    }
    Ok(Tensor2D::from_vec(rows.len(), dim, values)?)
}

/// Fit the autoencoder on real training embeddings.
///
/// Any embedding whose novel is in the plan's test set aborts with
/// [`AugmentError::Leakage`] before a single parameter is touched.
pub fn train_autoencoder(
    train: &[LabeledEmbedding],
    plan: &SplitPlan,
    config: &AutoencoderConfig,
) -> Result<Autoencoder, AugmentError> {
    for e in train {
        if plan.is_test(&e.novel_id) || plan.is_test(&e.id) {
            return Err(AugmentError::Leakage(e.novel_id.clone()));
        }
        if e.origin != Origin::Real || !plan.is_train(&e.novel_id) {
            return Err(AugmentError::NotReal(e.id.clone()));
        }
    }
    if train.is_empty() {
        return Err(AugmentError::Empty);
    }
    let x = stack(train, config.input_dim)?;
    let mut model = Autoencoder::init(*config)?;
    let mut adam = Adam::new(AdamConfig { learning_rate: config.learning_rate, ..AdamConfig::default() }, &model.parameters());
    for epoch in 0..config.epochs {
        model.zero_grad();
        let loss = model.loss_and_backward(&x)?;
        if epoch == 0 {
            model.initial_loss = loss;
        }
        adam.step(&mut model.parameters_mut());
    }
    model.zero_grad();
    model.final_loss = model.loss_and_backward(&x)?;
    model.zero_grad();
    if config.epochs == 0 {
        model.initial_loss = model.final_loss;
    }
    Ok(model)
}

/// `multiplier` decoded latent perturbations per real embedding, in input
/// order. Synthetic ids are `<parent>#syn<j>`.
pub fn synthesize_embeddings(
    model: &Autoencoder,
    train: &[LabeledEmbedding],
    sigma: f64,
    multiplier: usize,
    seed: u64,
) -> Result<Vec<LabeledEmbedding>, AugmentError> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(AugmentError::Config(format!("noise sigma {sigma} is negative")));
    }
    if multiplier == 0 || train.is_empty() {
        return Ok(Vec::new());
    }
    let latent = model.encode(&stack(train, model.config.input_dim)?)?;
    let k = latent.cols();
    let mut rng = rng_from_seed(seed);
    let mut noisy = Vec::with_capacity(train.len() * multiplier * k);
    for r in 0..train.len() {
        for _ in 0..multiplier {
            for &z in latent.row(r) {
                let eps: f64 = StandardNormal.sample(&mut rng);
                noisy.push(z + sigma * eps);
            }
        }
    }
    let decoded = model.decode(&Tensor2D::from_vec(train.len() * multiplier, k, noisy)?)?;
    let mut out = Vec::with_capacity(decoded.rows());
    for (r, parent) in train.iter().enumerate() {
        for j in 0..multiplier {
            out.push(LabeledEmbedding {
                id: format!("{}#syn{j}", parent.novel_id),
                origin: Origin::Synthetic,
                novel_id: parent.novel_id.clone(),
                label: parent.label,
                values: decoded.row(r * multiplier + j).to_vec(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradient_check;
    use crate::split::SplitKind;
    use alloc::collections::BTreeSet;
    use rand::Rng;

    fn plan(train: &[&str], test: &[&str]) -> SplitPlan {
        SplitPlan {
            kind: SplitKind::AuthorAware,
            seed: 0,
            train_ids: train.iter().map(|s| String::from(*s)).collect(),
            test_ids: test.iter().map(|s| String::from(*s)).collect(),
        }
    }

    fn random_set(n: usize, d: usize, classes: usize, seed: u64) -> Vec<LabeledEmbedding> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|i| LabeledEmbedding::real(format!("N{i:03}"), i % classes, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect()
    }

    fn plan_for(set: &[LabeledEmbedding]) -> SplitPlan {
        let ids: Vec<&str> = set.iter().map(|e| e.novel_id.as_str()).collect();
        plan(&ids, &["TEST"])
    }

    fn small_config(d: usize) -> AutoencoderConfig {
        AutoencoderConfig { input_dim: d, latent_dim: 3, hidden_dim: 5, ..AutoencoderConfig::default() }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let set = random_set(6, 4, 2, 1);
        let x = stack(&set, 4).unwrap();
        let mut model = Autoencoder::init(small_config(4)).unwrap();
        let mut rng = rng_from_seed(2);
        let shifted: Vec<f64> = model.flat_parameters().iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        model.set_flat_parameters(&shifted);
        model.zero_grad();
        model.loss_and_backward(&x).unwrap();
        let analytic = model.flat_gradients();
        let mut theta = model.flat_parameters();
        let probe = model.clone();
        let err = gradient_check(
            |flat| {
                let mut m = probe.clone();
                m.set_flat_parameters(flat);
                m.loss_and_backward(&x).unwrap()
            },
            &mut theta,
            &analytic,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn test_embedding_is_a_leak() {
        let mut set = random_set(4, 4, 2, 3);
        let p = plan(&["N000", "N001", "N002"], &["N003"]);
        let err = train_autoencoder(&set, &p, &small_config(4)).unwrap_err();
        assert_eq!(err, AugmentError::Leakage("N003".into()));
        set.pop();
        assert!(train_autoencoder(&set, &p, &AutoencoderConfig { epochs: 1, ..small_config(4) }).is_ok());
    }

    #[test]
    fn synthetic_rows_are_rejected_as_training_input() {
        let set = random_set(3, 4, 2, 3);
        let model = Autoencoder::init(small_config(4)).unwrap();
        let syn = synthesize_embeddings(&model, &set, 0.1, 1, 0).unwrap();
        assert!(matches!(train_autoencoder(&syn, &plan_for(&set), &small_config(4)), Err(AugmentError::NotReal(_))));
    }

    #[test]
    fn training_lowers_reconstruction_error() {
        let set = random_set(20, 6, 2, 4);
        let model = train_autoencoder(&set, &plan_for(&set), &small_config(6)).unwrap();
        assert!(model.final_loss < model.initial_loss, "{} vs {}", model.final_loss, model.initial_loss);
    }

    #[test]
    fn planar_points_reconstruct_with_k_equal_two() {
        let rows = [[1.0, 0.0, 1.0], [0.0, 1.0, -1.0], [0.5, -0.5, 1.0]];
        let set: Vec<LabeledEmbedding> =
            rows.iter().enumerate().map(|(i, r)| LabeledEmbedding::real(format!("P{i}"), i % 2, r.to_vec())).collect();
        let config = AutoencoderConfig { input_dim: 3, latent_dim: 2, hidden_dim: 32, epochs: 3000, learning_rate: 1e-2, ..AutoencoderConfig::default() };
        let model = train_autoencoder(&set, &plan_for(&set), &config).unwrap();
        assert!(model.final_loss < 1e-3, "{}", model.final_loss);
    }

    #[test]
    fn counts_and_labels_are_preserved() {
        let set = random_set(45, 6, 7, 5);
        let model = Autoencoder::init(small_config(6)).unwrap();
        let syn = synthesize_embeddings(&model, &set, 0.1, 10, 6).unwrap();
        assert_eq!(syn.len(), 450);
        for c in 0..7 {
            let real = set.iter().filter(|e| e.label == c).count();
            assert_eq!(syn.iter().filter(|e| e.label == c).count(), 10 * real);
        }
        assert!(syn.iter().all(|e| e.origin == Origin::Synthetic && e.id.starts_with(&e.novel_id)));
        let ids: BTreeSet<&str> = syn.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids.len(), 450);
        assert!(synthesize_embeddings(&model, &set, 0.1, 0, 6).unwrap().is_empty());
        assert_eq!(syn, synthesize_embeddings(&model, &set, 0.1, 10, 6).unwrap());
    }

    #[test]
    fn zero_noise_reproduces_reconstruction() {
        let set = random_set(5, 6, 2, 7);
        let model = train_autoencoder(&set, &plan_for(&set), &AutoencoderConfig { epochs: 50, ..small_config(6) }).unwrap();
        let recon = model.reconstruct(&stack(&set, 6).unwrap()).unwrap();
        let syn = synthesize_embeddings(&model, &set, 0.0, 3, 8).unwrap();
        for (i, s) in syn.iter().enumerate() {
            assert_eq!(s.values.as_slice(), recon.row(i / 3));
        }
    }

    #[test]
    fn distance_to_reconstruction_shrinks_with_sigma() {
        let set = random_set(10, 6, 2, 9);
        let model = train_autoencoder(&set, &plan_for(&set), &AutoencoderConfig { epochs: 100, ..small_config(6) }).unwrap();
        let recon = model.reconstruct(&stack(&set, 6).unwrap()).unwrap();
        let mean_distance = |sigma: f64| {
            let syn = synthesize_embeddings(&model, &set, sigma, 5, 10).unwrap();
            let total: f64 = syn
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let sq: f64 = s.values.iter().zip(recon.row(i / 5)).map(|(a, b)| (a - b) * (a - b)).sum();
                    libm::sqrt(sq)
                })
                .sum();
            total / syn.len() as f64
        };
        let d = [0.2, 0.1, 0.05, 0.0].map(mean_distance);
        assert!(d[0] > d[1] && d[1] > d[2] && d[2] > d[3], "{d:?}");
        assert_eq!(d[3], 0.0);
    }

    #[test]
    fn config_is_validated() {
        assert!(Autoencoder::init(AutoencoderConfig { input_dim: 4, latent_dim: 4, ..small_config(4) }).is_err());
        assert!(Autoencoder::init(AutoencoderConfig { noise_sigma: -1.0, ..small_config(4) }).is_err());
        let set = random_set(2, 4, 2, 0);
        let model = Autoencoder::init(small_config(4)).unwrap();
        assert!(synthesize_embeddings(&model, &set, -0.5, 1, 0).is_err());
    }
}
