//! Graph attention network for whole-graph classification.
//!
//! Architecture: `layers` attention layers (concatenated heads, ELU after
//! hidden layers, identity after the last), global mean pooling, then a
//! linear softmax head. Node inputs are the 8-dim one-hot of gender and role.
//! Adjacency is binarized and every node attends to itself.
//!
//! For head `h` of a layer with input `X`:
//!
//! ```text
//! z     = X · W_h
//! e_ij  = LeakyReLU(a_h[..f]·z_i + a_h[f..]·z_j)      j ∈ N(i) ∪ {i}
//! α_ij  = softmax_j(e_ij)
//! out_i = Σ_j α_ij z_j
//! ```

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Gender, Role};
use crate::graph::NovelGraph;
use crate::neural::{argmax, softmax_cross_entropy, Activation, Adam, AdamConfig, NeuralError, Parameter, Tensor2D};
use crate::rng::{rng_from_seed, SeededRng};

pub const INPUT_DIM: usize = Gender::ALL.len() + Role::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub attention_slope: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for GatConfig {
    fn default() -> Self {
        Self {
            input_dim: INPUT_DIM,
            hidden_dim: 16,
            heads: 4,
            layers: 2,
            attention_slope: 0.2,
            dropout: 0.3,
            learning_rate: 0.005,
            epochs: 300,
            weight_decay: 5e-4,
            seed: 0,
        }
    }
}

impl GatConfig {
    /// Width of every layer output and of the pooled embedding.
    pub fn embedding_dim(&self) -> usize {
        self.hidden_dim * self.heads
    }

    fn validate(&self) -> Result<(), GatError> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.heads == 0 || self.layers == 0 {
            return Err(GatError::Config(String::from("dimensions, heads and layers must be at least 1")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(GatError::Config(alloc::format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatError {
    #[error("training labels cover {0} class(es); at least 2 are required")]
    SingleClass(usize),
    #[error("node features have {found} columns, model expects {expected}")]
    FeatureDim { expected: usize, found: usize },
    #[error("node {0} has an empty neighbor list (self-loop missing)")]
    EmptyNeighbors(usize),
    #[error("graph {0} has no nodes")]
    EmptyGraph(usize),
    #[error("{graphs} graphs but {labels} labels")]
    LabelCount { graphs: usize, labels: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Several graphs stacked into one disjoint node set.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub graph_ids: Vec<String>,
    pub features: Tensor2D,
    /// Neighbor lists, each including the node itself.
    pub neighbors: Vec<Vec<usize>>,
    /// Graph index of each node.
    pub membership: Vec<usize>,
    pub graph_count: usize,
}

/// One-hot gender (3) followed by one-hot role (5).
pub fn node_features(gender: Gender, role: Role) -> [f64; INPUT_DIM] {
    let mut f = [0.0; INPUT_DIM];
    f[gender.index()] = 1.0;
    f[Gender::ALL.len() + role.index()] = 1.0;
    f
}

impl GraphBatch {
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a NovelGraph>) -> Self {
        let mut graph_ids = Vec::new();
        let mut values = Vec::new();
        let mut neighbors = Vec::new();
        let mut membership = Vec::new();
        for (gi, g) in graphs.into_iter().enumerate() {
            let offset = membership.len();
            graph_ids.push(g.novel_id.clone());
            for (i, adj) in g.adjacency().into_iter().enumerate() {
                let mut list = Vec::with_capacity(adj.len() + 1);
                list.push(offset + i);
                list.extend(adj.into_iter().map(|j| offset + j));
                neighbors.push(list);
                membership.push(gi);
            }
            for node in &g.nodes {
                values.extend_from_slice(&node_features(node.gender, node.role));
            }
        }
        let n = membership.len();
        Self {
            graph_count: graph_ids.len(),
            graph_ids,
            features: Tensor2D::from_vec(n, INPUT_DIM, values).expect("one feature row per node"),
            neighbors,
            membership,
        }
    }

    pub fn node_count(&self) -> usize {
        self.membership.len()
    }

    fn validate(&self, input_dim: usize) -> Result<(), GatError> {
        if self.features.cols() != input_dim {
            return Err(GatError::FeatureDim { expected: input_dim, found: self.features.cols() });
        }
        if let Some(i) = self.neighbors.iter().position(Vec::is_empty) {
            return Err(GatError::EmptyNeighbors(i));
        }
        let mut sizes = vec![0usize; self.graph_count];
        for &g in &self.membership {
            sizes[g] += 1;
        }
        if let Some(g) = sizes.iter().position(|&s| s == 0) {
            return Err(GatError::EmptyGraph(g));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatHead {
    /// `f_in × f_out`.
    pub weight: Parameter,
    /// `1 × 2·f_out`: first half scores the attending node, second half the neighbor.
    pub attention: Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatLayer {
    pub heads: Vec<GatHead>,
    /// `1 × heads·f_out`.
    pub bias: Parameter,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatModel {
    pub config: GatConfig,
    pub class_count: usize,
    pub layers: Vec<GatLayer>,
    /// `embedding_dim × class_count`.
    pub head_weight: Parameter,
    pub head_bias: Parameter,
}

struct HeadCache {
    z: Tensor2D,
    /// Raw score per edge, before LeakyReLU.
    score: Vec<f64>,
    alpha: Vec<f64>,
    /// Dropout multiplier per edge (1 when dropout is off).
    keep: Vec<f64>,
}

struct LayerCache {
    input: Tensor2D,
    input_keep: Option<Vec<f64>>,
    heads: Vec<HeadCache>,
    pre_activation: Tensor2D,
}

/// Everything a backward pass needs.
pub struct Forward {
    layers: Vec<LayerCache>,
    pub pooled: Tensor2D,
    pub logits: Tensor2D,
}

impl Forward {
    /// Attention coefficients `[layer][head][edge]`, edges in neighbor-list order.
    pub fn attention(&self) -> Vec<Vec<Vec<f64>>> {
        self.layers.iter().map(|l| l.heads.iter().map(|h| h.alpha.clone()).collect()).collect()
    }
}

fn dropout_mask(len: usize, rate: f64, rng: &mut SeededRng) -> Vec<f64> {
    let scale = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.random::<f64>() < rate { 0.0 } else { scale }).collect()
}

impl GatModel {
    /// Seeded Glorot initialization; biases start at zero.
    pub fn init(config: GatConfig, class_count: usize) -> Result<Self, GatError> {
        config.validate()?;
        let mut rng = rng_from_seed(config.seed);
        let f_out = config.hidden_dim;
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let f_in = if l == 0 { config.input_dim } else { config.embedding_dim() };
            let heads = (0..config.heads)
                .map(|_| GatHead {
                    weight: Parameter::new(Tensor2D::glorot(f_in, f_out, &mut rng)),
                    attention: Parameter::new(Tensor2D::glorot(1, 2 * f_out, &mut rng)),
                })
                .collect();
            let activation = if l + 1 == config.layers { Activation::Identity } else { Activation::Elu { alpha: 1.0 } };
            layers.push(GatLayer { heads, bias: Parameter::new(Tensor2D::zeros(1, config.embedding_dim())), activation });
        }
        Ok(Self {
            config,
            class_count,
            layers,
            head_weight: Parameter::new(Tensor2D::glorot(config.embedding_dim(), class_count, &mut rng)),
            head_bias: Parameter::new(Tensor2D::zeros(1, class_count)),
        })
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for head in &layer.heads {
                out.push(&head.weight);
                out.push(&head.attention);
            }
            out.push(&layer.bias);
        }
        out.push(&self.head_weight);
        out.push(&self.head_bias);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            for head in &mut layer.heads {
                out.push(&mut head.weight);
                out.push(&mut head.attention);
            }
            out.push(&mut layer.bias);
        }
        out.push(&mut self.head_weight);
        out.push(&mut self.head_bias);
        out
    }

    /// All parameter values in [`Self::parameters`] order.
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

    /// Forward pass. Dropout is active only when `dropout_rng` is given.
    pub fn forward(&self, batch: &GraphBatch, mut dropout_rng: Option<&mut SeededRng>) -> Result<Forward, GatError> {
        batch.validate(self.config.input_dim)?;
        let rate = self.config.dropout;
        let lrelu = Activation::LeakyRelu { slope: self.config.attention_slope };
        let n = batch.node_count();
        let f_out = self.config.hidden_dim;
        let mut x = batch.features.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut input_keep = None;
            if l > 0 && rate > 0.0 {
                if let Some(rng) = dropout_rng.as_deref_mut() {
                    let mask = dropout_mask(x.values().len(), rate, rng);
                    for (v, k) in x.values_mut().iter_mut().zip(&mask) {
                        *v *= k;
                    }
                    input_keep = Some(mask);
                }
            }
            let mut out = Tensor2D::zeros(n, layer.heads.len() * f_out);
            let mut heads = Vec::with_capacity(layer.heads.len());
            for (h, head) in layer.heads.iter().enumerate() {
                let z = x.matmul(&head.weight.value)?;
                let a = head.attention.value.values();
                let (a_self, a_nbr) = a.split_at(f_out);
                let s: Vec<f64> = (0..n).map(|i| dot(z.row(i), a_self)).collect();
                let t: Vec<f64> = (0..n).map(|i| dot(z.row(i), a_nbr)).collect();
                let mut score = Vec::new();
                let mut alpha = Vec::new();
                for (i, nbrs) in batch.neighbors.iter().enumerate() {
                    let start = score.len();
                    score.extend(nbrs.iter().map(|&j| s[i] + t[j]));
                    let e: Vec<f64> = score[start..].iter().map(|&v| lrelu.apply(v)).collect();
                    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let exp: Vec<f64> = e.iter().map(|v| libm::exp(v - max)).collect();
                    let total: f64 = exp.iter().sum();
                    alpha.extend(exp.iter().map(|v| v / total));
                }
                let keep = match dropout_rng.as_deref_mut() {
                    Some(rng) if rate > 0.0 => dropout_mask(alpha.len(), rate, rng),
                    _ => vec![1.0; alpha.len()],
                };
                let mut e = 0;
                for (i, nbrs) in batch.neighbors.iter().enumerate() {
                    let row = &mut out.row_mut(i)[h * f_out..(h + 1) * f_out];
                    for &j in nbrs {
                        let w = alpha[e] * keep[e];
                        if w != 0.0 {
                            for (o, zj) in row.iter_mut().zip(z.row(j)) {
                                *o += w * zj;
                            }
                        }
                        e += 1;
                    }
                }
                heads.push(HeadCache { z, score, alpha, keep });
            }
            out.add_row_assign(&layer.bias.value)?;
            let next = layer.activation.forward(&out);
            caches.push(LayerCache { input: x, input_keep, heads, pre_activation: out });
            x = next;
        }
        let pooled = mean_pool(&x, &batch.membership, batch.graph_count)?;
        let mut logits = pooled.matmul(&self.head_weight.value)?;
        logits.add_row_assign(&self.head_bias.value)?;
        Ok(Forward { layers: caches, pooled, logits })
    }

    /// Accumulate parameter gradients given `dLoss/dLogits`.
    pub fn backward(&mut self, batch: &GraphBatch, fwd: &Forward, dlogits: &Tensor2D) -> Result<(), GatError> {
        self.head_weight.grad.add_assign(&fwd.pooled.t_matmul(dlogits)?)?;
        self.head_bias.grad.add_assign(&dlogits.column_sums())?;
        let dpooled = dlogits.matmul_t(&self.head_weight.value)?;

        let n = batch.node_count();
        let mut sizes = vec![0usize; batch.graph_count];
        for &g in &batch.membership {
            sizes[g] += 1;
        }
        let mut dx = Tensor2D::zeros(n, dpooled.cols());
        for (i, &g) in batch.membership.iter().enumerate() {
            let inv = 1.0 / sizes[g] as f64;
            for (d, p) in dx.row_mut(i).iter_mut().zip(dpooled.row(g)) {
                *d = p * inv;
            }
        }

        let slope = self.config.attention_slope;
        let lrelu = Activation::LeakyRelu { slope };
        let f_out = self.config.hidden_dim;
        for (layer, cache) in self.layers.iter_mut().zip(&fwd.layers).rev() {
            let dpre = layer.activation.backward(&cache.pre_activation, &dx)?;
            layer.bias.grad.add_assign(&dpre.column_sums())?;
            let mut dinput = Tensor2D::zeros(n, cache.input.cols());
            for (h, (head, hc)) in layer.heads.iter_mut().zip(&cache.heads).enumerate() {
                let mut dz = Tensor2D::zeros(n, f_out);
                let mut ds = vec![0.0; n];
                let mut dt = vec![0.0; n];
                let mut e0 = 0;
                let mut dalpha = Vec::new();
                for (i, nbrs) in batch.neighbors.iter().enumerate() {
                    let dout = &dpre.row(i)[h * f_out..(h + 1) * f_out];
                    dalpha.clear();
                    dalpha.extend(nbrs.iter().enumerate().map(|(k, &j)| dot(dout, hc.z.row(j)) * hc.keep[e0 + k]));
                    let weighted: f64 = dalpha.iter().enumerate().map(|(k, d)| hc.alpha[e0 + k] * d).sum();
                    for (k, &j) in nbrs.iter().enumerate() {
                        let e = e0 + k;
                        let w = hc.alpha[e] * hc.keep[e];
                        if w != 0.0 {
                            for (d, o) in dz.row_mut(j).iter_mut().zip(dout) {
                                *d += w * o;
                            }
                        }
                        let de = hc.alpha[e] * (dalpha[k] - weighted);
                        let dscore = de * lrelu.derivative(hc.score[e]);
                        ds[i] += dscore;
                        dt[j] += dscore;
                    }
                    e0 += nbrs.len();
                }
                let a = head.attention.value.values().to_vec();
                let (a_self, a_nbr) = a.split_at(f_out);
                let da = head.attention.grad.values_mut();
                for i in 0..n {
                    let zi = hc.z.row(i);
                    for k in 0..f_out {
                        da[k] += ds[i] * zi[k];
                        da[f_out + k] += dt[i] * zi[k];
                    }
                    let row = dz.row_mut(i);
                    for k in 0..f_out {
                        row[k] += ds[i] * a_self[k] + dt[i] * a_nbr[k];
                    }
                }
                head.weight.grad.add_assign(&cache.input.t_matmul(&dz)?)?;
                dinput.add_assign(&dz.matmul_t(&head.weight.value)?)?;
            }
            if let Some(keep) = &cache.input_keep {
                for (d, k) in dinput.values_mut().iter_mut().zip(keep) {
                    *d *= k;
                }
            }
            dx = dinput;
        }
        Ok(())
    }

    /// Mean cross-entropy and gradients (accumulated; zero them first).
    pub fn loss_and_backward(
        &mut self,
        batch: &GraphBatch,
        labels: &[usize],
        dropout_rng: Option<&mut SeededRng>,
    ) -> Result<(f64, Forward), GatError> {
        if labels.len() != batch.graph_count {
            return Err(GatError::LabelCount { graphs: batch.graph_count, labels: labels.len() });
        }
        let fwd = self.forward(batch, dropout_rng)?;
        let (loss, dlogits) = softmax_cross_entropy(&fwd.logits, labels)?;
        self.backward(batch, &fwd, &dlogits)?;
        Ok((loss, fwd))
    }

    /// Pooled pre-head embeddings, dropout off, one per graph in batch order.
    pub fn embed(&self, batch: &GraphBatch) -> Result<Vec<Vec<f64>>, GatError> {
        Ok(self.forward(batch, None)?.pooled.to_rows())
    }

    /// Predicted class per graph from the softmax head.
    pub fn predict(&self, batch: &GraphBatch) -> Result<Vec<usize>, GatError> {
        let logits = self.forward(batch, None)?.logits;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Arithmetic mean of node rows per graph.
pub fn mean_pool(h: &Tensor2D, membership: &[usize], graph_count: usize) -> Result<Tensor2D, GatError> {
    let mut out = Tensor2D::zeros(graph_count, h.cols());
    let mut sizes = vec![0usize; graph_count];
    for (i, &g) in membership.iter().enumerate() {
        sizes[g] += 1;
        for (o, v) in out.row_mut(g).iter_mut().zip(h.row(i)) {
            *o += v;
        }
    }
    for (g, &s) in sizes.iter().enumerate() {
        if s == 0 {
            return Err(GatError::EmptyGraph(g));
        }
        for o in out.row_mut(g) {
            *o /= s as f64;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Training objective (with dropout) per epoch.
    pub loss: Vec<f64>,
    /// Accuracy on the training graphs with dropout off, per epoch.
    pub train_accuracy: Vec<f64>,
}

/// Full-batch training on the given graphs only.
pub fn train_gat(
    train: &GraphBatch,
    labels: &[usize],
    class_count: usize,
    config: &GatConfig,
) -> Result<(GatModel, TrainLog), GatError> {
    if labels.len() != train.graph_count {
        return Err(GatError::LabelCount { graphs: train.graph_count, labels: labels.len() });
    }
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(GatError::SingleClass(present.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
        return Err(NeuralError::LabelOutOfRange { label: bad, classes: class_count }.into());
    }
    train.validate(config.input_dim)?;
    let mut model = GatModel::init(*config, class_count)?;
    let mut adam = Adam::new(
        AdamConfig { learning_rate: config.learning_rate, weight_decay: config.weight_decay, ..AdamConfig::default() },
        &model.parameters(),
    );
    let mut dropout_rng = rng_from_seed(config.seed ^ 0xd1b5_4a32_d192_ed03);
    let mut log = TrainLog::default();
    for _ in 0..config.epochs {
        model.zero_grad();
        let (loss, _) = model.loss_and_backward(train, labels, Some(&mut dropout_rng))?;
        adam.step(&mut model.parameters_mut());
        let predicted = model.predict(train)?;
        let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
        log.loss.push(loss);
        log.train_accuracy.push(correct as f64 / labels.len() as f64);
    }
    Ok((model, log))
}

/// Pooled embeddings of `graphs` from a trained model.
pub fn extract_embeddings(model: &GatModel, graphs: &GraphBatch) -> Result<Vec<Vec<f64>>, GatError> {
    model.embed(graphs)
}
