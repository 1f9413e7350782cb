//! Distributed bag-of-words embedding of WL documents.
//!
//! Each graph owns a vector `g`; each vocabulary token owns an output vector
//! `u`. For every (graph, token) occurrence the loss is
//! `-ln σ(g·u_pos) - Σ ln σ(-g·u_neg)` over `negative_samples` tokens drawn
//! from the unigram distribution raised to the 3/4 power. Updates are plain
//! SGD with a learning rate decayed linearly to `1e-4 × learning_rate`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::wl::WlDocument;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Graph2VecConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negative_samples: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Graph2VecConfig {
    fn default() -> Self {
        Self { dim: 128, epochs: 50, negative_samples: 5, learning_rate: 0.025, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Graph2VecError {
    #[error("need at least 2 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("empty vocabulary")]
    EmptyVocabulary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub graph_id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph2VecModel {
    pub embeddings: Vec<EmbeddingVector>,
    pub vocabulary: Vec<String>,
    pub token_vectors: Vec<Vec<f64>>,
    /// Mean loss per (graph, token) pair for every epoch.
    pub epoch_loss: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradients of one negative-sampling term.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub graph: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Loss and exact gradient of `-ln σ(g·u⁺) - Σ ln σ(-g·u⁻)`.
pub fn sgns_loss_and_grad(graph: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let d = graph.len();
    let mut out = SgnsGradient {
        loss: 0.0,
        graph: vec![0.0; d],
        positive: vec![0.0; d],
        negatives: vec![vec![0.0; d]; negatives.len()],
    };
    let term = |u: &[f64], label: f64, du: &mut [f64], loss: &mut f64, dg: &mut [f64]| {
        let s = dot(graph, u);
        let signed = if label > 0.5 { s } else { -s };
        *loss -= log_sigmoid(signed);
        // d/ds of -ln σ(±s) = σ(s) - label
        let coeff = sigmoid(s) - label;
        for k in 0..d {
            dg[k] += coeff * u[k];
            du[k] += coeff * graph[k];
        }
    };
    term(positive, 1.0, &mut out.positive, &mut out.loss, &mut out.graph);
    for (u, du) in negatives.iter().zip(out.negatives.iter_mut()) {
        term(u, 0.0, du, &mut out.loss, &mut out.graph);
    }
    out
}

/// Seeded initial graph vectors: uniform in `(-0.5/d, 0.5/d)`.
pub fn initial_vectors(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let half = 0.5 / dim as f64;
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-half..half)).collect()).collect()
}

pub fn train_graph2vec(documents: &[WlDocument], config: &Graph2VecConfig) -> Result<Graph2VecModel, Graph2VecError> {
    if documents.len() < 2 {
        return Err(Graph2VecError::TooFewDocuments(documents.len()));
    }
    if config.dim < 2 {
        return Err(Graph2VecError::Dimension(config.dim));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in documents {
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(Graph2VecError::EmptyVocabulary);
    }
    let index: BTreeMap<&str, usize> = counts.keys().enumerate().map(|(i, t)| (*t, i)).collect();
    let vocabulary: Vec<String> = counts.keys().map(|t| String::from(*t)).collect();
    let noise = WeightedIndex::new(counts.values().map(|&c| libm::pow(c as f64, 0.75)))
        .map_err(|_| Graph2VecError::EmptyVocabulary)?;

    let d = config.dim;
    // graph vectors come first from the seed so epochs = 0 returns exactly them
    let mut graphs = initial_vectors(documents.len(), d, config.seed);
    let mut tokens = vec![vec![0.0; d]; vocabulary.len()];
    let mut rng = rng_from_seed(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut pairs: Vec<(usize, usize)> = documents
        .iter()
        .enumerate()
        .flat_map(|(g, doc)| doc.tokens.iter().map(move |t| (g, t)))
        .map(|(g, t)| (g, index[t.as_str()]))
        .collect();
    let total_steps = (pairs.len() * config.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut negs: Vec<usize> = Vec::with_capacity(config.negative_samples);

    for _ in 0..config.epochs {
        pairs.shuffle(&mut rng);
        let mut loss = 0.0;
        for &(g, pos) in &pairs {
            let lr = config.learning_rate * f64::max(1e-4, 1.0 - step as f64 / total_steps);
            step += 1;
            negs.clear();
            while negs.len() < config.negative_samples {
                let n = noise.sample(&mut rng);
                if n != pos {
                    negs.push(n);
                } else if counts.len() == 1 {
                    break;
                }
            }
            let neg_refs: Vec<&[f64]> = negs.iter().map(|&n| tokens[n].as_slice()).collect();
            let grad = sgns_loss_and_grad(&graphs[g], &tokens[pos], &neg_refs);
            loss += grad.loss;
            for k in 0..d {
                graphs[g][k] -= lr * grad.graph[k];
                tokens[pos][k] -= lr * grad.positive[k];
            }
            for (&n, dn) in negs.iter().zip(&grad.negatives) {
                for k in 0..d {
                    tokens[n][k] -= lr * dn[k];
                }
            }
        }
        epoch_loss.push(loss / pairs.len().max(1) as f64);
    }

    Ok(Graph2VecModel {
        embeddings: documents
            .iter()
            .zip(graphs)
            .map(|(doc, values)| EmbeddingVector { graph_id: doc.graph_id.clone(), values })
            .collect(),
        vocabulary,
        token_vectors: tokens,
        epoch_loss,
    })
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (libm::sqrt(dot(a, a)) * libm::sqrt(dot(b, b))).max(1e-300)
}
