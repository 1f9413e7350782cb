//! Downstream classifiers and metrics.
//!
//! Labels are class indices `0..class_count`; argmax ties always resolve to
//! the lowest index.

mod forest;
mod logreg;
mod metrics;

pub use forest::{train_forest, DecisionTree, ForestConfig, ForestModel, TreeNode};
pub use logreg::{train_logreg, LogRegConfig, LogRegModel};
pub use metrics::{compute_metrics, Metrics};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::NeuralError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("training data covers {0} class(es); at least 2 are required")]
    SingleClass(usize),
    #[error("no training rows")]
    Empty,
    #[error("row {row} has {found} features, expected {expected}")]
    Dimension { row: usize, expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

pub(crate) fn check_rows(rows: &[Vec<f64>], dim: Option<usize>) -> Result<usize, ProbeError> {
    let expected = match dim {
        Some(d) => d,
        None => rows.first().ok_or(ProbeError::Empty)?.len(),
    };
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != expected) {
        return Err(ProbeError::Dimension { row, expected, found: r.len() });
    }
    Ok(expected)
}

pub(crate) fn check_labels(rows: usize, labels: &[usize], classes: usize) -> Result<(), ProbeError> {
    if rows != labels.len() {
        return Err(ProbeError::LengthMismatch { rows, labels: labels.len() });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(ProbeError::LabelOutOfRange { label, classes });
    }
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(ProbeError::SingleClass(present.len()));
    }
    Ok(())
}

/// Per-column z-scoring fitted on training rows. Columns with zero variance
/// are centered only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, ProbeError> {
        let d = check_rows(rows, None)?;
        let n = rows.len() as f64;
        let mut mean = alloc::vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut scale = alloc::vec![0.0; d];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { libm::sqrt(*s) } else { 1.0 };
        }
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect()
    }
}
