use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ProbeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// 0 for a class that was never predicted.
    pub precision: Vec<f64>,
    /// 0 for a class absent from the evaluation set.
    pub recall: Vec<f64>,
}

pub fn compute_metrics(truth: &[usize], predicted: &[usize], class_count: usize) -> Result<Metrics, ProbeError> {
    if truth.len() != predicted.len() || truth.is_empty() {
        return Err(ProbeError::LengthMismatch { rows: truth.len(), labels: predicted.len() });
    }
    if let Some(&label) = truth.iter().chain(predicted).find(|&&l| l >= class_count) {
        return Err(ProbeError::LabelOutOfRange { label, classes: class_count });
    }
    let mut confusion = vec![vec![0usize; class_count]; class_count];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..class_count).map(|c| confusion[c][c]).sum();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = (0..class_count)
        .map(|c| ratio(confusion[c][c], (0..class_count).map(|t| confusion[t][c]).sum()))
        .collect();
    let recall = (0..class_count).map(|c| ratio(confusion[c][c], confusion[c].iter().sum())).collect();
    Ok(Metrics { accuracy: correct as f64 / truth.len() as f64, confusion, precision, recall })
}
