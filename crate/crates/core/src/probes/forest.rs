use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, check_rows, ProbeError};
use crate::rng::{derive_seed, rng_from_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { tree_count: 200, max_depth: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        class: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict_row(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub tree_count: usize,
    pub max_depth: usize,
    pub features_per_split: usize,
    pub class_count: usize,
    pub dim: usize,
    pub seed: u64,
}

impl ForestModel {
    /// Majority vote across trees; ties go to the lowest class index.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>, ProbeError> {
        check_rows(rows, Some(self.dim))?;
        Ok(rows
            .iter()
            .map(|x| {
                let mut votes = vec![0usize; self.class_count];
                for t in &self.trees {
                    votes[t.predict_row(x)] += 1;
                }
                majority(&votes)
            })
            .collect())
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t) * (c as f64 / t)).sum::<f64>()
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    class_count: usize,
    max_depth: usize,
    features_per_split: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &i in idx {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Best (feature, threshold, gain) among the candidate features, by
    /// weighted Gini decrease. Thresholds are midpoints between consecutive
    /// distinct values.
    fn best_split(&self, idx: &[usize], rng: &mut SeededRng) -> Option<(usize, f64, f64)> {
        let d = self.rows[0].len();
        let parent_counts = self.class_counts(idx);
        let parent = gini(&parent_counts, idx.len());
        let n = idx.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for feature in sample(rng, d, self.features_per_split.min(d)).into_iter() {
            order.sort_by(|&a, &b| self.rows[a][feature].total_cmp(&self.rows[b][feature]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.class_count];
            let mut right = parent_counts.clone();
            for k in 0..order.len() - 1 {
                let label = self.labels[order[k]];
                left[label] += 1;
                right[label] -= 1;
                let (lo, hi) = (self.rows[order[k]][feature], self.rows[order[k + 1]][feature]);
                if lo == hi {
                    continue;
                }
                let nl = k + 1;
                let nr = order.len() - nl;
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((feature, lo + (hi - lo) / 2.0, gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut SeededRng) -> usize {
        let counts = self.class_counts(idx);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { class: majority(&counts) });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.max_depth || pure || idx.len() < 2 {
            return at;
        }
        if let Some((feature, threshold, _)) = self.best_split(idx, rng) {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
            let left = self.grow(&l, depth + 1, rng);
            let right = self.grow(&r, depth + 1, rng);
            self.nodes[at] = TreeNode::Split { feature, threshold, left, right };
        }
        at
    }
}

/// Bagged Gini trees with `⌈√d⌉` candidate features per split.
///
/// Tree `t` draws its bootstrap sample and feature subsets from its own stream
/// seeded by `derive_seed(seed, "tree/<t>")`, so trees are independent of each
/// other and of fitting order.
pub fn train_forest(
    rows: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    config: &ForestConfig,
) -> Result<ForestModel, ProbeError> {
    let d = check_rows(rows, None)?;
    check_labels(rows.len(), labels, class_count)?;
    let features_per_split = libm::ceil(libm::sqrt(d as f64)) as usize;
    let n = rows.len();
    let trees = (0..config.tree_count)
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(config.seed, &alloc::format!("tree/{t}")));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = Builder {
                rows,
                labels,
                class_count,
                max_depth: config.max_depth,
                features_per_split,
                nodes: Vec::new(),
            };
            builder.grow(&idx, 0, &mut rng);
            DecisionTree { nodes: builder.nodes }
        })
        .collect();
    Ok(ForestModel {
        trees,
        tree_count: config.tree_count,
        max_depth: config.max_depth,
        features_per_split,
        class_count,
        dim: d,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{train_logreg, LogRegConfig};
    use super::*;

    fn xor() -> (Vec<Vec<f64>>, Vec<usize>) {
        let base = [([0.0, 0.0], 0), ([1.0, 1.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..25 {
            for (x, y) in base {
                rows.push(x.to_vec());
                labels.push(y);
            }
        }
        (rows, labels)
    }

    fn accuracy(a: &[usize], b: &[usize]) -> f64 {
        a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
    }

    #[test]
    fn xor_is_learned_where_logreg_fails() {
        let (x, y) = xor();
        let forest = train_forest(&x, &y, 2, &ForestConfig { tree_count: 25, ..Default::default() }).unwrap();
        assert_eq!(accuracy(&forest.predict(&x).unwrap(), &y), 1.0);
        let linear = train_logreg(&x, &y, 2, &LogRegConfig::default()).unwrap();
        assert!(accuracy(&linear.predict(&x).unwrap().0, &y) < 1.0);
    }

    #[test]
    fn constant_features_give_single_leaves() {
        let x = vec![vec![1.0, 2.0]; 9];
        let y = vec![1, 1, 1, 1, 1, 0, 0, 0, 2];
        let forest = train_forest(&x, &y, 3, &ForestConfig { tree_count: 10, ..Default::default() }).unwrap();
        assert!(forest.trees.iter().all(|t| t.nodes.len() == 1));
        // bootstrap majorities vary per tree, but the vote follows the data
        assert_eq!(forest.predict(&[vec![1.0, 2.0]]).unwrap(), vec![1]);
    }

    #[test]
    fn depth_is_capped() {
        let x: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..64).map(|i| i % 2).collect();
        let forest = train_forest(&x, &y, 2, &ForestConfig { tree_count: 5, max_depth: 3, seed: 1 }).unwrap();
        assert!(forest.trees.iter().all(|t| t.depth() <= 3));
    }

    fn random_data(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|r| usize::from(r[0] + r[1] * r[2] > 0.0) + usize::from(r[3] > 0.5)).collect();
        (rows, labels)
    }

    #[test]
    fn same_seed_same_predictions() {
        let (x, y) = random_data(1, 120);
        let (held, _) = random_data(2, 50);
        let config = ForestConfig { tree_count: 30, max_depth: 6, seed: 77 };
        let a = train_forest(&x, &y, 3, &config).unwrap();
        let b = train_forest(&x, &y, 3, &config).unwrap();
        assert_eq!(a.predict(&held).unwrap(), b.predict(&held).unwrap());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn column_scaling_does_not_change_predictions(
            seed in 0u64..1000,
            scales in proptest::collection::vec(0.01f64..100.0, 5),
        ) {
            let (x, y) = random_data(seed, 80);
            let (held, _) = random_data(seed + 1, 40);
            let scale = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
                rows.iter().map(|r| r.iter().zip(&scales).map(|(v, s)| v * s).collect()).collect()
            };
            let config = ForestConfig { tree_count: 15, max_depth: 5, seed };
            let plain = train_forest(&x, &y, 3, &config).unwrap().predict(&held).unwrap();
            let scaled = train_forest(&scale(&x), &y, 3, &config).unwrap().predict(&scale(&held)).unwrap();
            proptest::prop_assert_eq!(plain, scaled);
        }
    }
}
