//! Hand-crafted graph-level features: structural statistics and semantic
//! composition summaries.
//!
//! Structural statistics use the unweighted simple graph; edge weights only
//! decide whether an edge exists.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Gender, Role};
use crate::graph::NovelGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralFeatures {
    pub node_count: f64,
    pub edge_count: f64,
    pub density: f64,
    pub degree_min: f64,
    pub degree_max: f64,
    pub degree_mean: f64,
    /// Population standard deviation.
    pub degree_std: f64,
    pub avg_clustering: f64,
    pub component_count: f64,
    pub largest_component_fraction: f64,
}

pub const STRUCTURAL_COLUMNS: [&str; 10] = [
    "node_count",
    "edge_count",
    "density",
    "degree_min",
    "degree_max",
    "degree_mean",
    "degree_std",
    "avg_clustering",
    "component_count",
    "largest_component_fraction",
];

pub const SEMANTIC_COLUMNS: [&str; 8] = [
    "gender_male",
    "gender_female",
    "gender_unknown",
    "role_protagonist",
    "role_antagonist",
    "role_support",
    "role_narrator",
    "role_minor",
];

impl StructuralFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        alloc::vec![
            self.node_count,
            self.edge_count,
            self.density,
            self.degree_min,
            self.degree_max,
            self.degree_mean,
            self.degree_std,
            self.avg_clustering,
            self.component_count,
            self.largest_component_fraction,
        ]
    }
}

/// Gender proportions (male, female, unknown) then role proportions
/// (protagonist, antagonist, support, narrator, minor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticSummary(pub [f64; 8]);

impl SemanticSummary {
    pub fn gender(&self) -> &[f64] {
        &self.0[..3]
    }

    pub fn roles(&self) -> &[f64] {
        &self.0[3..]
    }
}

/// Local clustering coefficient of every node; 0 for degree below 2.
pub fn clustering_coefficients(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut mark = alloc::vec![false; n];
    adj.iter()
        .map(|nbrs| {
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            for &u in nbrs {
                mark[u] = true;
            }
            let mut links = 0usize;
            for &u in nbrs {
                links += adj[u].iter().filter(|&&v| mark[v]).count();
            }
            for &u in nbrs {
                mark[u] = false;
            }
            // every neighbor-neighbor link was seen from both ends
            (links / 2) as f64 / (k * (k - 1) / 2) as f64
        })
        .collect()
}

/// Connected component sizes.
pub fn component_sizes(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut seen = alloc::vec![false; adj.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..adj.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

pub fn structural_features(g: &NovelGraph) -> StructuralFeatures {
    let adj = g.adjacency();
    let n = adj.len();
    let m = g.edge_count();
    let degrees: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let nf = n.max(1) as f64;
    let mean = degrees.iter().sum::<f64>() / nf;
    let var = degrees.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / nf;
    let density = if n >= 2 { 2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)) } else { 0.0 };
    let clustering = clustering_coefficients(&adj);
    let components = component_sizes(&adj);
    StructuralFeatures {
        node_count: n as f64,
        edge_count: m as f64,
        density,
        degree_min: if n == 0 { 0.0 } else { degrees.iter().copied().fold(f64::INFINITY, f64::min) },
        degree_max: degrees.iter().copied().fold(0.0, f64::max),
        degree_mean: mean,
        degree_std: libm::sqrt(var),
        avg_clustering: clustering.iter().sum::<f64>() / nf,
        component_count: components.len() as f64,
        largest_component_fraction: components.iter().copied().max().unwrap_or(0) as f64 / nf,
    }
}

pub fn semantic_summary(g: &NovelGraph) -> SemanticSummary {
    let mut out = [0.0; 8];
    for node in &g.nodes {
        out[node.gender.index()] += 1.0;
        out[Gender::ALL.len() + node.role.index()] += 1.0;
    }
    let n = g.node_count().max(1) as f64;
    for v in &mut out {
        *v /= n;
    }
    debug_assert_eq!(Gender::ALL.len() + Role::ALL.len(), 8);
    SemanticSummary(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Structural,
    Semantic,
}

/// One row per novel, columns in the fixed order of [`STRUCTURAL_COLUMNS`] or
/// [`SEMANTIC_COLUMNS`], with author labels aligned to rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub window: u32,
    pub columns: Vec<String>,
    pub novel_ids: Vec<String>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("graphs were built with different windows ({0} and {1})")]
    MixedWindows(u32, u32),
    #[error("no graphs given")]
    Empty,
}

pub fn feature_matrix(graphs: &[NovelGraph], kind: FeatureKind) -> Result<FeatureMatrix, FeatureError> {
    let window = graphs.first().ok_or(FeatureError::Empty)?.window;
    if let Some(g) = graphs.iter().find(|g| g.window != window) {
        return Err(FeatureError::MixedWindows(window, g.window));
    }
    let columns: &[&str] = match kind {
        FeatureKind::Structural => &STRUCTURAL_COLUMNS,
        FeatureKind::Semantic => &SEMANTIC_COLUMNS,
    };
    Ok(FeatureMatrix {
        kind,
        window,
        columns: columns.iter().map(|c| String::from(*c)).collect(),
        novel_ids: graphs.iter().map(|g| g.novel_id.clone()).collect(),
        labels: graphs.iter().map(|g| g.author_id.clone()).collect(),
        rows: graphs
            .iter()
            .map(|g| match kind {
                FeatureKind::Structural => structural_features(g).to_vec(),
                FeatureKind::Semantic => semantic_summary(g).0.to_vec(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphNode;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize)], window: u32) -> NovelGraph {
        let nodes = (0..n)
            .map(|i| GraphNode { character_id: format!("C{i:02}"), gender: Gender::Male, role: Role::Minor })
            .collect();
        NovelGraph::from_parts(
            "N".into(),
            "A".into(),
            window,
            nodes,
            edges.iter().map(|&(a, b)| (format!("C{a:02}"), format!("C{b:02}"), 1)),
        )
        .unwrap()
    }

    fn with_attrs(attrs: &[(Gender, Role)]) -> NovelGraph {
        let mut g = graph(attrs.len(), &[], 1);
        for (node, &(gender, role)) in g.nodes.iter_mut().zip(attrs) {
            node.gender = gender;
            node.role = role;
        }
        g
    }

    /// Oracle: count closed triples through each node by enumerating all
    /// neighbor pairs.
    fn clustering_oracle(n: usize, edges: &[(usize, usize)]) -> f64 {
        let linked = |a: usize, b: usize| edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a));
        let mut total = 0.0;
        for v in 0..n {
            let nbrs: Vec<usize> = (0..n).filter(|&u| u != v && linked(u, v)).collect();
            if nbrs.len() < 2 {
                continue;
            }
            let mut closed = 0;
            let mut pairs = 0;
            for i in 0..nbrs.len() {
                for j in (i + 1)..nbrs.len() {
                    pairs += 1;
                    if linked(nbrs[i], nbrs[j]) {
                        closed += 1;
                    }
                }
            }
            total += closed as f64 / pairs as f64;
        }
        total / n as f64
    }

    #[test]
    fn triangle() {
        let f = structural_features(&graph(3, &[(0, 1), (1, 2), (0, 2)], 1));
        assert_eq!(f.density, 1.0);
        assert_eq!(f.avg_clustering, 1.0);
        assert_eq!(f.component_count, 1.0);
        assert_eq!(f.largest_component_fraction, 1.0);
    }

    #[test]
    fn path_of_three() {
        let f = structural_features(&graph(3, &[(0, 1), (1, 2)], 1));
        assert!((f.density - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.avg_clustering, 0.0);
        assert!((f.degree_mean - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!((f.degree_min, f.degree_max), (1.0, 2.0));
    }

    #[test]
    fn four_cycle_with_chord() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
        // chord endpoints have 2 of 3 neighbor pairs linked, the others 1 of 1
        let expected = clustering_oracle(4, &edges);
        assert!((expected - 5.0 / 6.0).abs() < 1e-15);
        let f = structural_features(&graph(4, &edges, 1));
        assert!((f.avg_clustering - expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_graphs() {
        let single = structural_features(&graph(1, &[], 1));
        assert_eq!((single.density, single.degree_std, single.degree_min), (0.0, 0.0, 0.0));
        let empty = structural_features(&graph(5, &[], 1));
        assert_eq!((empty.density, empty.component_count), (0.0, 5.0));
        assert_eq!(empty.largest_component_fraction, 0.2);
    }

    #[test]
    fn semantic_blocks() {
        use Gender::*;
        use Role::*;
        let s = semantic_summary(&with_attrs(&[(Male, Minor), (Male, Minor), (Female, Minor), (Unknown, Minor)]));
        assert_eq!(s.gender(), &[0.5, 0.25, 0.25]);
        let s = semantic_summary(&with_attrs(&[(Male, Minor); 5]));
        assert_eq!(s.roles(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
        let s = semantic_summary(&with_attrs(&[(Male, Protagonist), (Male, Antagonist), (Male, Support), (Female, Support)]));
        assert_eq!(s.roles(), &[0.25, 0.25, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn matrix_shapes_and_window_check() {
        let gs: Vec<NovelGraph> = (0..4).map(|_| graph(3, &[(0, 1)], 5)).collect();
        let s = feature_matrix(&gs, FeatureKind::Structural).unwrap();
        assert_eq!((s.rows.len(), s.rows[0].len(), s.columns.len()), (4, 10, 10));
        let m = feature_matrix(&gs, FeatureKind::Semantic).unwrap();
        assert_eq!((m.rows.len(), m.rows[0].len()), (4, 8));
        let mixed = vec![graph(3, &[], 1), graph(3, &[], 5)];
        assert_eq!(feature_matrix(&mixed, FeatureKind::Semantic).unwrap_err(), FeatureError::MixedWindows(1, 5));
    }

    fn random_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=10).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
            let len = pairs.len();
            (Just(n), proptest::collection::vec(any::<bool>(), len))
                .prop_map(move |(n, keep)| (n, pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()))
        })
    }

    proptest! {
        #[test]
        fn clustering_matches_oracle((n, edges) in random_graph()) {
            let f = structural_features(&graph(n, &edges, 1));
            prop_assert!((f.avg_clustering - clustering_oracle(n, &edges)).abs() < 1e-12);
            prop_assert!(f.degree_min <= f.degree_mean + 1e-12 && f.degree_mean <= f.degree_max + 1e-12);
            prop_assert!((0.0..=1.0).contains(&f.density));
        }

        #[test]
        fn features_ignore_node_order((n, edges) in random_graph(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut g = graph(n, &edges, 1);
            for (i, node) in g.nodes.iter_mut().enumerate() {
                node.role = Role::ALL[i % 5];
                node.gender = Gender::ALL[i % 3];
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut crate::rng::rng_from_seed(seed));
            let p = g.permuted(&order);
            let (fg, fp) = (structural_features(&g).to_vec(), structural_features(&p).to_vec());
            for (x, y) in fg.iter().zip(&fp) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let (a, b) = (semantic_summary(&g), semantic_summary(&p));
            prop_assert_eq!(a, b);
            prop_assert!((a.gender().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!((a.roles().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
