//! Weisfeiler-Lehman subtree documents.
//!
//! Iteration 0 labels a node by its degree (or by `gender|role` in attributed
//! mode). Iteration `t` relabels a node with
//! `short_hash("<own label>|<sorted neighbor labels joined by ','>")`, where
//! `short_hash` is the first 8 bytes of SHA-256 in lowercase hex. The document
//! of a graph is every label of every node at every iteration `0..=h`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::NovelGraph;
use crate::rng::short_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLabels {
    /// Degree on the unweighted graph.
    #[default]
    Degree,
    /// `gender|role`; only for ablations.
    Attributed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WlDocument {
    pub graph_id: String,
    /// Iteration-major: all iteration-0 labels in node order, then iteration 1, ...
    pub tokens: Vec<String>,
}

/// Relabel once: `own|n1,n2,...` with neighbor labels sorted, then hashed.
pub fn relabel(own: &str, neighbor_labels: &mut [&str]) -> String {
    neighbor_labels.sort_unstable();
    let mut key = String::with_capacity(own.len() + 1 + neighbor_labels.len() * 17);
    key.push_str(own);
    key.push('|');
    key.push_str(&neighbor_labels.join(","));
    short_hash(key.as_bytes())
}

pub fn wl_document(g: &NovelGraph, iterations: usize, initial: InitialLabels) -> WlDocument {
    let adj = g.adjacency();
    let mut labels: Vec<String> = match initial {
        InitialLabels::Degree => adj.iter().map(|a| a.len().to_string()).collect(),
        InitialLabels::Attributed => g
            .nodes
            .iter()
            .map(|n| alloc::format!("{}|{}", n.gender.as_str(), n.role.as_str()))
            .collect(),
    };
    let mut tokens = Vec::with_capacity(labels.len() * (iterations + 1));
    tokens.extend(labels.iter().cloned());
    for _ in 0..iterations {
        let next: Vec<String> = adj
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                let mut around: Vec<&str> = nbrs.iter().map(|&j| labels[j].as_str()).collect();
                relabel(&labels[i], &mut around)
            })
            .collect();
        tokens.extend(next.iter().cloned());
        labels = next;
    }
    WlDocument { graph_id: g.novel_id.clone(), tokens }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Gender, Role};
    use crate::graph::GraphNode;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> NovelGraph {
        let nodes = (0..n)
            .map(|i| GraphNode { character_id: format!("C{i:02}"), gender: Gender::ALL[i % 3], role: Role::ALL[i % 5] })
            .collect();
        NovelGraph::from_parts(
            "G".into(),
            "A".into(),
            1,
            nodes,
            edges.iter().map(|&(a, b)| (format!("C{a:02}"), format!("C{b:02}"), 1)),
        )
        .unwrap()
    }

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    #[test]
    fn path_of_three_by_hand() {
        let doc = wl_document(&graph(3, &[(0, 1), (1, 2)]), 1, InitialLabels::Degree);
        assert_eq!(doc.tokens.len(), 6);
        assert_eq!(&doc.tokens[..3], &["1", "2", "1"]);
        let center = short_hash(b"2|1,1");
        let leaf = short_hash(b"1|2");
        assert_eq!(doc.tokens[4], center);
        assert_eq!(doc.tokens[3], leaf);
        assert_eq!(doc.tokens[5], leaf);
    }

    #[test]
    fn zero_iterations_is_degree_sequence() {
        let doc = wl_document(&graph(4, &[(0, 1), (0, 2), (0, 3)]), 0, InitialLabels::Degree);
        assert_eq!(doc.tokens, vec!["3", "1", "1", "1"]);
    }

    #[test]
    fn attributed_mode_starts_from_attributes() {
        let doc = wl_document(&graph(2, &[(0, 1)]), 0, InitialLabels::Attributed);
        assert_eq!(doc.tokens, vec!["male|protagonist", "female|antagonist"]);
    }

    fn random_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<usize>)> {
        (1usize..=9).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
            let len = pairs.len();
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), len)
                    .prop_map(move |keep| pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect()),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
    }

    proptest! {
        #[test]
        fn permutation_invariant((n, edges, order) in random_graph(), h in 0usize..4) {
            let g = graph(n, &edges);
            let p = g.permuted(&order);
            for mode in [InitialLabels::Degree, InitialLabels::Attributed] {
                let a = wl_document(&g, h, mode);
                let b = wl_document(&p, h, mode);
                prop_assert_eq!(a.tokens.len(), n * (h + 1));
                prop_assert_eq!(sorted(a.tokens), sorted(b.tokens));
            }
        }
    }
}
