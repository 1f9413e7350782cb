//! Character interaction graphs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CharacterRecord, Corpus, Gender, Mention, Novel, NovelMeta, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub character_id: String,
    pub gender: Gender,
    pub role: Role,
}

/// Weighted undirected character graph.
///
/// Edge keys are stored with the lexicographically smaller character id first;
/// nodes keep character-table order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NovelGraph {
    pub novel_id: String,
    pub author_id: String,
    pub window: u32,
    pub nodes: Vec<GraphNode>,
    pub edges: BTreeMap<(String, String), u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("co-occurrence window must be at least 1, got {0}")]
    InvalidWindow(u32),
    #[error("mention references character {0} which is not in the character table")]
    UnknownCharacter(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
}

fn edge_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.into(), b.into())
    } else {
        (b.into(), a.into())
    }
}

impl NovelGraph {
    /// Assemble a graph from parts, checking every invariant.
    pub fn from_parts(
        novel_id: String,
        author_id: String,
        window: u32,
        nodes: Vec<GraphNode>,
        edge_list: impl IntoIterator<Item = (String, String, u64)>,
    ) -> Result<Self, GraphError> {
        if window < 1 {
            return Err(GraphError::InvalidWindow(window));
        }
        let ids: BTreeSet<&str> = nodes.iter().map(|n| n.character_id.as_str()).collect();
        if ids.len() != nodes.len() {
            return Err(GraphError::Invalid("duplicate node id".into()));
        }
        let mut edges = BTreeMap::new();
        for (a, b, w) in edge_list {
            if a == b {
                return Err(GraphError::Invalid(alloc::format!("self-loop on {a}")));
            }
            if w == 0 {
                return Err(GraphError::Invalid(alloc::format!("zero weight on {a}-{b}")));
            }
            for end in [&a, &b] {
                if !ids.contains(end.as_str()) {
                    return Err(GraphError::UnknownCharacter(end.clone()));
                }
            }
            if edges.insert(edge_key(&a, &b), w).is_some() {
                return Err(GraphError::Invalid(alloc::format!("duplicate edge {a}-{b}")));
            }
        }
        Ok(Self { novel_id, author_id, window, nodes, edges })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, a: &str, b: &str) -> u64 {
        self.edges.get(&edge_key(a, b)).copied().unwrap_or(0)
    }

    /// Unweighted neighbor lists by node index, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.character_id.as_str(), i))
            .collect();
        let mut adj = alloc::vec![Vec::new(); self.nodes.len()];
        for (a, b) in self.edges.keys() {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Copy with nodes reordered: new node `k` is old node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut g = self.clone();
        g.nodes = order.iter().map(|&i| self.nodes[i].clone()).collect();
        g
    }
}

/// Number of page pairs `(p, q)`, `p` from `a` and `q` from `b`, with
/// `|p - q| <= window - 1`. Both slices are sorted and deduplicated.
fn windowed_pairs(a: &[u32], b: &[u32], window: u32) -> u64 {
    let reach = window - 1;
    a.iter()
        .map(|&p| {
            let lo = b.partition_point(|&q| q + reach < p);
            let hi = b.partition_point(|&q| q <= p.saturating_add(reach));
            (hi - lo) as u64
        })
        .sum()
}

/// Build the interaction graph of one novel.
///
/// Each character contributes the set of distinct pages it appears on; the
/// weight of a pair is the number of page pairs within `window - 1` of each
/// other. With `window == 1` this is the number of shared pages. Every
/// character becomes a node, isolated or not.
pub fn build_graph(
    meta: &NovelMeta,
    characters: &[CharacterRecord],
    mentions: &[Mention],
    window: u32,
) -> Result<NovelGraph, GraphError> {
    if window < 1 {
        return Err(GraphError::InvalidWindow(window));
    }
    let mut pages: BTreeMap<&str, BTreeSet<u32>> =
        characters.iter().map(|c| (c.character_id.as_str(), BTreeSet::new())).collect();
    for m in mentions {
        pages
            .get_mut(m.character_id.as_str())
            .ok_or_else(|| GraphError::UnknownCharacter(m.character_id.clone()))?
            .insert(m.page);
    }
    let page_lists: Vec<Vec<u32>> = characters
        .iter()
        .map(|c| pages[c.character_id.as_str()].iter().copied().collect())
        .collect();

    let mut edges = BTreeMap::new();
    for i in 0..characters.len() {
        for j in (i + 1)..characters.len() {
            let w = windowed_pairs(&page_lists[i], &page_lists[j], window);
            if w > 0 {
                edges.insert(edge_key(&characters[i].character_id, &characters[j].character_id), w);
            }
        }
    }
    Ok(NovelGraph {
        novel_id: meta.novel_id.clone(),
        author_id: meta.author_id.clone(),
        window,
        nodes: characters
            .iter()
            .map(|c| GraphNode { character_id: c.character_id.clone(), gender: c.gender, role: c.role })
            .collect(),
        edges,
    })
}

pub fn build_novel_graph(novel: &Novel, window: u32) -> Result<NovelGraph, GraphError> {
    build_graph(&novel.meta, &novel.characters, &novel.mentions, window)
}

/// Graphs for every novel, in corpus order.
pub fn build_corpus_graphs(corpus: &Corpus, window: u32) -> Result<Vec<NovelGraph>, GraphError> {
    corpus.novels().iter().map(|n| build_novel_graph(n, window)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn meta() -> NovelMeta {
        NovelMeta { novel_id: "N".into(), author_id: "A".into(), page_count: 100 }
    }

    fn chars(n: usize) -> Vec<CharacterRecord> {
        (0..n)
            .map(|i| CharacterRecord {
                character_id: alloc::format!("C{i:02}"),
                canonical_name: alloc::format!("C{i:02}"),
                aliases: vec![],
                gender: Gender::Unknown,
                role: Role::Minor,
            })
            .collect()
    }

    fn mention(c: usize, page: u32) -> Mention {
        Mention { novel_id: "N".into(), page, character_id: alloc::format!("C{c:02}") }
    }

    /// Independent oracle: all mention pairs, deduplicated to page pairs.
    fn brute_force(mentions: &[Mention], window: u32) -> BTreeMap<(String, String), u64> {
        let mut pairs: BTreeSet<(String, String, u32, u32)> = BTreeSet::new();
        for x in mentions {
            for y in mentions {
                if x.character_id < y.character_id && x.page.abs_diff(y.page) < window {
                    pairs.insert((x.character_id.clone(), y.character_id.clone(), x.page, y.page));
                }
            }
        }
        let mut out = BTreeMap::new();
        for (a, b, _, _) in pairs {
            *out.entry((a, b)).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn worked_examples() {
        let ms = vec![mention(0, 1), mention(0, 2), mention(1, 2), mention(1, 4)];
        let g1 = build_graph(&meta(), &chars(2), &ms, 1).unwrap();
        assert_eq!(g1.weight("C00", "C01"), 1);
        let g5 = build_graph(&meta(), &chars(2), &ms, 5).unwrap();
        assert_eq!(g5.weight("C00", "C01"), 4);
        assert_eq!(g5.weight("C01", "C00"), 4);
    }

    #[test]
    fn single_character_has_no_edges() {
        let g = build_graph(&meta(), &chars(1), &[mention(0, 3)], 5).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
    }

    #[test]
    fn isolated_characters_are_kept() {
        let g = build_graph(&meta(), &chars(3), &[mention(0, 1), mention(1, 1)], 1).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.adjacency()[2], Vec::<usize>::new());
    }

    #[test]
    fn zero_window_is_rejected() {
        assert_eq!(build_graph(&meta(), &chars(2), &[], 0).unwrap_err(), GraphError::InvalidWindow(0));
    }

    #[test]
    fn unknown_mention_is_rejected() {
        let err = build_graph(&meta(), &chars(1), &[mention(4, 1)], 1).unwrap_err();
        assert_eq!(err, GraphError::UnknownCharacter("C04".to_string()));
    }

    #[test]
    fn from_parts_checks_invariants() {
        let nodes = build_graph(&meta(), &chars(2), &[], 1).unwrap().nodes;
        let ok = NovelGraph::from_parts("N".into(), "A".into(), 1, nodes.clone(), [("C01".into(), "C00".into(), 2)]).unwrap();
        assert_eq!(ok.edges.keys().next().unwrap(), &("C00".to_string(), "C01".to_string()));
        assert!(NovelGraph::from_parts("N".into(), "A".into(), 1, nodes.clone(), [("C00".into(), "C00".into(), 1)]).is_err());
        assert!(NovelGraph::from_parts("N".into(), "A".into(), 1, nodes.clone(), [("C00".into(), "C01".into(), 0)]).is_err());
        assert!(NovelGraph::from_parts("N".into(), "A".into(), 1, nodes, [("C00".into(), "C09".into(), 1)]).is_err());
    }

    fn random_mentions() -> impl Strategy<Value = (usize, Vec<Mention>)> {
        (1usize..=12).prop_flat_map(|n| {
            (Just(n), proptest::collection::vec((0..n, 1u32..=30), 0..80))
                .prop_map(|(n, raw)| (n, raw.into_iter().map(|(c, p)| mention(c, p)).collect()))
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((n, ms) in random_mentions(), window in 1u32..=7) {
            let g = build_graph(&meta(), &chars(n), &ms, window).unwrap();
            prop_assert_eq!(g.edges, brute_force(&ms, window));
        }

        #[test]
        fn wider_window_dominates((n, ms) in random_mentions(), w in 1u32..=6, extra in 1u32..=4) {
            let narrow = build_graph(&meta(), &chars(n), &ms, w).unwrap();
            let wide = build_graph(&meta(), &chars(n), &ms, w + extra).unwrap();
            for (k, v) in &narrow.edges {
                prop_assert!(wide.edges.get(k).copied().unwrap_or(0) >= *v);
            }
        }

        #[test]
        fn duplicate_mentions_do_not_change_weights((n, ms) in random_mentions(), window in 1u32..=5) {
            let mut doubled = ms.clone();
            doubled.extend(ms.iter().cloned());
            let a = build_graph(&meta(), &chars(n), &ms, window).unwrap();
            let b = build_graph(&meta(), &chars(n), &doubled, window).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
