//! Authorship attribution over character interaction graphs.
//!
//! The crate is `no_std` (with `alloc`) and carries every algorithmic stage of
//! the pipeline: the corpus data model and synthetic generator, graph
//! construction, hand-crafted features, Weisfeiler-Lehman documents with a
//! distributed bag-of-words embedder, a small dense numeric kernel, the graph
//! attention network, embedding-space augmentation, downstream probes and the
//! leakage-guarded experiment runner. File formats and the command line live in
//! the `authorgraph` crate.
//!
//! All randomness flows through [`rng::SeededRng`] (ChaCha8) created from
//! explicit `u64` seeds, and all transcendental functions come from `libm`, so
//! results are reproducible bit-for-bit across platforms.

#![no_std]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod augment;
pub mod corpus;
pub mod features;
pub mod gat;
pub mod graph;
pub mod graph2vec;
pub mod harness;
pub mod neural;
pub mod probes;
pub mod rng;
pub mod split;
pub mod synth;
pub mod wl;

pub use corpus::{CharacterRecord, Corpus, Gender, Mention, Novel, NovelMeta, RawMention, Role};
pub use graph::{build_graph, NovelGraph};
pub use harness::{run_experiment, ExperimentConfig, ExperimentReport, Method};
pub use split::{make_author_aware_split, SplitPlan};
