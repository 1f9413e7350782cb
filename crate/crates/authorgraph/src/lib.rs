//! File formats, parallel experiment runs and the `authorgraph` command line
//! on top of [`authorgraph_core`].

pub mod cli;
pub mod formats;
pub mod reports;
pub mod runner;

use std::path::PathBuf;

use authorgraph_core::augment::AugmentError;
use authorgraph_core::corpus::CorpusError;
use authorgraph_core::features::FeatureError;
use authorgraph_core::gat::GatError;
use authorgraph_core::graph::GraphError;
use authorgraph_core::graph2vec::Graph2VecError;
use authorgraph_core::harness::HarnessError;
use authorgraph_core::split::SplitError;
use authorgraph_core::synth::SynthError;
use thiserror::Error;

pub use formats::{load_corpus, load_corpus_dir, write_corpus_dir, LoadedCorpus};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}:{line}: novel {novel_id} is not listed in the meta file")]
    UnknownNovel { path: PathBuf, line: usize, novel_id: String },
    #[error("{path}: {message}")]
    Report { path: PathBuf, message: String },
    #[error("no report.json found under {0}")]
    NoReports(PathBuf),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Graph2Vec(#[from] Graph2VecError),
    #[error(transparent)]
    Gat(#[from] GatError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
