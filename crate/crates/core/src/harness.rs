//! Experiment runner: one method, one window, one split.
//!
//! Every fitting call goes through a [`LeakageGuard`] that checks the novel ids
//! of its inputs against the split; a test id reaching a fit is a hard error
//! naming the stage.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{synthesize_embeddings, train_autoencoder, AugmentError, AutoencoderConfig, LabeledEmbedding};
use crate::corpus::{Corpus, CorpusError};
use crate::features::{semantic_summary, structural_features};
use crate::gat::{extract_embeddings, train_gat, GatConfig, GatError, GraphBatch};
use crate::graph::{build_corpus_graphs, GraphError, NovelGraph};
use crate::graph2vec::{train_graph2vec, Graph2VecConfig, Graph2VecError};
use crate::probes::{
    compute_metrics, train_forest, train_logreg, ForestConfig, LogRegConfig, Metrics, ProbeError, Standardizer,
};
use crate::rng::{derive_seed, rng_from_seed, short_hash};
use crate::split::{make_author_aware_split, stratified_kfold, SplitError, SplitKind, SplitPlan};
use crate::wl::{wl_document, InitialLabels};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Structural,
    Semantic,
    Graph2vec,
    Gat,
    GatAugment,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Structural, Method::Semantic, Method::Graph2vec, Method::Gat, Method::GatAugment];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Structural => "structural",
            Method::Semantic => "semantic",
            Method::Graph2vec => "graph2vec",
            Method::Gat => "gat",
            Method::GatAugment => "gat_augment",
        }
    }
}

/// Every hyperparameter of every stage. Stage seeds are derived from the
/// master seed by [`ExperimentConfig::with_seed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub window: u32,
    pub seed: u64,
    pub wl_iterations: usize,
    pub wl_labels: InitialLabels,
    pub graph2vec: Graph2VecConfig,
    pub gat: GatConfig,
    pub autoencoder: AutoencoderConfig,
    pub synth_seed: u64,
    pub logreg: LogRegConfig,
    pub forest: ForestConfig,
    /// Folds for the optional cross-validated accuracy of the classical
    /// methods on the training novels; 0 disables it.
    pub cv_folds: usize,
    pub cv_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        let gat = GatConfig { seed: derive_seed(seed, "gat"), ..GatConfig::default() };
        Self {
            window: 5,
            seed,
            wl_iterations: 3,
            wl_labels: InitialLabels::Degree,
            graph2vec: Graph2VecConfig { seed: derive_seed(seed, "graph2vec"), ..Graph2VecConfig::default() },
            gat,
            autoencoder: AutoencoderConfig {
                input_dim: gat.embedding_dim(),
                seed: derive_seed(seed, "autoencoder"),
                ..AutoencoderConfig::default()
            },
            synth_seed: derive_seed(seed, "synthesize"),
            logreg: LogRegConfig::default(),
            forest: ForestConfig { seed: derive_seed(seed, "forest"), ..ForestConfig::default() },
            cv_folds: 5,
            cv_seed: derive_seed(seed, "cv"),
        }
    }

    /// Stable hash of the method, every hyperparameter and the split identity.
    pub fn fingerprint(&self, method: Method, split: &SplitPlan) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            method: Method,
            config: &'a ExperimentConfig,
            split_kind: SplitKind,
            split_seed: u64,
        }
        let key = Key { method, config: self, split_kind: split.kind, split_seed: split.seed };
        short_hash(serde_json::to_string(&key).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("leakage at stage {stage}: test novel {novel_id} reached a fit")]
    Leakage { stage: &'static str, novel_id: String },
    #[error("need at least {min} permutations, got {got}")]
    TooFewPermutations { min: usize, got: usize },
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Graph2Vec(#[from] Graph2VecError),
    #[error(transparent)]
    Gat(#[from] GatError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// Asserts that every fit sees training novels only.
#[derive(Debug, Clone)]
pub struct LeakageGuard<'a> {
    plan: &'a SplitPlan,
    checked: BTreeMap<&'static str, usize>,
}

impl<'a> LeakageGuard<'a> {
    pub fn new(plan: &'a SplitPlan) -> Self {
        Self { plan, checked: BTreeMap::new() }
    }

    pub fn check<'i>(&mut self, stage: &'static str, ids: impl IntoIterator<Item = &'i str>) -> Result<(), HarnessError> {
        let mut count = 0;
        for id in ids {
            if !self.plan.is_train(id) {
                return Err(HarnessError::Leakage { stage, novel_id: id.to_string() });
            }
            count += 1;
        }
        *self.checked.entry(stage).or_default() += count;
        Ok(())
    }

    /// Number of ids checked per stage.
    pub fn checked(&self) -> &BTreeMap<&'static str, usize> {
        &self.checked
    }
}

/// Deliberate leaks used to prove the guard works.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Append the test rows and labels to the first supervised fit.
    TestRowsInProbe,
    /// Append the test embeddings to the autoencoder's training set.
    TestEmbeddingsInAutoencoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub novel_id: String,
    pub truth: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub window: u32,
    pub split_kind: SplitKind,
    pub split_seed: u64,
    pub master_seed: u64,
    pub fingerprint: String,
    /// Class order of the confusion matrix.
    pub classes: Vec<String>,
    pub metrics: Metrics,
    /// Random-forest metrics for the classical methods.
    pub forest_metrics: Option<Metrics>,
    /// Mean stratified k-fold accuracy on the training novels (classical methods).
    pub cv_accuracy: Option<f64>,
    pub train_count: usize,
    pub test_count: usize,
    pub synthetic_count: usize,
    pub predictions: Vec<Prediction>,
}

struct Prepared {
    classes: Vec<String>,
    graphs: Vec<NovelGraph>,
    labels: Vec<usize>,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn prepare(corpus: &Corpus, split: &SplitPlan, window: u32) -> Result<Prepared, HarnessError> {
    split.validate(corpus)?;
    let classes = corpus.authors();
    let graphs = build_corpus_graphs(corpus, window)?;
    let labels = graphs
        .iter()
        .map(|g| classes.binary_search(&g.author_id).expect("author listed"))
        .collect();
    let (test, train) = (0..graphs.len()).partition(|&i| split.is_test(&graphs[i].novel_id));
    Ok(Prepared { classes, graphs, labels, train, test })
}

fn select<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

pub fn run_experiment(
    corpus: &Corpus,
    method: Method,
    split: &SplitPlan,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, HarnessError> {
    run_instrumented(corpus, method, split, config, Fault::None)
}

#[doc(hidden)]
pub fn run_instrumented(
    corpus: &Corpus,
    method: Method,
    split: &SplitPlan,
    config: &ExperimentConfig,
    fault: Fault,
) -> Result<ExperimentReport, HarnessError> {
    let p = prepare(corpus, split, config.window)?;
    let mut guard = LeakageGuard::new(split);
    let k = p.classes.len();
    let ids: Vec<&str> = p.graphs.iter().map(|g| g.novel_id.as_str()).collect();

    let mut forest_metrics = None;
    let mut cv_accuracy = None;
    let mut synthetic_count = 0;
    let predicted: Vec<usize> = match method {
        Method::Structural | Method::Semantic | Method::Graph2vec => {
            let rows: Vec<Vec<f64>> = match method {
                Method::Structural => p.graphs.iter().map(|g| structural_features(g).to_vec()).collect(),
                Method::Semantic => p.graphs.iter().map(|g| semantic_summary(g).0.to_vec()).collect(),
                _ => {
                    // unsupervised over every graph; no label is read here
                    let docs: Vec<_> =
                        p.graphs.iter().map(|g| wl_document(g, config.wl_iterations, config.wl_labels)).collect();
                    train_graph2vec(&docs, &config.graph2vec)?.embeddings.into_iter().map(|e| e.values).collect()
                }
            };
            let (mut train_idx, test_idx) = (p.train.clone(), p.test.clone());
            if fault == Fault::TestRowsInProbe {
                train_idx.extend(&test_idx);
            }
            guard.check("standardizer", train_idx.iter().map(|&i| ids[i]))?;
            let scaler = Standardizer::fit(&select(&rows, &train_idx))?;
            let x_train = scaler.transform(&select(&rows, &train_idx));
            let x_test = scaler.transform(&select(&rows, &test_idx));
            let y_train = select(&p.labels, &train_idx);
            guard.check("logreg", train_idx.iter().map(|&i| ids[i]))?;
            let model = train_logreg(&x_train, &y_train, k, &config.logreg)?;
            if method != Method::Graph2vec {
                guard.check("forest", train_idx.iter().map(|&i| ids[i]))?;
                let forest = train_forest(&x_train, &y_train, k, &config.forest)?;
                let truth = select(&p.labels, &test_idx);
                forest_metrics = Some(compute_metrics(&truth, &forest.predict(&x_test)?, k)?);
                cv_accuracy = cross_validate(&x_train, &y_train, k, config)?;
            }
            model.predict(&x_test)?.0
        }
        Method::Gat | Method::GatAugment => {
            let mut fit_idx = p.train.clone();
            if fault == Fault::TestRowsInProbe {
                fit_idx.extend(&p.test);
            }
            let train_graphs: Vec<&NovelGraph> = fit_idx.iter().map(|&i| &p.graphs[i]).collect();
            let test_graphs: Vec<&NovelGraph> = p.test.iter().map(|&i| &p.graphs[i]).collect();
            let y_train = select(&p.labels, &fit_idx);
            let train_batch = GraphBatch::from_graphs(train_graphs.iter().copied());
            let test_batch = GraphBatch::from_graphs(test_graphs.iter().copied());
            guard.check("gat", train_batch.graph_ids.iter().map(String::as_str))?;
            let (model, _) = train_gat(&train_batch, &y_train, k, &config.gat)?;
            if method == Method::Gat {
                model.predict(&test_batch)?
            } else {
                let train_emb = extract_embeddings(&model, &train_batch)?;
                let test_emb = extract_embeddings(&model, &test_batch)?;
                guard.check("standardizer", train_batch.graph_ids.iter().map(String::as_str))?;
                let scaler = Standardizer::fit(&train_emb)?;
                let mut real: Vec<LabeledEmbedding> = train_batch
                    .graph_ids
                    .iter()
                    .zip(&y_train)
                    .zip(scaler.transform(&train_emb))
                    .map(|((id, &y), v)| LabeledEmbedding::real(id.clone(), y, v))
                    .collect();
                let x_test = scaler.transform(&test_emb);
                if fault == Fault::TestEmbeddingsInAutoencoder {
                    let truth = select(&p.labels, &p.test);
                    real.extend(
                        test_batch.graph_ids.iter().zip(truth).zip(&x_test).map(|((id, y), v)| {
                            LabeledEmbedding::real(id.clone(), y, v.clone())
                        }),
                    );
                }
                guard.check("autoencoder", real.iter().map(|e| e.novel_id.as_str()))?;
                let ae_config = AutoencoderConfig { input_dim: config.gat.embedding_dim(), ..config.autoencoder };
                let ae = train_autoencoder(&real, split, &ae_config)?;
                let synthetic = synthesize_embeddings(&ae, &real, ae_config.noise_sigma, ae_config.multiplier, config.synth_seed)?;
                synthetic_count = synthetic.len();
                let all: Vec<&LabeledEmbedding> = real.iter().chain(&synthetic).collect();
                guard.check("logreg", all.iter().map(|e| e.novel_id.as_str()))?;
                let x: Vec<Vec<f64>> = all.iter().map(|e| e.values.clone()).collect();
                let y: Vec<usize> = all.iter().map(|e| e.label).collect();
                train_logreg(&x, &y, k, &config.logreg)?.predict(&x_test)?.0
            }
        }
    };

    let truth = select(&p.labels, &p.test);
    let metrics = compute_metrics(&truth, &predicted, k)?;
    let predictions = p
        .test
        .iter()
        .zip(&predicted)
        .map(|(&i, &c)| Prediction {
            novel_id: p.graphs[i].novel_id.clone(),
            truth: p.classes[p.labels[i]].clone(),
            predicted: p.classes[c].clone(),
        })
        .collect();
    Ok(ExperimentReport {
        method,
        window: config.window,
        split_kind: split.kind,
        split_seed: split.seed,
        master_seed: config.seed,
        fingerprint: config.fingerprint(method, split),
        classes: p.classes,
        metrics,
        forest_metrics,
        cv_accuracy,
        train_count: p.train.len(),
        test_count: p.test.len(),
        synthetic_count,
        predictions,
    })
}

/// Mean logistic-regression accuracy over stratified folds of the training
/// rows. `None` when disabled or when some class has fewer than 2 rows.
fn cross_validate(x: &[Vec<f64>], y: &[usize], k: usize, config: &ExperimentConfig) -> Result<Option<f64>, HarnessError> {
    if config.cv_folds < 2 {
        return Ok(None);
    }
    let smallest = (0..k).map(|c| y.iter().filter(|&&l| l == c).count()).filter(|&n| n > 0).min().unwrap_or(0);
    let folds = config.cv_folds.min(smallest);
    if folds < 2 {
        return Ok(None);
    }
    let mut total = 0.0;
    let splits = stratified_kfold(y, folds, config.cv_seed)?;
    for fold in &splits {
        let model = train_logreg(&select(x, &fold.train), &select(y, &fold.train), k, &config.logreg)?;
        let predicted = model.predict(&select(x, &fold.validation))?.0;
        total += compute_metrics(&select(y, &fold.validation), &predicted, k)?.accuracy;
    }
    Ok(Some(total / splits.len() as f64))
}

pub const MIN_PERMUTATIONS: usize = 10;

/// Corpus with author labels shuffled across novels, plus a fresh
/// author-aware split on the shuffled labels, for permutation `index`.
pub fn permuted_task(corpus: &Corpus, seed: u64, index: usize) -> Result<(Corpus, SplitPlan), HarnessError> {
    let mut authors: Vec<String> = corpus.novels().iter().map(|n| n.meta.author_id.clone()).collect();
    authors.shuffle(&mut rng_from_seed(derive_seed(seed, &alloc::format!("permutation/{index}"))));
    let shuffled = corpus.with_authors(&authors)?;
    let plan = make_author_aware_split(&shuffled, derive_seed(seed, &alloc::format!("permutation-split/{index}")))?;
    Ok((shuffled, plan))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub method: Method,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub chance: f64,
}

impl NullSummary {
    pub fn from_accuracies(method: Method, accuracies: Vec<f64>, class_count: usize) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        Self { method, accuracies, mean, std_dev: libm::sqrt(var), chance: 1.0 / class_count as f64 }
    }
}

/// Re-run the full pipeline on `n_permutations` label shuffles.
pub fn permutation_null(
    corpus: &Corpus,
    method: Method,
    config: &ExperimentConfig,
    n_permutations: usize,
    seed: u64,
) -> Result<NullSummary, HarnessError> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(HarnessError::TooFewPermutations { min: MIN_PERMUTATIONS, got: n_permutations });
    }
    let accuracies = (0..n_permutations)
        .map(|i| {
            let (shuffled, plan) = permuted_task(corpus, seed, i)?;
            Ok(run_experiment(&shuffled, method, &plan, config)?.metrics.accuracy)
        })
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    Ok(NullSummary::from_accuracies(method, accuracies, corpus.authors().len()))
}
