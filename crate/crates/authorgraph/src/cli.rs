//! Command-line interface.
//!
//! Every subcommand writes `run_config.json` (its parsed arguments plus the
//! resolved experiment configuration) next to its outputs. Exit codes: 0 on
//! success, 1 on validation or run errors, 2 on usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use authorgraph_core::augment::{synthesize_embeddings, train_autoencoder, AutoencoderConfig, LabeledEmbedding};
use authorgraph_core::features::{feature_matrix, FeatureKind};
use authorgraph_core::gat::{extract_embeddings, train_gat, GatConfig, GatModel, GraphBatch, TrainLog};
use authorgraph_core::graph::build_corpus_graphs;
use authorgraph_core::graph2vec::{train_graph2vec, Graph2VecConfig};
use authorgraph_core::harness::{ExperimentConfig, Method};
use authorgraph_core::probes::{ForestConfig, LogRegConfig, Standardizer};
use authorgraph_core::rng::derive_seed;
use authorgraph_core::split::{SplitKind, SplitPlan};
use authorgraph_core::synth::{generate_synthetic_corpus, SynthMode, SyntheticSpec};
use authorgraph_core::wl::{wl_document, InitialLabels};
use authorgraph_core::{Corpus, NovelGraph};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::formats::{self, create_dir, load_corpus_dir, read_json, write_corpus_dir, write_json, write_text};
use crate::reports::{collect_summary, run_dir_name, summary_csv, write_experiment, RUN_CONFIG_FILE, SUMMARY_FILE};
use crate::runner::{make_split, permutation_null, run_tasks, Task};
use crate::Error;

#[derive(Debug, Parser, Serialize)]
#[command(name = "authorgraph", version, about = "Authorship attribution from character interaction graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic corpus with planted per-author styles
    Synth(SynthArgs),
    /// Build one character graph file per novel
    BuildGraphs(BuildGraphsArgs),
    /// Export a structural or semantic feature table
    Features(FeaturesArgs),
    /// Export graph-level embeddings (WL document embeddings or GAT pooled embeddings)
    Embed(EmbedArgs),
    /// Train the graph attention network on the training split and save a checkpoint
    TrainGat(TrainGatArgs),
    /// Write real and synthetic training embeddings from the autoencoder
    Augment(AugmentArgs),
    /// Run one or more experiments and write a report per run
    Evaluate(EvaluateArgs),
    /// Re-run a method on author-shuffled corpora
    PermutationNull(NullArgs),
    /// Aggregate report.json files into a summary table
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Full,
    CompositionOnly,
}

impl From<ModeArg> for SynthMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => SynthMode::Full,
            ModeArg::CompositionOnly => SynthMode::CompositionOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Structural,
    Semantic,
    Graph2vec,
    Gat,
    GatAugment,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Structural => Method::Structural,
            MethodArg::Semantic => Method::Semantic,
            MethodArg::Graph2vec => Method::Graph2vec,
            MethodArg::Gat => Method::Gat,
            MethodArg::GatAugment => Method::GatAugment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitArg {
    AuthorAware,
    Naive,
}

impl From<SplitArg> for SplitKind {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::AuthorAware => SplitKind::AuthorAware,
            SplitArg::Naive => SplitKind::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureArg {
    Structural,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedKind {
    Wl,
    Gat,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 7)]
    pub authors: usize,
    #[arg(long, default_value_t = 52)]
    pub novels: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,
    /// Interpolation between the shared base style (0) and each author's style (1)
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where the corpus comes from: a directory, or the built-in synthetic corpus.
#[derive(Debug, Args, Serialize)]
pub struct CorpusArgs {
    /// Corpus directory with meta.jsonl, characters.jsonl and mentions.jsonl
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Synthetic corpus seed, used when --corpus is absent
    #[arg(long, default_value_t = 1)]
    pub synth_seed: u64,
    #[arg(long, default_value_t = 7)]
    pub synth_authors: usize,
    #[arg(long, default_value_t = 52)]
    pub synth_novels: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub synth_mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    pub synth_signal: f64,
}

impl CorpusArgs {
    pub fn load(&self) -> Result<Corpus, Error> {
        match &self.corpus {
            Some(dir) => {
                let loaded = load_corpus_dir(dir)?;
                if loaded.dropped_mentions > 0 {
                    eprintln!("warning: {} surface mention(s) matched no character and were dropped", loaded.dropped_mentions);
                }
                Ok(loaded.corpus)
            }
            None => Ok(generate_synthetic_corpus(&SyntheticSpec::planted(
                self.synth_authors,
                self.synth_novels,
                self.synth_mode.into(),
                self.synth_signal,
                self.synth_seed,
            ))?),
        }
    }
}

/// Hyperparameters of every stage; stage seeds derive from --seed.
#[derive(Debug, Args, Serialize)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 3)]
    pub wl_iterations: usize,
    /// Start WL relabeling from gender|role instead of degree
    #[arg(long)]
    pub attributed_wl: bool,
    #[arg(long, default_value_t = Graph2VecConfig::default().dim)]
    pub g2v_dim: usize,
    #[arg(long, default_value_t = Graph2VecConfig::default().epochs)]
    pub g2v_epochs: usize,
    #[arg(long, default_value_t = Graph2VecConfig::default().negative_samples)]
    pub g2v_negative: usize,
    #[arg(long, default_value_t = Graph2VecConfig::default().learning_rate)]
    pub g2v_lr: f64,
    #[arg(long, default_value_t = GatConfig::default().hidden_dim)]
    pub gat_hidden: usize,
    #[arg(long, default_value_t = GatConfig::default().heads)]
    pub gat_heads: usize,
    #[arg(long, default_value_t = GatConfig::default().layers)]
    pub gat_layers: usize,
    #[arg(long, default_value_t = GatConfig::default().dropout)]
    pub gat_dropout: f64,
    #[arg(long, default_value_t = GatConfig::default().learning_rate)]
    pub gat_lr: f64,
    #[arg(long, default_value_t = GatConfig::default().epochs)]
    pub gat_epochs: usize,
    #[arg(long, default_value_t = GatConfig::default().weight_decay)]
    pub gat_weight_decay: f64,
    #[arg(long, default_value_t = AutoencoderConfig::default().latent_dim)]
    pub ae_latent: usize,
    #[arg(long, default_value_t = AutoencoderConfig::default().hidden_dim)]
    pub ae_hidden: usize,
    #[arg(long, default_value_t = AutoencoderConfig::default().epochs)]
    pub ae_epochs: usize,
    #[arg(long, default_value_t = AutoencoderConfig::default().learning_rate)]
    pub ae_lr: f64,
    /// Standard deviation of the latent noise
    #[arg(long, default_value_t = AutoencoderConfig::default().noise_sigma)]
    pub sigma: f64,
    /// Synthetic embeddings per real training embedding
    #[arg(long, default_value_t = AutoencoderConfig::default().multiplier)]
    pub multiplier: usize,
    #[arg(long, default_value_t = LogRegConfig::default().l2_lambda)]
    pub logreg_lambda: f64,
    #[arg(long, default_value_t = LogRegConfig::default().learning_rate)]
    pub logreg_lr: f64,
    #[arg(long, default_value_t = LogRegConfig::default().epochs)]
    pub logreg_epochs: usize,
    #[arg(long, default_value_t = ForestConfig::default().tree_count)]
    pub trees: usize,
    #[arg(long, default_value_t = ForestConfig::default().max_depth)]
    pub max_depth: usize,
    /// Folds for cross-validated accuracy on training novels (0 disables)
    #[arg(long, default_value_t = 5)]
    pub cv_folds: usize,
}

impl HyperArgs {
    pub fn resolve(&self, seed: u64, window: u32) -> ExperimentConfig {
        let mut c = ExperimentConfig::with_seed(seed);
        c.window = window;
        c.wl_iterations = self.wl_iterations;
        c.wl_labels = if self.attributed_wl { InitialLabels::Attributed } else { InitialLabels::Degree };
        c.graph2vec.dim = self.g2v_dim;
        c.graph2vec.epochs = self.g2v_epochs;
        c.graph2vec.negative_samples = self.g2v_negative;
        c.graph2vec.learning_rate = self.g2v_lr;
        c.gat.hidden_dim = self.gat_hidden;
        c.gat.heads = self.gat_heads;
        c.gat.layers = self.gat_layers;
        c.gat.dropout = self.gat_dropout;
        c.gat.learning_rate = self.gat_lr;
        c.gat.epochs = self.gat_epochs;
        c.gat.weight_decay = self.gat_weight_decay;
        c.autoencoder.input_dim = c.gat.embedding_dim();
        c.autoencoder.latent_dim = self.ae_latent;
        c.autoencoder.hidden_dim = self.ae_hidden;
        c.autoencoder.epochs = self.ae_epochs;
        c.autoencoder.learning_rate = self.ae_lr;
        c.autoencoder.noise_sigma = self.sigma;
        c.autoencoder.multiplier = self.multiplier;
        c.logreg = LogRegConfig { l2_lambda: self.logreg_lambda, learning_rate: self.logreg_lr, epochs: self.logreg_epochs };
        c.forest.tree_count = self.trees;
        c.forest.max_depth = self.max_depth;
        c.cv_folds = self.cv_folds;
        c
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BuildGraphsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Co-occurrence window in pages (1 = same page)
    #[arg(long, default_value_t = 5)]
    pub window: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 5)]
    pub window: u32,
    #[arg(long, value_enum)]
    pub kind: FeatureArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 5)]
    pub window: u32,
    /// Master seed; every stage seed is derived from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the author-aware split (defaults to --seed)
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

impl TrainArgs {
    fn split_seed(&self) -> u64 {
        self.split_seed.unwrap_or(self.seed)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long, value_enum)]
    pub kind: EmbedKind,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainGatArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Checkpoint written by train-gat; trains a fresh model when absent
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub method: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub window: Vec<u32>,
    #[arg(long, value_enum, default_value_t = SplitArg::AuthorAware)]
    pub split: SplitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Split seeds (defaults to --seed)
    #[arg(long, value_delimiter = ',')]
    pub split_seed: Vec<u64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Concurrent runs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "authorgraph-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NullArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 5)]
    pub window: u32,
    #[arg(long, default_value_t = 20)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Directory searched recursively for report.json files
    #[arg(long)]
    pub reports: PathBuf,
    /// Summary table path (defaults to <reports>/summary.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunConfig<'a, T: Serialize> {
    version: &'static str,
    command: &'a Command,
    resolved: Option<T>,
}

fn write_run_config<T: Serialize>(dir: &Path, command: &Command, resolved: Option<T>) -> Result<(), Error> {
    write_json(&dir.join(RUN_CONFIG_FILE), &RunConfig { version: env!("CARGO_PKG_VERSION"), command, resolved })
}

/// Parse `argv` and run; returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(command: &Command) -> Result<(), Error> {
    match command {
        Command::Synth(a) => synth(command, a),
        Command::BuildGraphs(a) => build_graphs(command, a),
        Command::Features(a) => features(command, a),
        Command::Embed(a) => embed(command, a),
        Command::TrainGat(a) => train_gat_cmd(command, a),
        Command::Augment(a) => augment(command, a),
        Command::Evaluate(a) => evaluate(command, a),
        Command::PermutationNull(a) => null(command, a),
        Command::Report(a) => report(a),
    }
}

fn synth(command: &Command, a: &SynthArgs) -> Result<(), Error> {
    let spec = SyntheticSpec::planted(a.authors, a.novels, a.mode.into(), a.signal, a.seed);
    let corpus = generate_synthetic_corpus(&spec)?;
    write_corpus_dir(&a.out, &corpus)?;
    write_json(&a.out.join("synthetic_spec.json"), &spec)?;
    write_run_config(&a.out, command, Some(&spec))?;
    println!("wrote {} novels by {} authors to {}", corpus.len(), corpus.authors().len(), a.out.display());
    Ok(())
}

fn build_graphs(command: &Command, a: &BuildGraphsArgs) -> Result<(), Error> {
    let graphs = build_corpus_graphs(&a.corpus.load()?, a.window)?;
    create_dir(&a.out)?;
    for g in &graphs {
        formats::write_graph(&a.out, g)?;
    }
    write_run_config::<()>(&a.out, command, None)?;
    println!("wrote {} graphs (window {}) to {}", graphs.len(), a.window, a.out.display());
    Ok(())
}

fn features(command: &Command, a: &FeaturesArgs) -> Result<(), Error> {
    let graphs = build_corpus_graphs(&a.corpus.load()?, a.window)?;
    let kind = match a.kind {
        FeatureArg::Structural => FeatureKind::Structural,
        FeatureArg::Semantic => FeatureKind::Semantic,
    };
    let matrix = feature_matrix(&graphs, kind)?;
    create_dir(&a.out)?;
    formats::write_feature_csv(&a.out.join("features.csv"), &matrix)?;
    write_run_config::<()>(&a.out, command, None)?;
    println!("wrote {}x{} feature table to {}", matrix.rows.len(), matrix.columns.len(), a.out.display());
    Ok(())
}

/// GAT weights plus everything needed to reuse them.
#[derive(Debug, Serialize, Deserialize)]
pub struct GatCheckpoint {
    pub classes: Vec<String>,
    pub window: u32,
    pub split: SplitPlan,
    pub model: GatModel,
    pub log: TrainLog,
}

struct Trained {
    corpus: Corpus,
    graphs: Vec<NovelGraph>,
    config: ExperimentConfig,
    checkpoint: GatCheckpoint,
}

fn labels_of(graphs: &[&NovelGraph], classes: &[String]) -> Vec<usize> {
    graphs.iter().map(|g| classes.binary_search(&g.author_id).expect("author listed")).collect()
}

fn fit_gat(t: &TrainArgs) -> Result<Trained, Error> {
    let corpus = t.corpus.load()?;
    let config = t.hyper.resolve(t.seed, t.window);
    let split = make_split(&corpus, SplitKind::AuthorAware, t.split_seed())?;
    let graphs = build_corpus_graphs(&corpus, t.window)?;
    let classes = corpus.authors();
    let train: Vec<&NovelGraph> = graphs.iter().filter(|g| split.is_train(&g.novel_id)).collect();
    let (model, log) = train_gat(&GraphBatch::from_graphs(train.iter().copied()), &labels_of(&train, &classes), classes.len(), &config.gat)?;
    Ok(Trained { corpus, graphs, config, checkpoint: GatCheckpoint { classes, window: t.window, split, model, log } })
}

fn embed(command: &Command, a: &EmbedArgs) -> Result<(), Error> {
    let t = &a.train;
    create_dir(&a.out)?;
    let (rows, config): (Vec<(String, Vec<f64>)>, ExperimentConfig) = match a.kind {
        EmbedKind::Wl => {
            let config = t.hyper.resolve(t.seed, t.window);
            let graphs = build_corpus_graphs(&t.corpus.load()?, t.window)?;
            let docs: Vec<_> = graphs.iter().map(|g| wl_document(g, config.wl_iterations, config.wl_labels)).collect();
            let model = train_graph2vec(&docs, &config.graph2vec)?;
            (model.embeddings.into_iter().map(|e| (e.graph_id, e.values)).collect(), config)
        }
        EmbedKind::Gat => {
            let trained = fit_gat(t)?;
            let emb = extract_embeddings(&trained.checkpoint.model, &GraphBatch::from_graphs(&trained.graphs))?;
            write_json(&a.out.join("split.json"), &trained.checkpoint.split)?;
            (trained.graphs.iter().map(|g| g.novel_id.clone()).zip(emb).collect(), trained.config)
        }
    };
    formats::write_embedding_csv(&a.out.join("embeddings.csv"), &rows)?;
    write_run_config(&a.out, command, Some(config))?;
    println!("wrote {} embeddings to {}", rows.len(), a.out.display());
    Ok(())
}

fn train_gat_cmd(command: &Command, a: &TrainGatArgs) -> Result<(), Error> {
    let trained = fit_gat(&a.train)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("checkpoint.json"), &trained.checkpoint)?;
    write_json(&a.out.join("split.json"), &trained.checkpoint.split)?;
    let mut log = String::from("epoch,loss,train_accuracy\n");
    for (i, (l, acc)) in trained.checkpoint.log.loss.iter().zip(&trained.checkpoint.log.train_accuracy).enumerate() {
        log.push_str(&format!("{},{l:?},{acc:?}\n", i + 1));
    }
    write_text(&a.out.join("training_log.csv"), &log)?;
    write_run_config(&a.out, command, Some(trained.config))?;
    let final_acc = trained.checkpoint.log.train_accuracy.last().copied().unwrap_or(f64::NAN);
    println!("trained GAT on {} novels, final train accuracy {final_acc:.3}", trained.checkpoint.split.train_ids.len());
    Ok(())
}

fn augment(command: &Command, a: &AugmentArgs) -> Result<(), Error> {
    let t = &a.train;
    let (checkpoint, graphs, config) = match &a.checkpoint {
        Some(path) => {
            let checkpoint: GatCheckpoint = read_json(path)?;
            let corpus = t.corpus.load()?;
            checkpoint.split.validate(&corpus)?;
            let graphs = build_corpus_graphs(&corpus, checkpoint.window)?;
            let mut config = t.hyper.resolve(t.seed, checkpoint.window);
            config.gat = checkpoint.model.config;
            config.autoencoder.input_dim = config.gat.embedding_dim();
            (checkpoint, graphs, config)
        }
        None => {
            let trained = fit_gat(t)?;
            let _ = trained.corpus;
            (trained.checkpoint, trained.graphs, trained.config)
        }
    };
    let train: Vec<&NovelGraph> = graphs.iter().filter(|g| checkpoint.split.is_train(&g.novel_id)).collect();
    let labels = labels_of(&train, &checkpoint.classes);
    let emb = extract_embeddings(&checkpoint.model, &GraphBatch::from_graphs(train.iter().copied()))?;
    let scaler = Standardizer::fit(&emb).map_err(|e| Error::Invalid(e.to_string()))?;
    let real: Vec<LabeledEmbedding> = train
        .iter()
        .zip(labels)
        .zip(scaler.transform(&emb))
        .map(|((g, y), v)| LabeledEmbedding::real(g.novel_id.clone(), y, v))
        .collect();
    let ae = train_autoencoder(&real, &checkpoint.split, &config.autoencoder)?;
    let synthetic = synthesize_embeddings(&ae, &real, config.autoencoder.noise_sigma, config.autoencoder.multiplier, config.synth_seed)?;
    create_dir(&a.out)?;
    let all: Vec<LabeledEmbedding> = real.into_iter().chain(synthetic).collect();
    formats::write_augmented_csv(&a.out.join("augmented.csv"), &all, &checkpoint.classes)?;
    write_json(&a.out.join("autoencoder.json"), &ae)?;
    write_run_config(&a.out, command, Some(config))?;
    println!("wrote {} embeddings ({} synthetic), reconstruction MSE {:.6}", all.len(), all.len() - train.len(), ae.final_loss);
    Ok(())
}

fn evaluate(command: &Command, a: &EvaluateArgs) -> Result<(), Error> {
    let corpus = a.corpus.load()?;
    let base = a.hyper.resolve(a.seed, a.window.first().copied().unwrap_or(5));
    let split_seeds = if a.split_seed.is_empty() { vec![a.seed] } else { a.split_seed.clone() };
    let mut tasks = Vec::new();
    for &m in &a.method {
        for &window in &a.window {
            for &split_seed in &split_seeds {
                tasks.push(Task { method: m.into(), window, split_seed });
            }
        }
    }
    let reports = run_tasks(&corpus, &tasks, &base, a.split.into(), a.jobs.max(1))?;
    create_dir(&a.out)?;
    for r in &reports {
        let resolved = ExperimentConfig { window: r.window, ..base };
        write_experiment(&a.out.join(run_dir_name(r)), r, &RunConfig { version: env!("CARGO_PKG_VERSION"), command, resolved: Some(resolved) })?;
        println!("{:12} w={} split={} accuracy {:.3}", r.method.as_str(), r.window, r.split_seed, r.metrics.accuracy);
    }
    write_run_config(&a.out, command, Some(base))?;
    let summary = collect_summary(&a.out)?;
    write_text(&a.out.join(SUMMARY_FILE), &summary_csv(&summary.rows))
}

fn null(command: &Command, a: &NullArgs) -> Result<(), Error> {
    let corpus = a.corpus.load()?;
    let config = a.hyper.resolve(a.seed, a.window);
    let summary = permutation_null(&corpus, a.method.into(), &config, a.permutations, derive_seed(a.seed, "permutation"), a.jobs.max(1))?;
    create_dir(&a.out)?;
    write_json(&a.out.join("null.json"), &summary)?;
    write_run_config(&a.out, command, Some(config))?;
    println!(
        "{} null accuracy {:.3} ± {:.3} over {} permutations (chance {:.3})",
        summary.method.as_str(),
        summary.mean,
        summary.std_dev,
        summary.accuracies.len(),
        summary.chance
    );
    Ok(())
}

fn report(a: &ReportArgs) -> Result<(), Error> {
    let summary = collect_summary(&a.reports)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let out = a.out.clone().unwrap_or_else(|| a.reports.join(SUMMARY_FILE));
    let table = summary_csv(&summary.rows);
    write_text(&out, &table)?;
    print!("{table}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_method_is_a_usage_error() {
        assert_eq!(dispatch(["authorgraph", "evaluate", "--method", "bogus"]), 2);
        assert_eq!(dispatch(["authorgraph", "frobnicate"]), 2);
    }

    #[test]
    fn hyper_args_default_to_the_library_defaults() {
        let cli = Cli::try_parse_from(["authorgraph", "evaluate", "--method", "gat", "--seed", "4"]).unwrap();
        let Command::Evaluate(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.hyper.resolve(4, 5), ExperimentConfig::with_seed(4));
    }

    #[test]
    fn methods_accept_commas() {
        let cli = Cli::try_parse_from(["authorgraph", "evaluate", "--method", "gat,gat-augment", "--window", "1,5"]).unwrap();
        let Command::Evaluate(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.method, [MethodArg::Gat, MethodArg::GatAugment]);
        assert_eq!(a.window, [1, 5]);
    }
}
