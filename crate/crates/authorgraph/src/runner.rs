//! Independent experiment runs scheduled on a rayon pool.
//!
//! Each task is single-threaded and deterministic, so results do not depend on
//! the number of jobs; outputs come back in task order.

use authorgraph_core::harness::{permuted_task, run_experiment, ExperimentConfig, ExperimentReport, HarnessError, Method, NullSummary, MIN_PERMUTATIONS};
use authorgraph_core::split::{make_author_aware_split, make_naive_split, SplitKind, SplitPlan};
use authorgraph_core::Corpus;
use rayon::prelude::*;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub method: Method,
    pub window: u32,
    pub split_seed: u64,
}

pub fn make_split(corpus: &Corpus, kind: SplitKind, seed: u64) -> Result<SplitPlan, Error> {
    Ok(match kind {
        SplitKind::AuthorAware => make_author_aware_split(corpus, seed)?,
        SplitKind::Naive => make_naive_split(corpus, seed)?,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start {jobs} worker threads: {e}")))
}

/// Every task under the same base config (window overridden per task).
pub fn run_tasks(
    corpus: &Corpus,
    tasks: &[Task],
    base: &ExperimentConfig,
    split_kind: SplitKind,
    jobs: usize,
) -> Result<Vec<ExperimentReport>, Error> {
    pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let split = make_split(corpus, split_kind, t.split_seed)?;
                let config = ExperimentConfig { window: t.window, ..*base };
                Ok(run_experiment(corpus, t.method, &split, &config)?)
            })
            .collect()
    })
}

/// Parallel equivalent of [`authorgraph_core::harness::permutation_null`].
pub fn permutation_null(
    corpus: &Corpus,
    method: Method,
    config: &ExperimentConfig,
    n_permutations: usize,
    seed: u64,
    jobs: usize,
) -> Result<NullSummary, Error> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(HarnessError::TooFewPermutations { min: MIN_PERMUTATIONS, got: n_permutations }.into());
    }
    let accuracies = pool(jobs)?.install(|| {
        (0..n_permutations)
            .into_par_iter()
            .map(|i| {
                let (shuffled, plan) = permuted_task(corpus, seed, i)?;
                Ok(run_experiment(&shuffled, method, &plan, config)?.metrics.accuracy)
            })
            .collect::<Result<Vec<f64>, Error>>()
    })?;
    Ok(NullSummary::from_accuracies(method, accuracies, corpus.authors().len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use authorgraph_core::harness;
    use authorgraph_core::synth::{generate_synthetic_corpus, SynthMode, SyntheticSpec};

    fn setup() -> (Corpus, ExperimentConfig) {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::planted(3, 9, SynthMode::Full, 1.0, 3)).unwrap();
        let mut config = ExperimentConfig::with_seed(1);
        config.logreg.epochs = 100;
        config.forest.tree_count = 5;
        (corpus, config)
    }

    #[test]
    fn job_count_does_not_change_results() {
        let (corpus, config) = setup();
        let tasks: Vec<Task> = [1, 5]
            .into_iter()
            .flat_map(|w| (0..3).map(move |s| Task { method: Method::Semantic, window: w, split_seed: s }))
            .collect();
        let one = run_tasks(&corpus, &tasks, &config, SplitKind::AuthorAware, 1).unwrap();
        let three = run_tasks(&corpus, &tasks, &config, SplitKind::AuthorAware, 3).unwrap();
        assert_eq!(one, three);
        assert_eq!(one[3].window, 5);
    }

    #[test]
    fn parallel_null_matches_sequential() {
        let (corpus, config) = setup();
        let parallel = permutation_null(&corpus, Method::Semantic, &config, 10, 4, 2).unwrap();
        let sequential = harness::permutation_null(&corpus, Method::Semantic, &config, 10, 4).unwrap();
        assert_eq!(parallel, sequential);
    }
}
