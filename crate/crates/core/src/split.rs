//! Train/test partitions of novels and stratified k-fold indices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    /// Exactly one held-out novel per author.
    AuthorAware,
    /// First fold of a stratified 5-fold partition; kept only to show how
    /// unstable scores get without the author-aware protocol.
    Naive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("author {author_id} has {count} novel(s); an author-aware split needs at least 2")]
    TooFewNovels { author_id: String, count: usize },
    #[error("class {class} has {count} sample(s), fewer than k = {k}")]
    ClassTooSmall { class: usize, count: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("split does not match corpus: {0}")]
    Mismatch(String),
}

impl SplitPlan {
    pub fn is_test(&self, novel_id: &str) -> bool {
        self.test_ids.contains(novel_id)
    }

    pub fn is_train(&self, novel_id: &str) -> bool {
        self.train_ids.contains(novel_id)
    }

    /// Check the plan against a corpus: disjoint, covering, and for
    /// author-aware plans one test novel per author with at least one left
    /// for training.
    pub fn validate(&self, corpus: &Corpus) -> Result<(), SplitError> {
        let mismatch = |m: String| Err(SplitError::Mismatch(m));
        if let Some(id) = self.train_ids.intersection(&self.test_ids).next() {
            return mismatch(alloc::format!("{id} is in both train and test"));
        }
        let all: BTreeSet<&str> = corpus.novels().iter().map(|n| n.meta.novel_id.as_str()).collect();
        let planned: BTreeSet<&str> = self.train_ids.iter().chain(&self.test_ids).map(String::as_str).collect();
        if all != planned {
            return mismatch(String::from("plan does not cover exactly the corpus novels"));
        }
        if self.kind == SplitKind::AuthorAware {
            let mut test_per_author: BTreeMap<&str, usize> = BTreeMap::new();
            let mut train_per_author: BTreeMap<&str, usize> = BTreeMap::new();
            for n in corpus.novels() {
                let bucket = if self.is_test(&n.meta.novel_id) { &mut test_per_author } else { &mut train_per_author };
                *bucket.entry(n.meta.author_id.as_str()).or_default() += 1;
            }
            for author in corpus.authors() {
                let test = test_per_author.get(author.as_str()).copied().unwrap_or(0);
                let train = train_per_author.get(author.as_str()).copied().unwrap_or(0);
                if test != 1 || train == 0 {
                    return mismatch(alloc::format!("author {author} has {test} test and {train} train novels"));
                }
            }
        }
        Ok(())
    }
}

/// Hold out one novel per author, chosen uniformly with the given seed.
/// Authors are visited in sorted order.
pub fn make_author_aware_split(corpus: &Corpus, seed: u64) -> Result<SplitPlan, SplitError> {
    let mut by_author: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for n in corpus.novels() {
        by_author.entry(n.meta.author_id.as_str()).or_default().push(n.meta.novel_id.as_str());
    }
    let mut rng = rng_from_seed(seed);
    let mut plan = SplitPlan { kind: SplitKind::AuthorAware, seed, train_ids: BTreeSet::new(), test_ids: BTreeSet::new() };
    for (author, novels) in by_author {
        if novels.len() < 2 {
            return Err(SplitError::TooFewNovels { author_id: author.into(), count: novels.len() });
        }
        let test = *novels.choose(&mut rng).expect("non-empty");
        for id in novels {
            if id == test {
                plan.test_ids.insert(id.into());
            } else {
                plan.train_ids.insert(id.into());
            }
        }
    }
    Ok(plan)
}

/// Stratified split ignoring the one-per-author rule: fold 0 of
/// [`stratified_kfold`] with k = 5 (or the smallest class size when lower).
pub fn make_naive_split(corpus: &Corpus, seed: u64) -> Result<SplitPlan, SplitError> {
    let authors = corpus.authors();
    let labels: Vec<usize> = corpus
        .novels()
        .iter()
        .map(|n| authors.iter().position(|a| a == &n.meta.author_id).expect("known author"))
        .collect();
    let smallest = (0..authors.len()).map(|c| labels.iter().filter(|&&l| l == c).count()).min().unwrap_or(0);
    let folds = stratified_kfold(&labels, smallest.min(5), seed)?;
    let test: BTreeSet<usize> = folds[0].validation.iter().copied().collect();
    let mut plan = SplitPlan { kind: SplitKind::Naive, seed, train_ids: BTreeSet::new(), test_ids: BTreeSet::new() };
    for (i, n) in corpus.novels().iter().enumerate() {
        let bucket = if test.contains(&i) { &mut plan.test_ids } else { &mut plan.train_ids };
        bucket.insert(n.meta.novel_id.clone());
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold partition of `0..labels.len()`.
///
/// Each class is shuffled and dealt round-robin over the folds, continuing
/// from where the previous class stopped so fold sizes stay balanced. Every
/// fold holds `floor` or `ceil` of `count / k` samples of each class.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>, SplitError> {
    if k < 2 {
        return Err(SplitError::InvalidK(k));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((&class, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(SplitError::ClassTooSmall { class, count: members.len(), k });
    }
    let mut rng = rng_from_seed(seed);
    let mut assignment = alloc::vec![0usize; labels.len()];
    let mut next = 0usize;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| Fold {
            train: (0..labels.len()).filter(|&i| assignment[i] != f).collect(),
            validation: (0..labels.len()).filter(|&i| assignment[i] == f).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::novel;
    use crate::synth::{generate_synthetic_corpus, SynthMode, SyntheticSpec};
    use alloc::vec;

    fn two_by_two() -> Corpus {
        Corpus::new(vec![novel("N1", "A"), novel("N2", "A"), novel("N3", "B"), novel("N4", "B")]).unwrap()
    }

    #[test]
    fn two_authors_two_novels() {
        let corpus = two_by_two();
        let plan = make_author_aware_split(&corpus, 3).unwrap();
        assert_eq!((plan.test_ids.len(), plan.train_ids.len()), (2, 2));
        plan.validate(&corpus).unwrap();
        assert_eq!(plan, make_author_aware_split(&corpus, 3).unwrap());
    }

    #[test]
    fn paper_sized_split() {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::planted(7, 52, SynthMode::Full, 1.0, 1)).unwrap();
        for seed in 0..50 {
            let plan = make_author_aware_split(&corpus, seed).unwrap();
            assert_eq!((plan.test_ids.len(), plan.train_ids.len()), (7, 45));
            plan.validate(&corpus).unwrap();
        }
    }

    #[test]
    fn naive_split_is_a_valid_partition() {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::planted(3, 15, SynthMode::Full, 1.0, 1)).unwrap();
        let plan = make_naive_split(&corpus, 4).unwrap();
        plan.validate(&corpus).unwrap();
        assert_eq!(plan.test_ids.len(), 3);
    }

    #[test]
    fn validate_rejects_bad_plans() {
        let corpus = two_by_two();
        let mut plan = make_author_aware_split(&corpus, 0).unwrap();
        let moved = plan.train_ids.pop_first().unwrap();
        plan.test_ids.insert(moved);
        assert!(plan.validate(&corpus).is_err());
    }

    #[test]
    fn kfold_one_per_class_per_fold() {
        let labels: Vec<usize> = (0..14).map(|i| i % 7).collect();
        let folds = stratified_kfold(&labels, 2, 9).unwrap();
        for fold in &folds {
            let mut classes: Vec<usize> = fold.validation.iter().map(|&i| labels[i]).collect();
            classes.sort_unstable();
            assert_eq!(classes, (0..7).collect::<Vec<_>>());
        }
        assert_eq!(folds, stratified_kfold(&labels, 2, 9).unwrap());
    }

    #[test]
    fn kfold_errors() {
        assert_eq!(stratified_kfold(&[0, 0, 1], 2, 0).unwrap_err(), SplitError::ClassTooSmall { class: 1, count: 1, k: 2 });
        assert_eq!(stratified_kfold(&[0, 1], 1, 0).unwrap_err(), SplitError::InvalidK(1));
    }

    proptest::proptest! {
        #[test]
        fn kfold_partitions_and_stratifies(
            counts in proptest::collection::vec(3usize..12, 2..6),
            k in 2usize..=3,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat_n(c, n)).collect();
            let folds = stratified_kfold(&labels, k, seed).unwrap();
            let mut seen = vec![0usize; labels.len()];
            for fold in &folds {
                for &i in &fold.validation {
                    seen[i] += 1;
                }
                proptest::prop_assert_eq!(fold.train.len() + fold.validation.len(), labels.len());
                for (c, &n) in counts.iter().enumerate() {
                    let here = fold.validation.iter().filter(|&&i| labels[i] == c).count();
                    proptest::prop_assert!(here == n / k || here == n.div_ceil(k));
                }
            }
            proptest::prop_assert!(seen.iter().all(|&s| s == 1));
        }
    }
}
