//! Synthetic corpora with planted per-author style.
//!
//! Each author has a role distribution, a gender distribution and an
//! interaction kernel `K(role_a, role_b)`. The effective style of an author is
//! the linear interpolation `(1 - s) * base + s * author` with signal strength
//! `s`. In composition-only mode every author uses the base kernel, so only the
//! role and gender mixes carry authorship.
//!
//! Page sampling: each page has one focal character drawn uniformly; every
//! other character is present independently with probability
//! `K(role_focal, role_other)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Dirichlet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CharacterRecord, Corpus, CorpusError, Gender, Mention, Novel, NovelMeta, Role};
use crate::rng::{derive_seed, rng_from_seed};

const DIST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorStyle {
    pub role_dist: [f64; 5],
    pub gender_dist: [f64; 3],
    pub kernel: [[f64; 5]; 5],
}

impl AuthorStyle {
    fn lerp(base: &Self, author: &Self, s: f64, share_kernel: bool) -> Self {
        let mix = |b: f64, a: f64| (1.0 - s) * b + s * a;
        let mut out = base.clone();
        for i in 0..5 {
            out.role_dist[i] = mix(base.role_dist[i], author.role_dist[i]);
        }
        for i in 0..3 {
            out.gender_dist[i] = mix(base.gender_dist[i], author.gender_dist[i]);
        }
        if !share_kernel {
            for i in 0..5 {
                for j in 0..5 {
                    out.kernel[i][j] = mix(base.kernel[i][j], author.kernel[i][j]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMode {
    CompositionOnly,
    Full,
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

impl IntRange {
    pub fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NovelsPerAuthor {
    Uniform(usize),
    PerAuthor(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub author_count: usize,
    pub novels_per_author: NovelsPerAuthor,
    pub characters_per_novel: IntRange,
    pub pages_per_novel: IntRange,
    pub base_style: AuthorStyle,
    pub author_styles: Vec<AuthorStyle>,
    pub signal_strength: f64,
    pub mode: SynthMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Spread `total` novels over `authors` as evenly as possible, larger counts first.
pub fn even_counts(total: usize, authors: usize) -> Vec<usize> {
    if authors == 0 {
        return Vec::new();
    }
    let base = total / authors;
    let extra = total % authors;
    (0..authors).map(|a| base + usize::from(a < extra)).collect()
}

/// Shared base style: a plausible cast mix and a flat interaction kernel.
pub fn base_style() -> AuthorStyle {
    AuthorStyle {
        role_dist: [0.08, 0.07, 0.30, 0.05, 0.50],
        gender_dist: [0.50, 0.40, 0.10],
        kernel: [[0.16; 5]; 5],
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).sum()
}

impl SyntheticSpec {
    /// A spec with seeded, well-separated author styles.
    ///
    /// For each author slot, 32 candidate styles are drawn (role and gender
    /// mixes from a Dirichlet(0.8), kernel entries uniform in [0.02, 0.30]) and
    /// the candidate whose composition is farthest (L1) from the already chosen
    /// authors is kept.
    pub fn planted(
        author_count: usize,
        total_novels: usize,
        mode: SynthMode,
        signal_strength: f64,
        seed: u64,
    ) -> Self {
        let mut rng = rng_from_seed(derive_seed(seed, "synth/styles"));
        let role_prior = Dirichlet::new([0.8f64; 5]).expect("valid concentration");
        let gender_prior = Dirichlet::new([0.8f64; 3]).expect("valid concentration");
        let mut styles: Vec<AuthorStyle> = Vec::with_capacity(author_count);
        for _ in 0..author_count {
            let mut best: Option<(f64, AuthorStyle)> = None;
            for _ in 0..32 {
                let mut kernel = [[0.0; 5]; 5];
                for i in 0..5 {
                    for j in i..5 {
                        let v = rng.random_range(0.02..0.30);
                        kernel[i][j] = v;
                        kernel[j][i] = v;
                    }
                }
                let candidate = AuthorStyle {
                    role_dist: role_prior.sample(&mut rng),
                    gender_dist: gender_prior.sample(&mut rng),
                    kernel,
                };
                let separation = styles
                    .iter()
                    .map(|s| l1(&s.role_dist, &candidate.role_dist) + l1(&s.gender_dist, &candidate.gender_dist))
                    .fold(f64::INFINITY, f64::min);
                if best.as_ref().is_none_or(|(d, _)| separation > *d) {
                    best = Some((separation, candidate));
                }
            }
            styles.push(best.expect("at least one candidate").1);
        }
        Self {
            author_count,
            novels_per_author: NovelsPerAuthor::PerAuthor(even_counts(total_novels, author_count)),
            characters_per_novel: IntRange::new(14, 26),
            pages_per_novel: IntRange::new(40, 80),
            base_style: base_style(),
            author_styles: styles,
            signal_strength,
            mode,
            seed,
        }
    }

    pub fn novel_counts(&self) -> Vec<usize> {
        match &self.novels_per_author {
            NovelsPerAuthor::Uniform(n) => vec![*n; self.author_count],
            NovelsPerAuthor::PerAuthor(v) => v.clone(),
        }
    }

    /// Style actually used to generate novels for `author`.
    pub fn effective_style(&self, author: usize) -> AuthorStyle {
        AuthorStyle::lerp(
            &self.base_style,
            &self.author_styles[author],
            self.signal_strength,
            self.mode == SynthMode::CompositionOnly,
        )
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::Infeasible(msg));
        if self.author_count < 2 {
            return fail(format!("need at least 2 authors, got {}", self.author_count));
        }
        if self.author_styles.len() != self.author_count {
            return fail(format!(
                "{} author styles for {} authors",
                self.author_styles.len(),
                self.author_count
            ));
        }
        let counts = self.novel_counts();
        if counts.len() != self.author_count {
            return fail(format!("{} novel counts for {} authors", counts.len(), self.author_count));
        }
        if let Some((a, c)) = counts.iter().enumerate().find(|(_, &c)| c < 2) {
            return fail(format!("author {a} would get {c} novel(s); at least 2 are required"));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return fail(format!("signal strength {} outside [0, 1]", self.signal_strength));
        }
        for (name, r) in [("characters_per_novel", self.characters_per_novel), ("pages_per_novel", self.pages_per_novel)] {
            if r.min < 1 || r.min > r.max {
                return fail(format!("{name} range {}..={} is empty or starts below 1", r.min, r.max));
            }
        }
        for (who, style) in core::iter::once(("base", &self.base_style)).chain(self.author_styles.iter().map(|s| ("author", s))) {
            check_dist(who, "role", &style.role_dist)?;
            check_dist(who, "gender", &style.gender_dist)?;
            for row in &style.kernel {
                if row.iter().any(|k| !(0.0..=1.0).contains(k)) {
                    return fail(format!("{who} kernel entry outside [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn check_dist(who: &str, what: &str, dist: &[f64]) -> Result<(), SynthError> {
    let sum: f64 = dist.iter().sum();
    if dist.iter().any(|p| !(0.0..=1.0).contains(p)) || libm::fabs(sum - 1.0) > DIST_TOLERANCE {
        return Err(SynthError::Infeasible(format!(
            "{who} {what} distribution must be probabilities summing to 1 (sum {sum})"
        )));
    }
    Ok(())
}

/// Generate a corpus from `spec`. Novels are ordered by author, then index;
/// novel ids are `N001`, `N002`, ... and author ids `A01`, `A02`, ...
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, "synth/novels"));
    let mut novels = Vec::new();
    let mut serial = 0usize;
    for (author, count) in spec.novel_counts().into_iter().enumerate() {
        let style = spec.effective_style(author);
        let roles = WeightedIndex::new(style.role_dist).map_err(|e| SynthError::Infeasible(format!("role distribution: {e}")))?;
        let genders = WeightedIndex::new(style.gender_dist).map_err(|e| SynthError::Infeasible(format!("gender distribution: {e}")))?;
        let author_id = format!("A{:02}", author + 1);
        for _ in 0..count {
            serial += 1;
            let novel_id = format!("N{serial:03}");
            let n_chars = rng.random_range(spec.characters_per_novel.min..=spec.characters_per_novel.max);
            let page_count = rng.random_range(spec.pages_per_novel.min..=spec.pages_per_novel.max);
            let characters: Vec<CharacterRecord> = (1..=n_chars)
                .map(|i| {
                    let role = Role::ALL[roles.sample(&mut rng)];
                    let gender = Gender::ALL[genders.sample(&mut rng)];
                    CharacterRecord {
                        character_id: format!("C{i:02}"),
                        canonical_name: format!("Character {i} of {novel_id}"),
                        aliases: vec![format!("c{i}")],
                        gender,
                        role,
                    }
                })
                .collect();
            let mut mentions = Vec::new();
            for page in 1..=page_count {
                let focal = rng.random_range(0..characters.len());
                let focal_role = characters[focal].role.index();
                for (i, c) in characters.iter().enumerate() {
                    let present = i == focal || rng.random_bool(style.kernel[focal_role][c.role.index()]);
                    if present {
                        mentions.push(Mention {
                            novel_id: novel_id.clone(),
                            page,
                            character_id: c.character_id.clone(),
                        });
                    }
                }
            }
            novels.push(Novel {
                meta: NovelMeta { novel_id, author_id: author_id.clone(), page_count },
                characters,
                mentions,
            });
        }
    }
    Ok(Corpus::new(novels)?)
}
