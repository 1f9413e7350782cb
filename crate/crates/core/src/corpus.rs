//! Corpus data model, validation and alias normalization.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Male, Gender::Female, Gender::Unknown];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Protagonist,
    Antagonist,
    Support,
    Narrator,
    Minor,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Protagonist,
        Role::Antagonist,
        Role::Support,
        Role::Narrator,
        Role::Minor,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Protagonist => "protagonist",
            Role::Antagonist => "antagonist",
            Role::Support => "support",
            Role::Narrator => "narrator",
            Role::Minor => "minor",
        }
    }
}

/// One appearance of a character on a page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub novel_id: String,
    pub page: u32,
    pub character_id: String,
}

/// A mention that still carries the surface string as written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMention {
    pub novel_id: String,
    pub page: u32,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterRecord {
    pub character_id: String,
    pub canonical_name: String,
    pub aliases: Vec<String>,
    pub gender: Gender,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NovelMeta {
    pub novel_id: String,
    pub author_id: String,
    pub page_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Novel {
    pub meta: NovelMeta,
    pub characters: Vec<CharacterRecord>,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("corpus must contain at least 2 distinct authors, found {0}")]
    TooFewAuthors(usize),
    #[error("author {author_id} has {count} novel(s); the author-aware split needs at least 2 (one test, one train)")]
    TooFewNovels { author_id: String, count: usize },
    #[error("duplicate novel id {0}")]
    DuplicateNovel(String),
    #[error("novel {0} has page_count 0")]
    ZeroPageCount(String),
    #[error("novel {0} has an empty character table")]
    NoCharacters(String),
    #[error("novel {novel_id}: duplicate character id {character_id}")]
    DuplicateCharacter { novel_id: String, character_id: String },
    #[error("novel {novel_id}: empty character id")]
    EmptyCharacterId { novel_id: String },
    #[error("novel {novel_id}: character {character_id} has an empty alias")]
    EmptyAlias { novel_id: String, character_id: String },
    #[error("novel {novel_id}: mention references undeclared character id {character_id}")]
    UnknownCharacter { novel_id: String, character_id: String },
    #[error("novel {novel_id}: mention of {character_id} on page {page} is outside 1..={page_count}")]
    PageOutOfRange {
        novel_id: String,
        character_id: String,
        page: u32,
        page_count: u32,
    },
    #[error("mention belongs to novel {novel_id} which is listed under {owner}")]
    ForeignMention { novel_id: String, owner: String },
    #[error("surface form {surface:?} is ambiguous between characters {}", characters.join(", "))]
    AmbiguousAlias { surface: String, characters: Vec<String> },
}

/// A validated collection of novels.
///
/// Invariants: novel ids are unique, every mention refers to a declared
/// character on a page inside `1..=page_count`, there are at least two authors
/// and every author has at least two novels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corpus {
    novels: Vec<Novel>,
}

impl Corpus {
    pub fn new(novels: Vec<Novel>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        let mut per_author: BTreeMap<&str, usize> = BTreeMap::new();
        for novel in &novels {
            if !seen.insert(novel.meta.novel_id.as_str()) {
                return Err(CorpusError::DuplicateNovel(novel.meta.novel_id.clone()));
            }
            validate_novel(novel)?;
            *per_author.entry(novel.meta.author_id.as_str()).or_default() += 1;
        }
        if per_author.len() < 2 {
            return Err(CorpusError::TooFewAuthors(per_author.len()));
        }
        if let Some((author, count)) = per_author.iter().find(|(_, &c)| c < 2) {
            return Err(CorpusError::TooFewNovels {
                author_id: author.to_string(),
                count: *count,
            });
        }
        Ok(Self { novels })
    }

    pub fn novels(&self) -> &[Novel] {
        &self.novels
    }

    pub fn into_novels(self) -> Vec<Novel> {
        self.novels
    }

    pub fn len(&self) -> usize {
        self.novels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.novels.is_empty()
    }

    /// Distinct author ids in sorted order. This is the class order used by
    /// every classifier.
    pub fn authors(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.novels.iter().map(|n| n.meta.author_id.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    pub fn author_of(&self, novel_id: &str) -> Option<&str> {
        self.novels
            .iter()
            .find(|n| n.meta.novel_id == novel_id)
            .map(|n| n.meta.author_id.as_str())
    }

    /// Same novels with author ids replaced position by position.
    pub fn with_authors(&self, authors: &[String]) -> Result<Self, CorpusError> {
        assert_eq!(authors.len(), self.novels.len(), "one author per novel");
        let novels = self
            .novels
            .iter()
            .zip(authors)
            .map(|(novel, author)| {
                let mut novel = novel.clone();
                novel.meta.author_id = author.clone();
                novel
            })
            .collect();
        Self::new(novels)
    }
}

fn validate_novel(novel: &Novel) -> Result<(), CorpusError> {
    let novel_id = &novel.meta.novel_id;
    if novel.meta.page_count == 0 {
        return Err(CorpusError::ZeroPageCount(novel_id.clone()));
    }
    if novel.characters.is_empty() {
        return Err(CorpusError::NoCharacters(novel_id.clone()));
    }
    let mut ids = BTreeSet::new();
    for c in &novel.characters {
        if c.character_id.is_empty() {
            return Err(CorpusError::EmptyCharacterId { novel_id: novel_id.clone() });
        }
        if !ids.insert(c.character_id.as_str()) {
            return Err(CorpusError::DuplicateCharacter {
                novel_id: novel_id.clone(),
                character_id: c.character_id.clone(),
            });
        }
        if c.aliases.iter().any(|a| a.trim().is_empty()) {
            return Err(CorpusError::EmptyAlias {
                novel_id: novel_id.clone(),
                character_id: c.character_id.clone(),
            });
        }
    }
    for m in &novel.mentions {
        if &m.novel_id != novel_id {
            return Err(CorpusError::ForeignMention {
                novel_id: m.novel_id.clone(),
                owner: novel_id.clone(),
            });
        }
        if !ids.contains(m.character_id.as_str()) {
            return Err(CorpusError::UnknownCharacter {
                novel_id: novel_id.clone(),
                character_id: m.character_id.clone(),
            });
        }
        if m.page == 0 || m.page > novel.meta.page_count {
            return Err(CorpusError::PageOutOfRange {
                novel_id: novel_id.clone(),
                character_id: m.character_id.clone(),
                page: m.page,
                page_count: novel.meta.page_count,
            });
        }
    }
    Ok(())
}

/// Result of resolving surface strings against a character table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub mentions: Vec<Mention>,
    pub dropped: usize,
}

fn fold(surface: &str) -> String {
    surface.trim().to_lowercase()
}

/// Resolve raw surface strings to character ids.
///
/// A surface matches a character when, after trimming and lowercasing, it
/// equals the canonical name or one of the aliases. Unmatched mentions are
/// dropped and counted. A key claimed by two characters is an error.
pub fn normalize_mentions(
    raw_mentions: &[RawMention],
    character_table: &[CharacterRecord],
) -> Result<Normalized, CorpusError> {
    let mut owners: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for c in character_table {
        for name in core::iter::once(&c.canonical_name).chain(&c.aliases) {
            let key = fold(name);
            if key.is_empty() {
                continue;
            }
            owners.entry(key).or_default().insert(c.character_id.as_str());
        }
    }
    if let Some((surface, chars)) = owners.iter().find(|(_, chars)| chars.len() > 1) {
        return Err(CorpusError::AmbiguousAlias {
            surface: surface.clone(),
            characters: chars.iter().map(|s| s.to_string()).collect(),
        });
    }

    let mut mentions = Vec::with_capacity(raw_mentions.len());
    let mut dropped = 0;
    for raw in raw_mentions {
        match owners.get(&fold(&raw.surface)).and_then(|s| s.iter().next()) {
            Some(id) => mentions.push(Mention {
                novel_id: raw.novel_id.clone(),
                page: raw.page,
                character_id: id.to_string(),
            }),
            None => dropped += 1,
        }
    }
    Ok(Normalized { mentions, dropped })
}
