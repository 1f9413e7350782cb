//! On-disk formats.
//!
//! Corpus directory (UTF-8, one JSON object per line):
//!
//! * `meta.jsonl`: `{"novel_id", "author_id", "page_count"}`
//! * `characters.jsonl`: `{"novel_id", "character_id", "canonical_name", "aliases", "gender", "role"}`
//! * `mentions.jsonl`: `{"novel_id", "page", "character_id"}` or `{"novel_id", "page", "surface"}`
//!
//! Line order inside each file does not matter beyond fixing the order of
//! novels, characters and mentions. Duplicate mention lines are kept.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use authorgraph_core::augment::{LabeledEmbedding, Origin};
use authorgraph_core::corpus::normalize_mentions;
use authorgraph_core::features::FeatureMatrix;
use authorgraph_core::graph::GraphNode;
use authorgraph_core::{CharacterRecord, Corpus, Mention, NovelGraph, Novel, NovelMeta, RawMention};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Error;

pub const META_FILE: &str = "meta.jsonl";
pub const CHARACTERS_FILE: &str = "characters.jsonl";
pub const MENTIONS_FILE: &str = "mentions.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct CharacterLine {
    novel_id: String,
    #[serde(flatten)]
    record: CharacterRecord,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MentionLine {
    novel_id: String,
    page: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    character_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    surface: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Error> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line: i + 1, message: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// A validated corpus plus the number of surface mentions that matched no character.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub dropped_mentions: usize,
}

pub fn load_corpus(mentions_path: &Path, characters_path: &Path, meta_path: &Path) -> Result<LoadedCorpus, Error> {
    let metas: Vec<NovelMeta> = read_jsonl(meta_path)?;
    let mut characters: BTreeMap<String, Vec<CharacterRecord>> = BTreeMap::new();
    for (i, line) in read_jsonl::<CharacterLine>(characters_path)?.into_iter().enumerate() {
        if !metas.iter().any(|m| m.novel_id == line.novel_id) {
            return Err(Error::UnknownNovel { path: characters_path.to_path_buf(), line: i + 1, novel_id: line.novel_id });
        }
        characters.entry(line.novel_id).or_default().push(line.record);
    }
    let mut resolved: BTreeMap<String, Vec<Mention>> = BTreeMap::new();
    let mut raw: BTreeMap<String, Vec<RawMention>> = BTreeMap::new();
    for (i, line) in read_jsonl::<MentionLine>(mentions_path)?.into_iter().enumerate() {
        let at = |message: &str| Error::Parse { path: mentions_path.to_path_buf(), line: i + 1, message: message.into() };
        if !metas.iter().any(|m| m.novel_id == line.novel_id) {
            return Err(Error::UnknownNovel { path: mentions_path.to_path_buf(), line: i + 1, novel_id: line.novel_id });
        }
        match (line.character_id, line.surface) {
            (Some(character_id), None) => resolved.entry(line.novel_id.clone()).or_default().push(Mention {
                novel_id: line.novel_id,
                page: line.page,
                character_id,
            }),
            (None, Some(surface)) => {
                raw.entry(line.novel_id.clone()).or_default().push(RawMention { novel_id: line.novel_id, page: line.page, surface })
            }
            _ => return Err(at("a mention needs exactly one of character_id and surface")),
        }
    }
    let mut dropped = 0;
    let mut novels = Vec::with_capacity(metas.len());
    for meta in metas {
        let table = characters.remove(&meta.novel_id).unwrap_or_default();
        let mut mentions = resolved.remove(&meta.novel_id).unwrap_or_default();
        if let Some(surfaces) = raw.remove(&meta.novel_id) {
            let normalized = normalize_mentions(&surfaces, &table)?;
            dropped += normalized.dropped;
            mentions.extend(normalized.mentions);
        }
        novels.push(Novel { meta, characters: table, mentions });
    }
    Ok(LoadedCorpus { corpus: Corpus::new(novels)?, dropped_mentions: dropped })
}

pub fn load_corpus_dir(dir: &Path) -> Result<LoadedCorpus, Error> {
    load_corpus(&dir.join(MENTIONS_FILE), &dir.join(CHARACTERS_FILE), &dir.join(META_FILE))
}

/// Write the three corpus files; mentions are written with resolved ids.
pub fn write_corpus_dir(dir: &Path, corpus: &Corpus) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_jsonl(&dir.join(META_FILE), corpus.novels().iter().map(|n| &n.meta))?;
    write_jsonl(
        &dir.join(CHARACTERS_FILE),
        corpus.novels().iter().flat_map(|n| {
            n.characters.iter().map(|c| CharacterLine { novel_id: n.meta.novel_id.clone(), record: c.clone() })
        }),
    )?;
    write_jsonl(
        &dir.join(MENTIONS_FILE),
        corpus.novels().iter().flat_map(|n| {
            n.mentions.iter().map(|m| MentionLine {
                novel_id: m.novel_id.clone(),
                page: m.page,
                character_id: Some(m.character_id.clone()),
                surface: None,
            })
        }),
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    novel_id: String,
    author_id: String,
    window: u32,
    nodes: Vec<GraphNode>,
    edges: Vec<(String, String, u64)>,
}

pub fn graph_to_string(g: &NovelGraph) -> String {
    let file = GraphFile {
        novel_id: g.novel_id.clone(),
        author_id: g.author_id.clone(),
        window: g.window,
        nodes: g.nodes.clone(),
        edges: g.edges.iter().map(|((a, b), &w)| (a.clone(), b.clone(), w)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("graph serializes");
    s.push('\n');
    s
}

pub fn graph_from_str(text: &str, path: &Path) -> Result<NovelGraph, Error> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: format!("column {}: {e}", e.column()),
    })?;
    NovelGraph::from_parts(file.novel_id, file.author_id, file.window, file.nodes, file.edges)
        .map_err(|e| Error::Parse { path: path.to_path_buf(), line: 0, message: e.to_string() })
}

pub fn graph_path(dir: &Path, novel_id: &str) -> PathBuf {
    dir.join(format!("{novel_id}.json"))
}

pub fn write_graph(dir: &Path, g: &NovelGraph) -> Result<PathBuf, Error> {
    let path = graph_path(dir, &g.novel_id);
    fs::write(&path, graph_to_string(g)).map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_graph(path: &Path) -> Result<NovelGraph, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    graph_from_str(&text, path)
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Csv { path: path.to_path_buf(), message: e.to_string() }
}

fn fmt_float(v: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{v:?}")
}

pub fn write_feature_csv(path: &Path, m: &FeatureMatrix) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let header = ["novel_id", "author_id"].into_iter().map(String::from).chain(m.columns.iter().cloned());
    w.write_record(header).map_err(csv_err(path))?;
    for ((id, label), row) in m.novel_ids.iter().zip(&m.labels).zip(&m.rows) {
        let record = [id.clone(), label.clone()].into_iter().chain(row.iter().map(|&v| fmt_float(v)));
        w.write_record(record).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// `graph_id, e0, e1, ...`.
pub fn write_embedding_csv(path: &Path, rows: &[(String, Vec<f64>)]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let dim = rows.first().map_or(0, |r| r.1.len());
    w.write_record(std::iter::once(String::from("graph_id")).chain((0..dim).map(|i| format!("e{i}"))))
        .map_err(csv_err(path))?;
    for (id, values) in rows {
        w.write_record(std::iter::once(id.clone()).chain(values.iter().map(|&v| fmt_float(v))))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_embedding_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let id = record.get(0).unwrap_or_default().to_string();
        let values = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line: i + 2, message: e.to_string() })?;
        out.push((id, values));
    }
    Ok(out)
}

/// `id, origin, parent, label, v0, v1, ...` with labels written as author ids.
pub fn write_augmented_csv(path: &Path, rows: &[LabeledEmbedding], classes: &[String]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let dim = rows.first().map_or(0, |r| r.values.len());
    let header = ["id", "origin", "parent", "label"].into_iter().map(String::from).chain((0..dim).map(|i| format!("v{i}")));
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        let origin = match r.origin {
            Origin::Real => "real",
            Origin::Synthetic => "synthetic",
        };
        let parent = if r.origin == Origin::Synthetic { r.novel_id.as_str() } else { "" };
        let fixed = [r.id.clone(), origin.into(), parent.into(), classes[r.label].clone()];
        w.write_record(fixed.into_iter().chain(r.values.iter().map(|&v| fmt_float(v)))).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })
}

pub fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use authorgraph_core::graph::build_corpus_graphs;
    use authorgraph_core::synth::{generate_synthetic_corpus, SynthMode, SyntheticSpec};
    use authorgraph_core::{Gender, Role};

    fn write_lines(path: &Path, lines: &[&str]) {
        fs::write(path, lines.join("\n") + "\n").unwrap();
    }

    fn two_by_two(dir: &Path, mention: &str) {
        write_lines(
            &dir.join(META_FILE),
            &[
                r#"{"novel_id":"N1","author_id":"A","page_count":3}"#,
                r#"{"novel_id":"N2","author_id":"A","page_count":3}"#,
                r#"{"novel_id":"N3","author_id":"B","page_count":3}"#,
                r#"{"novel_id":"N4","author_id":"B","page_count":3}"#,
            ],
        );
        let chars: Vec<String> = ["N1", "N2", "N3", "N4"]
            .iter()
            .map(|n| format!(r#"{{"novel_id":"{n}","character_id":"C1","canonical_name":"Begum Akhtar","aliases":["Akhtar"],"gender":"female","role":"protagonist"}}"#))
            .collect();
        write_lines(&dir.join(CHARACTERS_FILE), &chars.iter().map(String::as_str).collect::<Vec<_>>());
        write_lines(
            &dir.join(MENTIONS_FILE),
            &[r#"{"novel_id":"N1","page":1,"character_id":"C1"}"#, r#"{"novel_id":"N2","page":2,"surface":" akhtar "}"#, r#"{"novel_id":"N2","page":2,"surface":"Stranger"}"#, mention],
        );
    }

    #[test]
    fn loads_two_by_two() {
        let dir = tempfile::tempdir().unwrap();
        two_by_two(dir.path(), r#"{"novel_id":"N3","page":3,"character_id":"C1"}"#);
        let loaded = load_corpus_dir(dir.path()).unwrap();
        assert_eq!(loaded.corpus.len(), 4);
        assert_eq!(loaded.dropped_mentions, 1);
        assert_eq!(loaded.corpus.novels()[1].mentions[0].character_id, "C1");
    }

    #[test]
    fn undeclared_character_is_named() {
        let dir = tempfile::tempdir().unwrap();
        two_by_two(dir.path(), r#"{"novel_id":"N3","page":3,"character_id":"X9"}"#);
        let err = load_corpus_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("X9"), "{err}");
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        two_by_two(dir.path(), r#"{"novel_id":"N3","page":"three","character_id":"C1"}"#);
        match load_corpus_dir(dir.path()).unwrap_err() {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 4);
                assert!(path.ends_with(MENTIONS_FILE));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mention_with_both_keys_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        two_by_two(dir.path(), r#"{"novel_id":"N3","page":3,"character_id":"C1","surface":"Akhtar"}"#);
        assert!(matches!(load_corpus_dir(dir.path()), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn single_novel_author_cites_the_split() {
        let dir = tempfile::tempdir().unwrap();
        two_by_two(dir.path(), r#"{"novel_id":"N3","page":3,"character_id":"C1"}"#);
        let meta = fs::read_to_string(dir.path().join(META_FILE)).unwrap().replace(r#""N4","author_id":"B""#, r#""N4","author_id":"C""#);
        fs::write(dir.path().join(META_FILE), meta).unwrap();
        let err = load_corpus_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains("split"), "{err}");
    }

    #[test]
    fn corpus_round_trip() {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::planted(3, 7, SynthMode::Full, 1.0, 4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus_dir(dir.path(), &corpus).unwrap();
        let back = load_corpus_dir(dir.path()).unwrap();
        assert_eq!(back.corpus, corpus);
        assert_eq!(back.dropped_mentions, 0);
    }

    fn graph(n: usize, edges: &[(usize, usize, u64)]) -> NovelGraph {
        let nodes = (0..n)
            .map(|i| GraphNode { character_id: format!("C{i}"), gender: Gender::ALL[i % 3], role: Role::ALL[i % 5] })
            .collect();
        NovelGraph::from_parts("N".into(), "A".into(), 5, nodes, edges.iter().map(|&(a, b, w)| (format!("C{a}"), format!("C{b}"), w))).unwrap()
    }

    #[test]
    fn graph_round_trips() {
        let path = Path::new("mem.json");
        for g in [graph(3, &[(0, 1, 1), (1, 2, 2), (0, 2, 3)]), graph(4, &[(0, 1, 2)]), graph(5, &[])] {
            let text = graph_to_string(&g);
            assert_eq!(graph_from_str(&text, path).unwrap(), g);
            assert_eq!(graph_to_string(&graph_from_str(&text, path).unwrap()), text);
        }
    }

    #[test]
    fn corrupted_graph_reports_location() {
        let text = graph_to_string(&graph(3, &[(0, 1, 1)])).replace("\"window\": 5", "\"window\": five");
        match graph_from_str(&text, Path::new("g.json")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn graph_files_round_trip_through_disk() {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::planted(2, 4, SynthMode::Full, 1.0, 1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for g in build_corpus_graphs(&corpus, 5).unwrap() {
            let path = write_graph(dir.path(), &g).unwrap();
            assert_eq!(read_graph(&path).unwrap(), g);
        }
    }

    #[test]
    fn embedding_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let rows = vec![("N1".to_string(), vec![0.1, -2.5e-17, 3.0]), ("N2".to_string(), vec![1.0 / 3.0, 0.0, -1.0])];
        write_embedding_csv(&path, &rows).unwrap();
        assert_eq!(read_embedding_csv(&path).unwrap(), rows);
    }
}
