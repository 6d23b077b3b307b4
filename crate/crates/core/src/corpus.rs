// Copyright 2026 The aspectval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Snippet corpora, seed lexicons and gold annotations.
//!
//! All on-disk formats are UTF-8 text:
//!
//! * corpus: JSON lines, `{"entity": str, "id": str, "tokens": [[word, tag], ...]}`
//! * seed lexicon: sections headed by `[value:<name>]`, one word per line
//! * gold clusters / polarity: TSV `entity  snippet_id  label`
//! * word labels: JSON lines `{"id": str, "labels": ["A" | "V" | "B", ...]}`
//! * parse spans: TSV `snippet_id  start  end  kind`

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexSet;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense, insertion-ordered bijection between strings and indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    items: IndexSet<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `item`, inserting it if unseen.
    pub fn intern(&mut self, item: &str) -> u32 {
        if let Some(idx) = self.items.get_index_of(item) {
            return idx as u32;
        }
        let (idx, _) = self.items.insert_full(item.to_owned());
        idx as u32
    }

    pub fn index_of(&self, item: &str) -> Option<u32> {
        self.items.get_index_of(item).map(|i| i as u32)
    }

    pub fn get(&self, index: u32) -> Option<&str> {
        self.items.get_index(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Token {
    pub word: u32,
    pub tag: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snippet {
    pub entity: usize,
    pub id: String,
    pub tokens: Vec<Token>,
}

impl Snippet {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// An immutable collection of tokenized, tagged snippets grouped by entity.
///
/// Snippets keep file order; `entity_snippets(i)` lists the snippets of entity
/// `i` in that same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    entities: Vec<String>,
    snippets: Vec<Snippet>,
    by_entity: Vec<Vec<usize>>,
    by_id: HashMap<String, usize>,
    vocabulary: Vocabulary,
    tags: Vocabulary,
}

impl Corpus {
    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn snippets(&self) -> &[Snippet] {
        &self.snippets
    }

    pub fn snippet(&self, index: usize) -> &Snippet {
        &self.snippets[index]
    }

    pub fn num_snippets(&self) -> usize {
        self.snippets.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.snippets.iter().map(Snippet::len).sum()
    }

    /// Indices (into `snippets()`) of the snippets describing entity `entity`.
    pub fn entity_snippets(&self, entity: usize) -> &[usize] {
        &self.by_entity[entity]
    }

    pub fn snippet_index(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn tag_set(&self) -> &Vocabulary {
        &self.tags
    }

    pub fn word(&self, token: Token) -> &str {
        self.vocabulary.get(token.word).expect("token word in vocabulary")
    }

    pub fn tag(&self, token: Token) -> &str {
        self.tags.get(token.tag).expect("token tag in tag set")
    }

    /// Surface text of a snippet with words joined by single spaces.
    pub fn text(&self, snippet: &Snippet) -> String {
        snippet
            .tokens
            .iter()
            .map(|&t| self.word(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Incremental corpus construction with the same validation as the loader.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    entities: Vocabulary,
    snippets: Vec<Snippet>,
    by_id: HashMap<String, usize>,
    vocabulary: Vocabulary,
    tags: Vocabulary,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pre-registers tags so their indices are fixed regardless of usage order.
    pub fn with_tags<'a>(mut self, tags: impl IntoIterator<Item = &'a str>) -> Self {
        for tag in tags {
            self.tags.intern(tag);
        }
        self
    }

    /// Pre-registers words so their indices are fixed regardless of usage order.
    pub fn with_words<'a>(mut self, words: impl IntoIterator<Item = &'a str>) -> Self {
        for word in words {
            self.vocabulary.intern(&normalize_word(word));
        }
        self
    }

    pub fn push<W: AsRef<str>, T: AsRef<str>>(
        &mut self,
        entity: &str,
        id: &str,
        tokens: &[(W, T)],
    ) -> Result<usize> {
        if tokens.is_empty() {
            return Err(Error::Data(format!("snippet {id:?} has no tokens")));
        }
        if self.by_id.contains_key(id) {
            return Err(Error::Data(format!("duplicate snippet id {id:?}")));
        }
        let entity = self.entities.intern(entity) as usize;
        let tokens = tokens
            .iter()
            .map(|(w, t)| Token {
                word: self.vocabulary.intern(&normalize_word(w.as_ref())),
                tag: self.tags.intern(t.as_ref()),
            })
            .collect();
        let index = self.snippets.len();
        self.by_id.insert(id.to_owned(), index);
        self.snippets.push(Snippet {
            entity,
            id: id.to_owned(),
            tokens,
        });
        Ok(index)
    }

    pub fn build(self) -> Corpus {
        let entities: Vec<String> = self.entities.iter().map(str::to_owned).collect();
        let mut by_entity = vec![Vec::new(); entities.len()];
        for (index, snippet) in self.snippets.iter().enumerate() {
            by_entity[snippet.entity].push(index);
        }
        Corpus {
            entities,
            snippets: self.snippets,
            by_entity,
            by_id: self.by_id,
            vocabulary: self.vocabulary,
            tags: self.tags,
        }
    }
}

/// Lowercases a surface form. No stemming and no stop-word removal.
pub fn normalize_word(word: &str) -> String {
    word.to_lowercase()
}

#[derive(Debug, Serialize, Deserialize)]
struct SnippetRecord {
    entity: String,
    id: String,
    tokens: Vec<(String, String)>,
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let corpus = read_corpus(BufReader::new(file), path)?;
    info!(
        "loaded {}: {} entities, {} snippets, {} words in vocabulary",
        path.display(),
        corpus.num_entities(),
        corpus.num_snippets(),
        corpus.vocabulary().len()
    );
    Ok(corpus)
}

/// Parses a JSON-lines corpus; `origin` is only used in error messages.
pub fn read_corpus(reader: impl BufRead, origin: &Path) -> Result<Corpus> {
    let mut builder = CorpusBuilder::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SnippetRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(origin, lineno, format!("malformed record: {e}")))?;
        builder
            .push(&record.entity, &record.id, &record.tokens)
            .map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
    }
    Ok(builder.build())
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for snippet in corpus.snippets() {
        let record = SnippetRecord {
            entity: corpus.entities()[snippet.entity].clone(),
            id: snippet.id.clone(),
            tokens: snippet
                .tokens
                .iter()
                .map(|&t| (corpus.word(t).to_owned(), corpus.tag(t).to_owned()))
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Names of the value types, in index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueTypes(Vec<String>);

impl ValueTypes {
    pub fn new(names: Vec<String>) -> Self {
        ValueTypes(names)
    }

    /// `positive, negative` for two types, `v0 .. v{n-1}` otherwise.
    pub fn default_for(count: usize) -> Self {
        if count == 2 {
            ValueTypes(vec!["positive".into(), "negative".into()])
        } else {
            ValueTypes((0..count).map(|v| format!("v{v}")).collect())
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self, index: usize) -> &str {
        &self.0[index]
    }

    /// Resolves a label to a value index. Accepts the full name or an
    /// unambiguous prefix (`pos` for `positive`), case-insensitively.
    pub fn resolve(&self, label: &str) -> Option<usize> {
        let label = label.to_lowercase();
        if let Some(i) = self.0.iter().position(|n| n.to_lowercase() == label) {
            return Some(i);
        }
        let mut hits = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, n)| !label.is_empty() && n.to_lowercase().starts_with(&label));
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }
}

/// Seed vocabulary per value type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedLexicon {
    seeds: Vec<BTreeSet<u32>>,
    /// Seed entries that were not in the corpus vocabulary.
    pub dropped: usize,
}

impl SeedLexicon {
    pub fn empty(num_values: usize) -> Self {
        SeedLexicon {
            seeds: vec![BTreeSet::new(); num_values],
            dropped: 0,
        }
    }

    /// Builds a lexicon from word lists, one per value type.
    pub fn from_words<S: AsRef<str>>(corpus: &Corpus, lists: &[Vec<S>]) -> Self {
        let mut lexicon = SeedLexicon::empty(lists.len());
        for (value, words) in lists.iter().enumerate() {
            for word in words {
                lexicon.add(corpus, value, word.as_ref());
            }
        }
        lexicon
    }

    fn add(&mut self, corpus: &Corpus, value: usize, word: &str) {
        match corpus.vocabulary().index_of(&normalize_word(word)) {
            Some(idx) => {
                self.seeds[value].insert(idx);
            }
            None => self.dropped += 1,
        }
    }

    pub fn num_values(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.iter().all(BTreeSet::is_empty)
    }

    pub fn seeds(&self, value: usize) -> &BTreeSet<u32> {
        &self.seeds[value]
    }

    pub fn contains(&self, value: usize, word: u32) -> bool {
        self.seeds.get(value).is_some_and(|s| s.contains(&word))
    }

    /// Words listed under more than one value type.
    pub fn overlaps(&self) -> Vec<u32> {
        let mut seen = BTreeMap::<u32, usize>::new();
        for set in &self.seeds {
            for &w in set {
                *seen.entry(w).or_default() += 1;
            }
        }
        seen.into_iter().filter(|&(_, c)| c > 1).map(|(w, _)| w).collect()
    }

    /// Swaps the seed sets of two value types.
    pub fn swapped(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        out.seeds.swap(a, b);
        out
    }
}

pub fn load_seed_lexicon(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    values: &ValueTypes,
) -> Result<SeedLexicon> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_seed_lexicon(BufReader::new(file), path, corpus, values)
}

pub fn read_seed_lexicon(
    reader: impl BufRead,
    origin: &Path,
    corpus: &Corpus,
    values: &ValueTypes,
) -> Result<SeedLexicon> {
    if values.is_empty() {
        return Err(Error::Config(
            "a seed lexicon needs at least one value type".into(),
        ));
    }
    let mut lexicon = SeedLexicon::empty(values.len());
    let mut current = None;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = header
                .strip_prefix("value:")
                .ok_or_else(|| Error::parse(origin, lineno, format!("bad section header {line:?}")))?;
            let value = values.resolve(name.trim()).ok_or_else(|| {
                Error::parse(origin, lineno, format!("unknown value type {name:?}"))
            })?;
            current = Some(value);
            continue;
        }
        let value = current
            .ok_or_else(|| Error::parse(origin, lineno, "seed word before any [value:..] section"))?;
        lexicon.add(corpus, value, line);
    }
    if lexicon.dropped > 0 {
        warn!(
            "{}: {} seed words not in the corpus vocabulary were dropped",
            origin.display(),
            lexicon.dropped
        );
    }
    let overlaps = lexicon.overlaps();
    if !overlaps.is_empty() {
        warn!(
            "{}: {} seed words are listed under more than one value type",
            origin.display(),
            overlaps.len()
        );
    }
    Ok(lexicon)
}

pub fn write_seed_lexicon(
    lexicon: &SeedLexicon,
    corpus: &Corpus,
    values: &ValueTypes,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for v in 0..lexicon.num_values() {
        text.push_str(&format!("[value:{}]\n", values.name(v)));
        for &w in lexicon.seeds(v) {
            text.push_str(corpus.vocabulary().get(w).unwrap_or_default());
            text.push('\n');
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Per-word gold label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WordLabel {
    A,
    V,
    B,
}

impl WordLabel {
    pub fn opposite(self) -> Option<WordLabel> {
        match self {
            WordLabel::A => Some(WordLabel::V),
            WordLabel::V => Some(WordLabel::A),
            WordLabel::B => None,
        }
    }
}

impl fmt::Display for WordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WordLabel::A => "A",
            WordLabel::V => "V",
            WordLabel::B => "B",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhraseKind {
    Np,
    Adjp,
    Advp,
}

impl FromStr for PhraseKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "NP" => Ok(PhraseKind::Np),
            "ADJP" => Ok(PhraseKind::Adjp),
            "ADVP" => Ok(PhraseKind::Advp),
            other => Err(format!("unknown phrase kind {other:?}")),
        }
    }
}

impl fmt::Display for PhraseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhraseKind::Np => "NP",
            PhraseKind::Adjp => "ADJP",
            PhraseKind::Advp => "ADVP",
        })
    }
}

/// A constituent over tokens `start..end` (end exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseSpan {
    pub start: usize,
    pub end: usize,
    pub kind: PhraseKind,
}

/// Partial gold annotations keyed by snippet id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldAnnotations {
    pub clusters: BTreeMap<String, String>,
    pub polarity: BTreeMap<String, usize>,
    pub word_labels: BTreeMap<String, Vec<WordLabel>>,
    pub parse_spans: BTreeMap<String, Vec<ParseSpan>>,
}

/// Locations of the gold files; any of them may be absent.
#[derive(Debug, Clone, Default)]
pub struct GoldPaths<'a> {
    pub clusters: Option<&'a Path>,
    pub polarity: Option<&'a Path>,
    pub word_labels: Option<&'a Path>,
    pub parse_spans: Option<&'a Path>,
}

pub fn load_gold(paths: &GoldPaths<'_>, corpus: &Corpus, values: &ValueTypes) -> Result<GoldAnnotations> {
    let mut gold = GoldAnnotations::default();
    if let Some(path) = paths.clusters {
        gold.clusters = load_label_tsv(path, corpus)?;
    }
    if let Some(path) = paths.polarity {
        for (id, label) in load_label_tsv(path, corpus)? {
            let value = values
                .resolve(&label)
                .ok_or_else(|| Error::Data(format!("{}: unknown polarity label {label:?}", path.display())))?;
            gold.polarity.insert(id, value);
        }
    }
    if let Some(path) = paths.word_labels {
        gold.word_labels = load_word_labels(path, corpus)?;
    }
    if let Some(path) = paths.parse_spans {
        gold.parse_spans = load_parse_spans(path, corpus)?;
    }
    Ok(gold)
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((lineno + 1, line));
        }
    }
    Ok(out)
}

fn lookup<'c>(corpus: &'c Corpus, path: &Path, line: usize, id: &str) -> Result<&'c Snippet> {
    corpus
        .snippet_index(id)
        .map(|i| corpus.snippet(i))
        .ok_or_else(|| Error::parse(path, line, format!("unknown snippet id {id:?}")))
}

/// Reads `entity  snippet_id  label` rows.
pub fn load_label_tsv(path: &Path, corpus: &Corpus) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let cols: Vec<&str> = text.split('\t').map(str::trim).collect();
        let [entity, id, label] = cols[..] else {
            return Err(Error::parse(path, line, "expected 3 tab-separated columns"));
        };
        let snippet = lookup(corpus, path, line, id)?;
        if corpus.entities()[snippet.entity] != entity {
            return Err(Error::parse(
                path,
                line,
                format!("snippet {id:?} belongs to entity {:?}, not {entity:?}", corpus.entities()[snippet.entity]),
            ));
        }
        out.insert(id.to_owned(), label.to_owned());
    }
    Ok(out)
}

pub fn write_label_tsv<'a>(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    rows: impl IntoIterator<Item = (&'a str, String)>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for (id, label) in rows {
        let snippet = corpus
            .snippet_index(id)
            .map(|i| corpus.snippet(i))
            .ok_or_else(|| Error::Data(format!("unknown snippet id {id:?}")))?;
        text.push_str(&format!("{}\t{}\t{}\n", corpus.entities()[snippet.entity], id, label));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct WordLabelRecord {
    id: String,
    labels: Vec<WordLabel>,
}

pub fn load_word_labels(path: &Path, corpus: &Corpus) -> Result<BTreeMap<String, Vec<WordLabel>>> {
    let mut out = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let record: WordLabelRecord = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, line, format!("malformed record: {e}")))?;
        let snippet = lookup(corpus, path, line, &record.id)?;
        if record.labels.len() != snippet.len() {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "{} labels for snippet {:?} with {} tokens",
                    record.labels.len(),
                    record.id,
                    snippet.len()
                ),
            ));
        }
        out.insert(record.id, record.labels);
    }
    Ok(out)
}

pub fn write_word_labels<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a str, &'a [WordLabel])>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for (id, labels) in rows {
        let record = WordLabelRecord {
            id: id.to_owned(),
            labels: labels.to_vec(),
        };
        text.push_str(&serde_json::to_string(&record)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_parse_spans(path: &Path, corpus: &Corpus) -> Result<BTreeMap<String, Vec<ParseSpan>>> {
    let mut out: BTreeMap<String, Vec<ParseSpan>> = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let cols: Vec<&str> = text.split('\t').map(str::trim).collect();
        let [id, start, end, kind] = cols[..] else {
            return Err(Error::parse(path, line, "expected 4 tab-separated columns"));
        };
        let snippet = lookup(corpus, path, line, id)?;
        let start: usize = start
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad start {start:?}")))?;
        let end: usize = end
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad end {end:?}")))?;
        let kind: PhraseKind = kind.parse().map_err(|e: String| Error::parse(path, line, e))?;
        if start >= end || end > snippet.len() {
            return Err(Error::parse(
                path,
                line,
                format!("span {start}..{end} out of bounds for {} tokens", snippet.len()),
            ));
        }
        out.entry(id.to_owned()).or_default().push(ParseSpan { start, end, kind });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<Corpus> {
        read_corpus(Cursor::new(text.as_bytes()), Path::new("<mem>"))
    }

    #[test]
    fn smallest_corpus() {
        let corpus = parse(
            r#"{"entity": "r1", "id": "s1", "tokens": [["the","DT"],["pizza","NN"],["was","VBD"],["great","JJ"]]}"#,
        )
        .unwrap();
        assert_eq!(corpus.num_entities(), 1);
        assert_eq!(corpus.num_snippets(), 1);
        assert_eq!(corpus.snippet(0).len(), 4);
        assert_eq!(corpus.vocabulary().len(), 4);
        assert_eq!(corpus.tag_set().len(), 4);
    }

    #[test]
    fn lowercases_words_and_keeps_tags() {
        let corpus = parse(
            r#"{"entity": "r1", "id": "s1", "tokens": [["The","DT"],["the","DT"],["PIZZA","NN"]]}"#,
        )
        .unwrap();
        assert_eq!(corpus.vocabulary().len(), 2);
        assert_eq!(corpus.text(corpus.snippet(0)), "the the pizza");
    }

    #[test]
    fn malformed_record_names_line() {
        let err = parse("{\"entity\": \"r1\", \"id\": \"s1\", \"tokens\": [[\"a\",\"DT\"]]}\n{oops}\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_tokens_rejected() {
        let err = parse(r#"{"entity": "r1", "id": "s1", "tokens": []}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = concat!(
            r#"{"entity": "r1", "id": "s1", "tokens": [["a","DT"]]}"#,
            "\n",
            r#"{"entity": "r2", "id": "s1", "tokens": [["b","DT"]]}"#
        );
        let err = parse(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn entity_grouping_preserves_order() {
        let text = [
            r#"{"entity": "r2", "id": "a", "tokens": [["x","NN"]]}"#,
            r#"{"entity": "r1", "id": "b", "tokens": [["y","NN"]]}"#,
            r#"{"entity": "r2", "id": "c", "tokens": [["z","NN"]]}"#,
        ]
        .join("\n");
        let corpus = parse(&text).unwrap();
        assert_eq!(corpus.entities(), ["r2", "r1"]);
        assert_eq!(corpus.entity_snippets(0), [0, 2]);
        assert_eq!(corpus.entity_snippets(1), [1]);
    }

    #[test]
    fn value_label_resolution() {
        let values = ValueTypes::default_for(2);
        assert_eq!(values.resolve("positive"), Some(0));
        assert_eq!(values.resolve("pos"), Some(0));
        assert_eq!(values.resolve("NEG"), Some(1));
        assert_eq!(values.resolve("neutral"), None);
        assert_eq!(values.resolve(""), None);
    }

    fn seed_corpus() -> Corpus {
        let mut b = CorpusBuilder::new();
        b.push("r1", "s1", &[("delicious", "JJ"), ("bland", "JJ"), ("good", "JJ")])
            .unwrap();
        b.build()
    }

    #[test]
    fn seed_lexicon_sections() {
        let corpus = seed_corpus();
        let values = ValueTypes::default_for(2);
        let text = "[value:positive]\ndelicious\ngood\nunseen\n\n[value:negative]\nbland\n";
        let lex = read_seed_lexicon(Cursor::new(text), Path::new("<mem>"), &corpus, &values).unwrap();
        let delicious = corpus.vocabulary().index_of("delicious").unwrap();
        let bland = corpus.vocabulary().index_of("bland").unwrap();
        assert!(lex.contains(0, delicious));
        assert!(lex.contains(1, bland));
        assert!(!lex.contains(1, delicious));
        assert_eq!(lex.dropped, 1);
        assert!(lex.overlaps().is_empty());
    }

    #[test]
    fn seed_lexicon_empty_file() {
        let corpus = seed_corpus();
        let lex = read_seed_lexicon(Cursor::new(""), Path::new("<mem>"), &corpus, &ValueTypes::default_for(2)).unwrap();
        assert!(lex.is_empty());
    }

    #[test]
    fn seed_lexicon_unknown_value_type() {
        let corpus = seed_corpus();
        let err = read_seed_lexicon(
            Cursor::new("[value:neutral]\ngood\n"),
            Path::new("<mem>"),
            &corpus,
            &ValueTypes::default_for(2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn seed_overlap_reported_not_fatal() {
        let corpus = seed_corpus();
        let lex = read_seed_lexicon(
            Cursor::new("[value:positive]\ngood\n[value:negative]\ngood\n"),
            Path::new("<mem>"),
            &corpus,
            &ValueTypes::default_for(2),
        )
        .unwrap();
        assert_eq!(lex.overlaps().len(), 1);
    }
}
