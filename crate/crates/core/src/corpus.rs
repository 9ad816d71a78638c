//! Corpus ingestion and the six-step normalization pipeline.
//!
//! Every string that enters the engine (corpus documents, user answers,
//! generated questions) goes through [`preprocess`], so the token space is
//! shared across clustering, transport and the question generator.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUNDLED_LEMMAS: &str = include_str!("../data/lemmas.tsv");
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate document id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },
}

/// A normalized token. `lemma` is what the rest of the engine keys on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.lemma.as_str())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lemmas().any(|l| l == word)
    }

    pub fn text(&self) -> String {
        join_lemmas(&self.tokens)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// Splits `raw_text` into sentences and preprocesses each one. Sentences
    /// that end up empty are dropped and the remaining ones re-indexed.
    pub fn from_text(id: impl Into<String>, raw_text: impl Into<String>, lemmas: &LemmaTable) -> Self {
        let id = id.into();
        let raw_text = raw_text.into();
        let sentences = split_sentences(&raw_text)
            .into_iter()
            .map(|s| preprocess(&s, lemmas))
            .filter(|tokens| !tokens.is_empty())
            .enumerate()
            .map(|(index, tokens)| Sentence {
                doc_id: id.clone(),
                index,
                tokens,
            })
            .collect();
        Document {
            id,
            raw_text,
            sentences,
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.tokens().map(|t| t.lemma.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

pub type Corpus = Vec<Document>;

/// Dictionary lemmatizer with a suffix-stripping fallback.
#[derive(Debug, Clone, Default)]
pub struct LemmaTable {
    map: HashMap<String, String>,
    lemmas: HashSet<String>,
}

impl LemmaTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The table shipped with the crate (plural and inflected medical terms).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEMMAS).expect("bundled lemma table is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses `surface<TAB>lemma` lines. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut table = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or_else(|| CorpusError::Malformed {
                line: i + 1,
                reason: "expected surface<TAB>lemma".into(),
            })?;
            table.insert(surface.trim(), lemma.trim());
        }
        Ok(table)
    }

    pub fn insert(&mut self, surface: &str, lemma: &str) {
        let surface = surface.to_lowercase();
        let lemma = lemma.to_lowercase();
        self.lemmas.insert(lemma.clone());
        self.map.insert(surface, lemma);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lemmatize(&self, word: &str) -> String {
        if let Some(lemma) = self.map.get(word) {
            return lemma.clone();
        }
        // table outputs are fixed points, otherwise lemmatize would not be idempotent
        if self.lemmas.contains(word) {
            return word.to_string();
        }
        strip_suffix(word)
    }
}

/// Common English words ignored when picking content words.
#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopWords { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn strip_suffix(word: &str) -> String {
    let n = word.len();
    if n > 4 && word.ends_with("ies") {
        return format!("{}y", &word[..n - 3]);
    }
    for tail in ["sses", "xes", "zes", "ches", "shes"] {
        if word.ends_with(tail) && n > tail.len() + 1 {
            return word[..n - 2].to_string();
        }
    }
    if n > 3
        && word.ends_with('s')
        && !["ss", "us", "is", "es"].iter().any(|t| word.ends_with(t))
    {
        return word[..n - 1].to_string();
    }
    word.to_string()
}

/// Normalizes raw text into tokens: underscores to spaces, lowercase, tabs
/// (and any other whitespace) to spaces, drop everything outside
/// `[a-z0-9 -]`, collapse runs of spaces, then lemmatize each token.
pub fn preprocess(raw: &str, lemmas: &LemmaTable) -> Vec<Token> {
    let spaced = raw.replace('_', " ");
    let lower = spaced.to_lowercase();
    let untabbed: String = lower
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .collect();
    let cleaned: String = untabbed
        .chars()
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == ' ' || *c == '-')
        .collect();
    cleaned
        .split(' ')
        .filter(|w| !w.is_empty())
        // a bare run of hyphens carries no content
        .filter(|w| w.chars().any(|c| c != '-'))
        .map(|w| Token {
            surface: w.to_string(),
            lemma: lemmas.lemmatize(w),
        })
        .collect()
}

pub fn join_lemmas(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.lemma.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits on `.`, `?`, `!`, `;` and newlines, trimming and dropping empty segments.
pub fn split_sentences(raw: &str) -> Vec<String> {
    raw.split(['.', '?', '!', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Lines,
    Jsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(Self::Lines),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(format!("unknown corpus format {other:?} (expected lines|jsonl)")),
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<serde_json::Value>,
    text: Option<String>,
}

pub fn ingest(path: impl AsRef<Path>, format: CorpusFormat, lemmas: &LemmaTable) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, format, lemmas)
}

/// In `lines` format each line is a document whose id is its 1-based line
/// number. Documents that preprocess to nothing are dropped.
pub fn parse_corpus(text: &str, format: CorpusFormat, lemmas: &LemmaTable) -> Result<Corpus, CorpusError> {
    let mut corpus = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let (id, body) = match format {
            CorpusFormat::Lines => (lineno.to_string(), line.to_string()),
            CorpusFormat::Jsonl => {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JsonRecord = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                    line: lineno,
                    reason: e.to_string(),
                })?;
                let id = match rec.id {
                    Some(serde_json::Value::String(s)) => s,
                    Some(serde_json::Value::Number(n)) => n.to_string(),
                    Some(_) => {
                        return Err(CorpusError::Malformed {
                            line: lineno,
                            reason: "field \"id\" must be a string".into(),
                        })
                    }
                    None => {
                        return Err(CorpusError::Malformed {
                            line: lineno,
                            reason: "missing field \"id\"".into(),
                        })
                    }
                };
                let text = rec.text.ok_or_else(|| CorpusError::Malformed {
                    line: lineno,
                    reason: "missing field \"text\"".into(),
                })?;
                (id, text)
            }
        };
        if !ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, line: lineno });
        }
        let doc = Document::from_text(id, body, lemmas);
        if !doc.is_empty() {
            corpus.push(doc);
        }
    }
    Ok(corpus)
}

/// A phrase with its gold category, one JSON object per line with fields
/// "text" and "category".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelledItem {
    pub text: String,
    pub category: String,
}

pub fn parse_labelled(text: &str) -> Result<Vec<LabelledItem>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::Malformed {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn load_labelled(path: impl AsRef<Path>) -> Result<Vec<LabelledItem>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_labelled(&text)
}
