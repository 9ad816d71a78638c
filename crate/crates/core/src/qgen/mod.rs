//! Attention seq2seq question generator.
//!
//! A two-layer bidirectional LSTM encodes the source (a sentence or a single
//! word). The decoder is a two-layer LSTM whose output layer sees three
//! things: the coverage-adjusted general-attention context, the elementwise
//! max of that context and the word-attention summary of the source, and its
//! own top hidden state. Training is plain SGD over reverse-mode gradients
//! from [`tape`].

pub mod model;
pub mod tape;
pub mod train;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{DecodeState, Encoded, Generated, ModelDims, Seq2SeqModel};
pub use train::{train, EpochStats, Hyperparams, TrainMode, TrainReport, TrainingInstance};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

pub const DEFAULT_EMBED_DIM: usize = 100;
pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_MAX_LEN: usize = 30;

#[derive(Debug, Error)]
pub enum QgenError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed training record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary has no words")]
    EmptyVocab,
    #[error("input sequence is empty")]
    EmptyInput,
    #[error("loss became {loss} at epoch {epoch}, instance {instance} (learning rate {learning_rate})")]
    NonFiniteLoss {
        epoch: usize,
        instance: usize,
        loss: f64,
        learning_rate: f64,
    },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}

/// Lowercases and splits on whitespace; punctuation marks become tokens of
/// their own so that "fever?" yields `["fever", "?"]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() || c == '-' || c == '\'' || c == '_' {
            cur.push(c);
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub answer: Vec<String>,
    pub question: Vec<String>,
}

impl TrainingPair {
    pub fn from_text(answer: &str, question: &str) -> Self {
        TrainingPair {
            answer: tokenize(answer),
            question: tokenize(question),
        }
    }
}

pub type TrainingCorpus = Vec<TrainingPair>;

#[derive(Deserialize)]
struct PairRecord {
    answer: String,
    question: String,
}

/// Parses JSONL `{"answer": ..., "question": ...}` records.
pub fn parse_training_corpus(text: &str) -> Result<TrainingCorpus, QgenError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(line).map_err(|e| QgenError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let pair = TrainingPair::from_text(&rec.answer, &rec.question);
        if pair.answer.is_empty() || pair.question.is_empty() {
            return Err(QgenError::Malformed {
                line: i + 1,
                reason: "answer and question must both have tokens".into(),
            });
        }
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(QgenError::EmptyCorpus);
    }
    Ok(pairs)
}

pub fn load_training_corpus(path: impl AsRef<Path>) -> Result<TrainingCorpus, QgenError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| QgenError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_training_corpus(&text)
}

/// Word ↔ id map. Ids 0..4 are PAD, BOS, EOS, UNK; words follow in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_words(words: impl IntoIterator<Item = String>) -> Self {
        let mut all: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        for w in words {
            if !all.contains(&w) {
                all.push(w);
            }
        }
        let ids = all.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words: all, ids }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// True when only the reserved entries exist.
    pub fn is_empty(&self) -> bool {
        self.words.len() <= RESERVED.len()
    }

    pub fn id(&self, word: &str) -> usize {
        self.ids.get(word).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    /// Non-reserved words in id order.
    pub fn words(&self) -> &[String] {
        &self.words[RESERVED.len()..]
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

pub fn build_vocab(corpus: &[TrainingPair], min_count: usize) -> Vocab {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in corpus {
        for w in pair.answer.iter().chain(&pair.question) {
            *counts.entry(w.as_str()).or_default() += 1;
        }
    }
    Vocab::from_words(
        counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count && !RESERVED.contains(w))
            .map(|(w, _)| w.to_string()),
    )
}

/// Anything that can turn source tokens into a question.
pub trait QuestionGenerator {
    fn generate(&self, input: &[String], max_len: usize) -> Result<Vec<String>, QgenError>;
}

impl QuestionGenerator for Seq2SeqModel {
    fn generate(&self, input: &[String], max_len: usize) -> Result<Vec<String>, QgenError> {
        Ok(self.generate_question(input, max_len)?.tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_punctuation() {
        assert_eq!(tokenize("Do you have Fever?"), vec!["do", "you", "have", "fever", "?"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
    }

    #[test]
    fn vocab_thresholds() {
        let corpus = vec![TrainingPair::from_text("a b", "b c")];
        let v = build_vocab(&corpus, 1);
        assert_eq!(v.len(), 7);
        assert_eq!(v.words(), ["a", "b", "c"]);
        let v2 = build_vocab(&corpus, 2);
        assert_eq!(v2.words(), ["b"]);
        assert_eq!(v2.id("a"), UNK);
        assert_eq!(v.id("zzz"), UNK);
        assert_eq!(v.id("<eos>"), EOS);
    }

    #[test]
    fn training_corpus_parse_errors_carry_line() {
        let err = parse_training_corpus("{\"answer\":\"a\",\"question\":\"b\"}\n{oops}\n").unwrap_err();
        assert!(matches!(err, QgenError::Malformed { line: 2, .. }));
        assert!(matches!(parse_training_corpus("\n"), Err(QgenError::EmptyCorpus)));
    }
}
