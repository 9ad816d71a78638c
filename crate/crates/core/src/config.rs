//! Service configuration: built-in defaults, then a `key = value` file, then
//! `QIR_*` environment variables, each layer overriding the previous one.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusFormat;
use crate::session::SessionConfig;

pub const ENV_PREFIX: &str = "QIR_";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("failed to read config {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{key} path {path} does not exist")]
    MissingPath { key: String, path: String },
}

/// Parsed `key = value` lines. Blank lines and lines starting with `#` are
/// ignored; later duplicates win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            map.insert(k.to_ascii_lowercase(), v.trim().to_string());
        }
        Ok(KeyValues(map))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub listen: String,
    pub corpus: PathBuf,
    pub corpus_format: CorpusFormat,
    pub embeddings: PathBuf,
    pub model: PathBuf,
    /// Bundled tables are used when unset.
    pub lemmas: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub store: PathBuf,
    pub delta: f64,
    pub seed: u64,
    pub result_size: usize,
    pub max_reclusters: usize,
    pub max_question_len: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let s = SessionConfig::default();
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            corpus: "corpus.jsonl".into(),
            corpus_format: CorpusFormat::Jsonl,
            embeddings: "vectors.txt".into(),
            model: "model.json".into(),
            lemmas: None,
            stopwords: None,
            store: "sessions".into(),
            delta: s.delta,
            seed: s.seed,
            result_size: s.result_size,
            max_reclusters: s.max_reclusters,
            max_question_len: s.max_question_len,
        }
    }
}

pub const KEYS: [&str; 13] = [
    "listen",
    "corpus",
    "corpus_format",
    "embeddings",
    "model",
    "lemmas",
    "stopwords",
    "store",
    "delta",
    "seed",
    "result_size",
    "max_reclusters",
    "max_question_len",
];

fn parsed<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

impl ServiceConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let optional = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "listen" => self.listen = value.into(),
            "corpus" => self.corpus = value.into(),
            "corpus_format" => self.corpus_format = parsed(key, value)?,
            "embeddings" => self.embeddings = value.into(),
            "model" => self.model = value.into(),
            "lemmas" => self.lemmas = optional(value),
            "stopwords" => self.stopwords = optional(value),
            "store" => self.store = value.into(),
            "delta" => self.delta = parsed(key, value)?,
            "seed" => self.seed = parsed(key, value)?,
            "result_size" => self.result_size = parsed(key, value)?,
            "max_reclusters" => self.max_reclusters = parsed(key, value)?,
            "max_question_len" => self.max_question_len = parsed(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Defaults, then `file`, then every `QIR_<KEY>` variable in `env` whose
    /// key is known. Other `QIR_` variables are left alone.
    pub fn resolve(file: Option<&KeyValues>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let mut cfg = ServiceConfig::default();
        if let Some(kv) = file {
            for (k, v) in &kv.0 {
                cfg.set(k, v)?;
            }
        }
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_ascii_lowercase(), v)))
            .filter(|(k, _)| KEYS.contains(&k.as_str()))
            .collect();
        overrides.sort();
        for (k, v) in overrides {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Checks δ and that every input file exists. The store directory is
    /// created on demand and need not exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(ConfigError::InvalidValue {
                key: "delta".into(),
                value: self.delta.to_string(),
                reason: "must lie in (0, 1]".into(),
            });
        }
        let mut paths = vec![("corpus", &self.corpus), ("embeddings", &self.embeddings), ("model", &self.model)];
        paths.extend(self.lemmas.as_ref().map(|p| ("lemmas", p)));
        paths.extend(self.stopwords.as_ref().map(|p| ("stopwords", p)));
        for (key, path) in paths {
            if !path.exists() {
                return Err(ConfigError::MissingPath {
                    key: key.into(),
                    path: path.display().to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            delta: self.delta,
            seed: self.seed,
            result_size: self.result_size,
            max_reclusters: self.max_reclusters,
            max_question_len: self.max_question_len,
            ..SessionConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_beats_file() {
        let kv = KeyValues::parse("# service\ndelta = 0.5\nseed=3\n\n").unwrap();
        let env = vec![("QIR_SEED".to_string(), "9".to_string()), ("QIR_CONFIG".to_string(), "x".to_string())];
        let cfg = ServiceConfig::resolve(Some(&kv), env).unwrap();
        assert_eq!(cfg.delta, 0.5);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn bad_lines_are_reported() {
        assert_eq!(KeyValues::parse("a = 1\nnonsense\n"), Err(ConfigError::Syntax { line: 2 }));
        let kv = KeyValues::parse("colour = red").unwrap();
        assert_eq!(ServiceConfig::resolve(Some(&kv), vec![]), Err(ConfigError::UnknownKey("colour".into())));
    }
}
