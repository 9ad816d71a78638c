//! Word vectors, phrase pooling and PCA.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Token;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding file is empty")]
    Empty,
    #[error("line {line}: expected {expected} components, found {found}")]
    InconsistentDim { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse {value:?} as a float")]
    BadFloat { line: usize, value: String },
    #[error("line {line}: non-finite component")]
    NonFinite { line: usize },
    #[error("line {line}: duplicate word {word:?}")]
    DuplicateWord { line: usize, word: String },
    #[error("no token of {phrase:?} is in the embedding vocabulary")]
    OutOfVocabulary { phrase: String },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("pca: need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("pca: output dimension {out_dim} exceeds input dimension {in_dim}")]
    OutDimTooLarge { out_dim: usize, in_dim: usize },
    #[error("pca: data has zero variance")]
    Degenerate,
}

/// Word → vector map with a fixed dimension. Word order is the file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the `word v1 v2 ... vd` text format.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let vector = parts
                .map(|v| {
                    v.parse::<f64>().map_err(|_| EmbeddingError::BadFloat {
                        line: line_no,
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite { line: line_no });
            }
            let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            if vector.len() != t.dim || vector.is_empty() {
                return Err(EmbeddingError::InconsistentDim {
                    line: line_no,
                    expected: t.dim,
                    found: vector.len(),
                });
            }
            if t.index.contains_key(word) {
                return Err(EmbeddingError::DuplicateWord {
                    line: line_no,
                    word: word.to_string(),
                });
            }
            t.push(word.to_string(), vector);
        }
        table.ok_or(EmbeddingError::Empty)
    }

    fn push(&mut self, word: String, vector: Vec<f64>) {
        self.index.insert(word.clone(), self.vectors.len());
        self.words.push(word);
        self.vectors.push(vector);
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        match self.index.get(word) {
            Some(&i) => self.vectors[i] = vector,
            None => self.push(word.to_string(), vector),
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Mean of the in-vocabulary token vectors; OOV tokens are skipped.
    pub fn embed_phrase(&self, tokens: &[Token]) -> Result<Vec<f64>, EmbeddingError> {
        self.embed_words(tokens.iter().map(|t| t.lemma.as_str()))
    }

    pub fn embed_words<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Result<Vec<f64>, EmbeddingError> {
        let mut sum = vec![0.0; self.dim];
        let mut count = 0usize;
        let mut seen = Vec::new();
        for w in words {
            seen.push(w);
            if let Some(v) = self.get(w) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                count += 1;
            }
        }
        if count == 0 {
            return Err(EmbeddingError::OutOfVocabulary {
                phrase: seen.join(" "),
            });
        }
        Ok(sum.into_iter().map(|s| s / count as f64).collect())
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A fitted principal-component projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub input_dim: usize,
    pub output_dim: usize,
    pub mean: Vec<f64>,
    /// Row-major `output_dim × input_dim`, rows are unit principal directions.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component, descending.
    pub explained_variance: Vec<f64>,
}

/// Fits PCA through the eigendecomposition of the sample covariance.
///
/// Each direction's sign is fixed so that its largest-magnitude entry is
/// positive (first such entry on ties).
pub fn pca_fit(data: &[Vec<f64>], out_dim: usize) -> Result<PcaModel, EmbeddingError> {
    if data.len() < 2 {
        return Err(EmbeddingError::TooFewPoints(data.len()));
    }
    let in_dim = data[0].len();
    if let Some(bad) = data.iter().find(|v| v.len() != in_dim) {
        return Err(EmbeddingError::DimMismatch {
            expected: in_dim,
            found: bad.len(),
        });
    }
    if out_dim == 0 || out_dim > in_dim {
        return Err(EmbeddingError::OutDimTooLarge { out_dim, in_dim });
    }
    let n = data.len() as f64;
    let mut mean = vec![0.0; in_dim];
    for v in data {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = DMatrix::<f64>::zeros(in_dim, in_dim);
    for v in data {
        let centred: Vec<f64> = v.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..in_dim {
            for j in i..in_dim {
                cov[(i, j)] += centred[i] * centred[j];
            }
        }
    }
    for i in 0..in_dim {
        for j in i..in_dim {
            let c = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    if cov.trace() <= 0.0 {
        return Err(EmbeddingError::Degenerate);
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..in_dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(out_dim);
    let mut explained_variance = Vec::with_capacity(out_dim);
    for &k in order.iter().take(out_dim) {
        let mut dir: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = dir
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, *x) } else { best });
        if pivot.1 < 0.0 {
            dir.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(dir);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaModel {
        input_dim: in_dim,
        output_dim: out_dim,
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>, EmbeddingError> {
        if v.len() != self.input_dim {
            return Err(EmbeddingError::DimMismatch {
                expected: self.input_dim,
                found: v.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|row| row.iter().zip(v.iter().zip(&self.mean)).map(|(c, (x, m))| c * (x - m)).sum())
            .collect())
    }

    /// Maps a projected vector back to input space.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>, EmbeddingError> {
        if z.len() != self.output_dim {
            return Err(EmbeddingError::DimMismatch {
                expected: self.output_dim,
                found: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (row, coef) in self.components.iter().zip(z) {
            out.iter_mut().zip(row).for_each(|(o, c)| *o += coef * c);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pca model serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
