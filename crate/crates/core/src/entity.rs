//! Multilayered word clustering and questionable-entity selection.
//!
//! The corpus vocabulary is split into three K-Means clusters and related
//! through the cluster relationship matrix. While every off-diagonal entry
//! is below δ, the least distinct cluster is split in two. The most distinct
//! cluster's words are then ranked by distance to its centroid and the first
//! one with an unused corpus sentence becomes the next question's source.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusterError, KMeans};
use crate::corpus::{Document, Sentence, StopWords};
use crate::embedding::{euclidean, EmbeddingTable};
use crate::transport::{crm, Crm, CrmAggregation, TransportError};

pub const DEFAULT_DELTA: f64 = 0.8;
pub const INITIAL_CLUSTERS: usize = 3;
pub const DEFAULT_MAX_RECLUSTERS: usize = 10;

#[derive(Debug, Error)]
pub enum EntityError {
    #[error("need at least {needed} distinct embeddable words, found {found}")]
    TooFewWords { needed: usize, found: usize },
    #[error("cluster {0} has a single word and cannot be split")]
    SingletonCluster(usize),
    #[error("operation needs at least 2 clusters, engine has {0}")]
    TooFewClusters(usize),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub delta: f64,
    pub initial_clusters: usize,
    pub max_reclusters: usize,
    pub aggregation: CrmAggregation,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            delta: DEFAULT_DELTA,
            initial_clusters: INITIAL_CLUSTERS,
            max_reclusters: DEFAULT_MAX_RECLUSTERS,
            aggregation: CrmAggregation::Mean,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCluster {
    pub words: Vec<String>,
    pub embeddings: Vec<Vec<f64>>,
}

impl WordCluster {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let dim = self.embeddings.first().map_or(0, Vec::len);
        let mut c = vec![0.0; dim];
        for e in &self.embeddings {
            c.iter_mut().zip(e).for_each(|(a, b)| *a += b);
        }
        let n = self.embeddings.len().max(1) as f64;
        c.iter_mut().for_each(|a| *a /= n);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EngineEvent {
    Init { words: usize, sizes: Vec<usize> },
    Recluster { split: usize, sizes: Vec<usize> },
    SplitSkipped { cluster: usize },
    Rank { cluster: usize, top: Vec<String> },
    Select { word: String, doc_id: Option<String>, sentence: Option<usize> },
    Remove { cluster: usize, remaining: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWord {
    pub word: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub cluster_id: usize,
    pub words: Vec<RankedWord>,
}

/// Sentences and word-only prompts already used for questions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsedEntities {
    pub sentences: BTreeSet<(String, usize)>,
    pub words: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Sentence { word: String, sentence: Sentence },
    WordOnly { word: String },
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub clusters: Vec<WordCluster>,
    pub crm: Crm,
    pub delta: f64,
    pub config: EngineConfig,
    pub reclusters: usize,
    pub history: Vec<EngineEvent>,
}

/// Distinct embeddable non-stop-word lemmas of `corpus`, in first-occurrence
/// order.
pub fn vocabulary(corpus: &[Document], table: &EmbeddingTable, stopwords: &StopWords) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for doc in corpus {
        for lemma in doc.lemmas() {
            if !stopwords.contains(lemma) && table.contains(lemma) && seen.insert(lemma) {
                out.push(lemma.to_string());
            }
        }
    }
    out
}

/// Node scores are CRM row sums. Returns (argmax, argmin) with ties going to
/// the lower index; when both land on the same node the minimum moves to the
/// lowest other index.
pub fn find_extreme_nodes(crm: &Crm) -> (usize, usize) {
    let sums = crm.row_sums();
    let mut max = 0;
    let mut min = 0;
    for (i, s) in sums.iter().enumerate() {
        if *s > sums[max] {
            max = i;
        }
        if *s < sums[min] {
            min = i;
        }
    }
    if min == max && sums.len() > 1 {
        min = if max == 0 { 1 } else { 0 };
    }
    (max, min)
}

/// True iff every off-diagonal entry is below `delta`.
pub fn needs_reclustering(crm: &Crm, delta: f64) -> bool {
    crm.off_diagonal().all(|v| v < delta)
}

fn mix_seed(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn word_lists(clusters: &[WordCluster]) -> Vec<Vec<String>> {
    clusters.iter().map(|c| c.words.clone()).collect()
}

/// Words ordered by Euclidean distance to the cluster centroid, ties by
/// word.
pub fn rank_words(cluster_id: usize, cluster: &WordCluster) -> RankedList {
    let c = cluster.centroid();
    let mut words: Vec<RankedWord> = cluster
        .words
        .iter()
        .zip(&cluster.embeddings)
        .map(|(w, e)| RankedWord {
            word: w.clone(),
            distance: euclidean(e, &c),
        })
        .collect();
    words.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.word.cmp(&b.word)));
    RankedList { cluster_id, words }
}

/// Scans ranked words in order and returns the first unused sentence
/// containing one of them. A word found in no sentence at all yields a
/// word-only selection (once).
pub fn select_questionable_sentence(ranked: &RankedList, corpus: &[Document], used: &UsedEntities) -> Selection {
    for rw in &ranked.words {
        let mut occurs = false;
        for doc in corpus {
            for s in &doc.sentences {
                if !s.contains(&rw.word) {
                    continue;
                }
                occurs = true;
                if !used.sentences.contains(&(s.doc_id.clone(), s.index)) {
                    return Selection::Sentence {
                        word: rw.word.clone(),
                        sentence: s.clone(),
                    };
                }
            }
        }
        if !occurs && !used.words.contains(&rw.word) {
            return Selection::WordOnly { word: rw.word.clone() };
        }
    }
    Selection::Exhausted
}

impl EngineState {
    /// Clusters `words` into `config.initial_clusters` groups with K-Means
    /// and builds the CRM. Words without an embedding and repeats are
    /// dropped first.
    pub fn init(words: &[String], table: &EmbeddingTable, config: EngineConfig) -> Result<Self, EntityError> {
        let mut seen = HashSet::new();
        let words: Vec<&String> = words.iter().filter(|w| table.contains(w) && seen.insert(w.as_str())).collect();
        let k = config.initial_clusters;
        if words.len() < k {
            return Err(EntityError::TooFewWords {
                needed: k,
                found: words.len(),
            });
        }
        let points: Vec<Vec<f64>> = words.iter().map(|w| table.get(w).expect("filtered").to_vec()).collect();
        let fit = KMeans::new(k, config.seed).fit(&points)?;
        let mut clusters = vec![
            WordCluster {
                words: Vec::new(),
                embeddings: Vec::new(),
            };
            k
        ];
        for ((w, p), &l) in words.iter().zip(points).zip(&fit.assignment.labels) {
            clusters[l].words.push((*w).clone());
            clusters[l].embeddings.push(p);
        }
        if let Some(empty) = clusters.iter().position(WordCluster::is_empty) {
            return Err(TransportError::EmptyCluster(empty).into());
        }
        let crm = crm(&word_lists(&clusters), table, config.aggregation)?;
        let history = vec![EngineEvent::Init {
            words: words.len(),
            sizes: clusters.iter().map(WordCluster::len).collect(),
        }];
        Ok(EngineState {
            clusters,
            crm,
            delta: config.delta,
            config,
            reclusters: 0,
            history,
        })
    }

    /// Builds the engine from the corpus vocabulary.
    pub fn from_corpus(corpus: &[Document], table: &EmbeddingTable, stopwords: &StopWords, config: EngineConfig) -> Result<Self, EntityError> {
        Self::init(&vocabulary(corpus, table, stopwords), table, config)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn needs_reclustering(&self) -> bool {
        self.clusters.len() >= 2 && needs_reclustering(&self.crm, self.delta)
    }

    pub fn extremes(&self) -> Result<(usize, usize), EntityError> {
        if self.clusters.len() < 2 {
            return Err(EntityError::TooFewClusters(self.clusters.len()));
        }
        Ok(find_extreme_nodes(&self.crm))
    }

    /// Splits the least distinct cluster in two with K-Means (k = 2). The
    /// first half keeps the cluster's index, the second is appended.
    pub fn recluster(&mut self, table: &EmbeddingTable) -> Result<(), EntityError> {
        let (_, min) = self.extremes()?;
        let target = &self.clusters[min];
        if target.len() < 2 {
            return Err(EntityError::SingletonCluster(min));
        }
        let seed = mix_seed(self.config.seed, self.reclusters);
        let fit = KMeans::new(2, seed).fit(&target.embeddings)?;
        let mut halves = [
            WordCluster {
                words: Vec::new(),
                embeddings: Vec::new(),
            },
            WordCluster {
                words: Vec::new(),
                embeddings: Vec::new(),
            },
        ];
        for ((w, e), &l) in target.words.iter().zip(&target.embeddings).zip(&fit.assignment.labels) {
            halves[l].words.push(w.clone());
            halves[l].embeddings.push(e.clone());
        }
        let [first, second] = halves;
        if first.is_empty() || second.is_empty() {
            return Err(EntityError::SingletonCluster(min));
        }
        self.clusters[min] = first;
        self.clusters.push(second);
        self.crm = crm(&word_lists(&self.clusters), table, self.config.aggregation)?;
        self.reclusters += 1;
        self.history.push(EngineEvent::Recluster {
            split: min,
            sizes: self.clusters.iter().map(WordCluster::len).collect(),
        });
        Ok(())
    }

    /// Reclusters while the CRM says so and the budget allows. A cluster
    /// that cannot be split ends the loop.
    pub fn settle(&mut self, table: &EmbeddingTable) -> Result<usize, EntityError> {
        let mut splits = 0;
        while self.needs_reclustering() && self.reclusters < self.config.max_reclusters {
            match self.recluster(table) {
                Ok(()) => splits += 1,
                Err(EntityError::SingletonCluster(c)) => {
                    self.history.push(EngineEvent::SplitSkipped { cluster: c });
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(splits)
    }

    /// Drops a cluster and its CRM row and column.
    pub fn remove_cluster(&mut self, cluster: usize) {
        self.clusters.remove(cluster);
        self.crm = self.crm.without(cluster);
        self.history.push(EngineEvent::Remove {
            cluster,
            remaining: self.clusters.len(),
        });
    }

    /// Ranks the most distinct cluster (the only one if a single cluster
    /// remains).
    pub fn rank(&mut self) -> Result<RankedList, EntityError> {
        let cluster = match self.clusters.len() {
            0 => return Err(EntityError::TooFewClusters(0)),
            1 => 0,
            _ => self.extremes()?.0,
        };
        let ranked = rank_words(cluster, &self.clusters[cluster]);
        self.history.push(EngineEvent::Rank {
            cluster,
            top: ranked.words.iter().take(5).map(|w| w.word.clone()).collect(),
        });
        Ok(ranked)
    }

    pub fn select(&mut self, ranked: &RankedList, corpus: &[Document], used: &UsedEntities) -> Selection {
        let sel = select_questionable_sentence(ranked, corpus, used);
        let event = match &sel {
            Selection::Sentence { word, sentence } => Some(EngineEvent::Select {
                word: word.clone(),
                doc_id: Some(sentence.doc_id.clone()),
                sentence: Some(sentence.index),
            }),
            Selection::WordOnly { word } => Some(EngineEvent::Select {
                word: word.clone(),
                doc_id: None,
                sentence: None,
            }),
            Selection::Exhausted => None,
        };
        self.history.extend(event);
        sel
    }

    /// Index of the cluster containing `word`.
    pub fn cluster_of(&self, word: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.words.iter().any(|w| w == word))
    }

    /// All member words, in cluster order.
    pub fn all_words(&self) -> Vec<&str> {
        self.clusters.iter().flat_map(|c| c.words.iter().map(String::as_str)).collect()
    }
}
