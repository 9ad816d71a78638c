//! The question/answer loop that narrows a corpus down to what the user is
//! after, and a JSON file store for sessions.
//!
//! A turn scores the typed answer against the document the question came
//! from. A score at or above δ keeps that document's cluster and drops the
//! rest; a lower score removes the document and its cluster, reclusters if
//! the remaining clusters are too alike, and otherwise ends the session.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{preprocess, Document, LemmaTable, StopWords};
use crate::embedding::{euclidean, EmbeddingTable};
use crate::entity::{EngineConfig, EngineEvent, EngineState, EntityError, RankedList, Selection, UsedEntities};
use crate::qgen::{QgenError, QuestionGenerator};
use crate::transport::{wmd_distance, CrmAggregation, NBow};

/// Leading question words dropped before the question joins the answer.
pub const INTERROGATIVES: [&str; 10] = ["what", "when", "where", "why", "how", "do", "does", "is", "are", "can"];
pub const DEFAULT_RESULT_SIZE: usize = 3;
/// Documents used when estimating the WMD scale (all pairs among them).
pub const SCALE_SAMPLE: usize = 100;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus cannot be clustered: {0}")]
    CorpusTooSmall(EntityError),
    #[error("session is {0:?}, not awaiting an answer")]
    WrongPhase(Phase),
    #[error("answer has no usable words")]
    EmptyAnswer,
    #[error("neither the question nor the answer has a word with an embedding")]
    AnswerOutOfVocabulary,
    #[error("session {0} not found")]
    Missing(String),
    #[error("session record {id} is corrupt: {reason}")]
    Corrupt { id: String, reason: String },
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error("session store I/O failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] EntityError),
    #[error(transparent)]
    Generator(#[from] QgenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    AwaitingAnswer,
    Converged,
    Exhausted,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Kept,
    Eliminated,
    Reclustered,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub delta: f64,
    pub seed: u64,
    pub result_size: usize,
    pub max_reclusters: usize,
    pub initial_clusters: usize,
    pub aggregation: CrmAggregation,
    pub max_question_len: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let e = EngineConfig::default();
        SessionConfig {
            delta: e.delta,
            seed: 0,
            result_size: DEFAULT_RESULT_SIZE,
            max_reclusters: e.max_reclusters,
            initial_clusters: e.initial_clusters,
            aggregation: e.aggregation,
            max_question_len: crate::qgen::DEFAULT_MAX_LEN,
        }
    }
}

impl SessionConfig {
    fn engine(&self) -> EngineConfig {
        EngineConfig {
            delta: self.delta,
            initial_clusters: self.initial_clusters,
            max_reclusters: self.max_reclusters,
            aggregation: self.aggregation,
            seed: self.seed,
        }
    }
}

/// Everything a session needs besides its own state.
pub struct Retriever {
    pub table: EmbeddingTable,
    pub lemmas: LemmaTable,
    pub stopwords: StopWords,
    pub generator: Arc<dyn QuestionGenerator + Send + Sync>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
}

/// Where a question came from: the ranked word, its sentence (absent for
/// word-only questions), the engine cluster and the document scored
/// against the answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub word: String,
    pub sentence: Option<SentenceRef>,
    pub cluster: usize,
    pub doc_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingQuestion {
    pub question: String,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub question: String,
    pub source: Source,
    pub answer: String,
    pub wmd_score: f64,
    pub action: Action,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc_id: String,
    pub text: String,
    /// WMD to everything the user answered; absent when either side has no
    /// embeddable word.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionEvent {
    Started { documents: usize, wmd_scale: f64 },
    Engine { turn: usize, event: EngineEvent },
    Asked { turn: usize, question: String },
    Answered { turn: usize, score: f64, action: Action, remaining: usize },
    Finished { phase: Phase },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub query: String,
    pub config: SessionConfig,
    pub corpus: Vec<Document>,
    pub engine: Option<EngineState>,
    pub phase: Phase,
    pub pending: Option<PendingQuestion>,
    pub ranked: Option<RankedList>,
    pub history: Vec<Turn>,
    pub used: UsedEntities,
    pub wmd_scale: f64,
    pub result: Vec<RankedDoc>,
    pub events: Vec<SessionEvent>,
}

/// What a turn produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub turn: Turn,
    pub phase: Phase,
    pub question: Option<String>,
    pub result: Option<Vec<RankedDoc>>,
}

fn doc_nbow(doc: &Document, table: &EmbeddingTable) -> Option<NBow> {
    NBow::from_words(doc.lemmas(), |w| table.contains(w)).ok()
}

/// 95th percentile (nearest rank) of pairwise document WMDs among the first
/// [`SCALE_SAMPLE`] embeddable documents; 1 when there is nothing to measure.
pub fn wmd_scale(corpus: &[Document], table: &EmbeddingTable) -> f64 {
    let bows: Vec<NBow> = corpus.iter().filter_map(|d| doc_nbow(d, table)).take(SCALE_SAMPLE).collect();
    let mut dists = Vec::new();
    for i in 0..bows.len() {
        for j in (i + 1)..bows.len() {
            if let Ok(d) = wmd_distance(&bows[i], &bows[j], table) {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let rank = ((0.95 * dists.len() as f64).ceil() as usize).clamp(1, dists.len());
    let p = dists[rank - 1];
    if p > 0.0 && p.is_finite() {
        p
    } else {
        1.0
    }
}

/// Question lemmas without a leading interrogative, followed by the answer
/// lemmas.
pub fn combined_answer(question: &str, answer: &str, lemmas: &LemmaTable) -> Vec<String> {
    let q = preprocess(question, lemmas);
    let skip = usize::from(q.first().is_some_and(|t| INTERROGATIVES.contains(&t.surface.as_str())));
    q[skip..]
        .iter()
        .chain(&preprocess(answer, lemmas))
        .map(|t| t.lemma.clone())
        .collect()
}

impl Session {
    /// Estimates the WMD scale, builds the engine and asks the first
    /// question.
    pub fn start(ctx: &Retriever, id: impl Into<String>, corpus: Vec<Document>, query: impl Into<String>, config: SessionConfig) -> Result<Self, SessionError> {
        let corpus: Vec<Document> = corpus.into_iter().filter(|d| !d.is_empty()).collect();
        if corpus.is_empty() {
            return Err(SessionError::EmptyCorpus);
        }
        let mut engine = EngineState::from_corpus(&corpus, &ctx.table, &ctx.stopwords, config.engine()).map_err(SessionError::CorpusTooSmall)?;
        engine.settle(&ctx.table)?;
        let scale = wmd_scale(&corpus, &ctx.table);
        let mut s = Session {
            id: id.into(),
            query: query.into(),
            config,
            events: vec![SessionEvent::Started {
                documents: corpus.len(),
                wmd_scale: scale,
            }],
            corpus,
            engine: Some(engine),
            phase: Phase::AwaitingAnswer,
            pending: None,
            ranked: None,
            history: Vec::new(),
            used: UsedEntities::default(),
            wmd_scale: scale,
            result: Vec::new(),
        };
        s.drain_engine_events();
        s.ask_next(ctx)?;
        Ok(s)
    }

    pub fn question(&self) -> Option<&str> {
        self.pending.as_ref().map(|p| p.question.as_str())
    }

    pub fn turn(&self) -> usize {
        self.history.len()
    }

    pub fn delta(&self) -> f64 {
        self.config.delta
    }

    fn drain_engine_events(&mut self) {
        let turn = self.history.len();
        if let Some(e) = self.engine.as_mut() {
            for event in std::mem::take(&mut e.history) {
                self.events.push(SessionEvent::Engine { turn, event });
            }
        }
    }

    fn finish(&mut self, ctx: &Retriever, phase: Phase) {
        self.phase = phase;
        self.pending = None;
        self.result = self.rank_documents(ctx);
        self.events.push(SessionEvent::Finished { phase });
    }

    /// Remaining documents by WMD to all answers so far, ties in corpus
    /// order; documents without a distance go last.
    pub fn rank_documents(&self, ctx: &Retriever) -> Vec<RankedDoc> {
        let answers: Vec<String> = self
            .history
            .iter()
            .flat_map(|t| preprocess(&t.answer, &ctx.lemmas))
            .map(|t| t.lemma)
            .collect();
        let target = NBow::from_words(answers.iter().map(String::as_str), |w| ctx.table.contains(w)).ok();
        let mut ranked: Vec<(usize, RankedDoc)> = self
            .corpus
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let distance = match (&target, doc_nbow(d, &ctx.table)) {
                    (Some(t), Some(b)) => wmd_distance(&b, t, &ctx.table).ok(),
                    _ => None,
                };
                (
                    i,
                    RankedDoc {
                        doc_id: d.id.clone(),
                        text: d.raw_text.clone(),
                        distance,
                    },
                )
            })
            .collect();
        ranked.sort_by(|(ia, a), (ib, b)| match (a.distance, b.distance) {
            (Some(x), Some(y)) => x.total_cmp(&y).then(ia.cmp(ib)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => ia.cmp(ib),
        });
        ranked.into_iter().map(|(_, d)| d).collect()
    }

    /// Document whose mean embedding is closest to `word`.
    fn nearest_document(&self, ctx: &Retriever, word: &str) -> Option<String> {
        let v = ctx.table.get(word)?;
        let mut best: Option<(f64, &str)> = None;
        for d in &self.corpus {
            let Ok(mean) = ctx.table.embed_words(d.lemmas()) else {
                continue;
            };
            let dist = euclidean(v, &mean);
            if best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, &d.id));
            }
        }
        best.map(|(_, id)| id.to_string())
    }

    fn ask_next(&mut self, ctx: &Retriever) -> Result<(), SessionError> {
        let Some(engine) = self.engine.as_mut() else {
            self.finish(ctx, Phase::Exhausted);
            return Ok(());
        };
        let ranked = engine.rank()?;
        let selection = engine.select(&ranked, &self.corpus, &self.used);
        self.drain_engine_events();
        let cluster = ranked.cluster_id;
        self.ranked = Some(ranked);
        let (word, sentence, input) = match selection {
            Selection::Sentence { word, sentence } => {
                self.used.sentences.insert((sentence.doc_id.clone(), sentence.index));
                let input: Vec<String> = sentence.tokens.iter().map(|t| t.surface.clone()).collect();
                (word, Some(sentence), input)
            }
            Selection::WordOnly { word } => {
                self.used.words.insert(word.clone());
                let input = vec![word.clone()];
                (word, None, input)
            }
            Selection::Exhausted => {
                self.finish(ctx, Phase::Exhausted);
                return Ok(());
            }
        };
        let doc_id = match &sentence {
            Some(s) => s.doc_id.clone(),
            None => match self.nearest_document(ctx, &word) {
                Some(id) => id,
                None => {
                    self.finish(ctx, Phase::Exhausted);
                    return Ok(());
                }
            },
        };
        let mut tokens = ctx.generator.generate(&input, self.config.max_question_len)?;
        if tokens.is_empty() {
            tokens = vec![word.clone(), "?".into()];
        }
        let question = tokens.join(" ");
        self.events.push(SessionEvent::Asked {
            turn: self.history.len(),
            question: question.clone(),
        });
        self.pending = Some(PendingQuestion {
            question,
            source: Source {
                word,
                sentence: sentence.map(|s| SentenceRef {
                    text: s.text(),
                    doc_id: s.doc_id,
                    index: s.index,
                }),
                cluster,
                doc_id,
            },
        });
        self.phase = Phase::AwaitingAnswer;
        Ok(())
    }

    /// WMD between the source document and question-plus-answer, divided by
    /// the session's WMD scale. Does not change the session.
    pub fn score_answer(&self, ctx: &Retriever, answer: &str) -> Result<f64, SessionError> {
        if self.phase != Phase::AwaitingAnswer {
            return Err(SessionError::WrongPhase(self.phase));
        }
        let pending = self.pending.as_ref().ok_or(SessionError::WrongPhase(self.phase))?;
        if preprocess(answer, &ctx.lemmas).is_empty() {
            return Err(SessionError::EmptyAnswer);
        }
        let user = combined_answer(&pending.question, answer, &ctx.lemmas);
        let user = NBow::from_words(user.iter().map(String::as_str), |w| ctx.table.contains(w)).map_err(|_| SessionError::AnswerOutOfVocabulary)?;
        let doc = self
            .corpus
            .iter()
            .find(|d| d.id == pending.source.doc_id)
            .and_then(|d| doc_nbow(d, &ctx.table))
            .ok_or(SessionError::AnswerOutOfVocabulary)?;
        Ok(wmd_distance(&doc, &user, &ctx.table).map_err(|e| SessionError::Engine(e.into()))? / self.wmd_scale)
    }

    /// Cluster holding most of the document's token occurrences (lower id
    /// on ties); `None` when no token belongs to any cluster.
    fn affinity(engine: &EngineState, doc: &Document) -> Option<usize> {
        let mut owner: HashMap<&str, usize> = HashMap::new();
        for (c, cl) in engine.clusters.iter().enumerate() {
            for w in &cl.words {
                owner.insert(w, c);
            }
        }
        let mut counts = vec![0usize; engine.clusters.len()];
        for l in doc.lemmas() {
            if let Some(&c) = owner.get(l) {
                counts[c] += 1;
            }
        }
        let best = (0..counts.len()).rev().max_by_key(|&c| counts[c])?;
        (counts[best] > 0).then_some(best)
    }

    /// Applies one answer.
    pub fn submit_answer(&mut self, ctx: &Retriever, answer: &str) -> Result<TurnOutcome, SessionError> {
        let score = self.score_answer(ctx, answer)?;
        let pending = self.pending.clone().expect("awaiting answer implies a pending question");
        let source = pending.source.clone();
        let engine = self.engine.as_ref().expect("awaiting answer implies an engine");
        let affinities: Vec<Option<usize>> = self.corpus.iter().map(|d| Self::affinity(engine, d)).collect();
        let action;
        if score >= self.config.delta {
            action = Action::Kept;
            let mut keep: Vec<bool> = self
                .corpus
                .iter()
                .zip(&affinities)
                .map(|(d, a)| d.id == source.doc_id || *a == Some(source.cluster))
                .collect();
            if keep.iter().all(|k| *k) {
                keep = self.corpus.iter().map(|d| d.id == source.doc_id || d.lemmas().any(|l| l == source.word)).collect();
            }
            if keep.iter().all(|k| *k) {
                keep = self.corpus.iter().map(|d| d.id == source.doc_id).collect();
            }
            let mut flags = keep.into_iter();
            self.corpus.retain(|_| flags.next().unwrap_or(false));
        } else {
            let mut flags = affinities.iter();
            self.corpus.retain(|d| {
                let a = flags.next().copied().flatten();
                d.id != source.doc_id && a != Some(source.cluster)
            });
            let engine = self.engine.as_mut().expect("engine present");
            engine.remove_cluster(source.cluster);
            action = if self.corpus.len() <= self.config.result_size || engine.is_empty() {
                Action::Eliminated
            } else if engine.len() >= 2 && engine.needs_reclustering() && engine.reclusters < engine.config.max_reclusters {
                Action::Reclustered
            } else {
                Action::Terminated
            };
        }
        let turn = Turn {
            index: self.history.len(),
            question: pending.question,
            source,
            answer: answer.to_string(),
            wmd_score: score,
            action,
            remaining: self.corpus.len(),
        };
        self.history.push(turn.clone());
        self.events.push(SessionEvent::Answered {
            turn: turn.index,
            score,
            action,
            remaining: self.corpus.len(),
        });
        self.pending = None;

        if self.corpus.is_empty() {
            self.finish(ctx, Phase::Exhausted);
        } else if self.corpus.len() <= self.config.result_size {
            self.finish(ctx, Phase::Converged);
        } else {
            match action {
                Action::Kept => {
                    let mut config = self.config.engine();
                    config.max_reclusters = self.config.max_reclusters.saturating_sub(self.total_reclusters());
                    match EngineState::from_corpus(&self.corpus, &ctx.table, &ctx.stopwords, config) {
                        Ok(mut e) => {
                            e.settle(&ctx.table)?;
                            self.retire_engine();
                            self.engine = Some(e);
                            self.drain_engine_events();
                            self.ask_next(ctx)?;
                        }
                        Err(_) => self.finish(ctx, Phase::Exhausted),
                    }
                }
                Action::Reclustered => {
                    let e = self.engine.as_mut().expect("engine present");
                    e.settle(&ctx.table)?;
                    self.drain_engine_events();
                    self.ask_next(ctx)?;
                }
                Action::Eliminated => {
                    self.drain_engine_events();
                    self.finish(ctx, Phase::Exhausted);
                }
                Action::Terminated => {
                    self.drain_engine_events();
                    self.finish(ctx, Phase::Terminated);
                }
            }
        }
        Ok(TurnOutcome {
            turn,
            phase: self.phase,
            question: self.question().map(String::from),
            result: (self.phase != Phase::AwaitingAnswer).then(|| self.result.clone()),
        })
    }

    /// Reclusters done by engines this session has already replaced.
    fn total_reclusters(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, SessionEvent::Engine { event: EngineEvent::Recluster { .. }, .. }))
            .count()
    }

    fn retire_engine(&mut self) {
        self.drain_engine_events();
        self.engine = None;
    }

    /// Turn budget: recluster cap + initial clusters + corpus size.
    pub fn turn_bound(&self, initial_corpus: usize) -> usize {
        self.config.max_reclusters + self.config.initial_clusters + initial_corpus
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session serializes")
    }

    pub fn from_json(id: &str, text: &str) -> Result<Self, SessionError> {
        serde_json::from_str(text).map_err(|e| SessionError::Corrupt {
            id: id.to_string(),
            reason: e.to_string(),
        })
    }
}

/// One pretty-printed JSON file per session id.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| SessionError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, SessionError> {
        if !valid_id(id) {
            return Err(SessionError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial record.
    pub fn save(&self, session: &Session) -> Result<(), SessionError> {
        let path = self.path(&session.id)?;
        let tmp = path.with_extension("json.tmp");
        let io = |source| SessionError::Io {
            path: path.display().to_string(),
            source,
        };
        fs::write(&tmp, session.to_json()).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    pub fn load(&self, id: &str) -> Result<Session, SessionError> {
        let path = self.path(id)?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(SessionError::Missing(id.to_string())),
            Err(source) => {
                return Err(SessionError::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        };
        Session::from_json(id, &text)
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.exists()).unwrap_or(false)
    }

    /// Session ids present in the store, sorted.
    pub fn list(&self) -> Result<Vec<String>, SessionError> {
        let entries = fs::read_dir(&self.dir).map_err(|source| SessionError::Io {
            path: self.dir.display().to_string(),
            source,
        })?;
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".json")).map(String::from))
            .filter(|id| valid_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }
}
