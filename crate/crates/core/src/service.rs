//! HTTP API over sessions, and the [`Hub`] that owns them.
//!
//! The hub is the single entry point for starting, answering and viewing
//! sessions; the HTTP handlers and the terminal loop both go through it.
//! Turns on one session are serialized by a per-id lock, distinct sessions
//! run in parallel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::corpus::{ingest, Document, LemmaTable, StopWords};
use crate::embedding::EmbeddingTable;
use crate::entity::RankedList;
use crate::qgen::Seq2SeqModel;
use crate::session::{Phase, RankedDoc, Retriever, Session, SessionConfig, SessionError, SessionStore, Turn};
use crate::transport::Crm;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("session {0} already exists")]
    Exists(String),
    #[error("malformed request body: {0}")]
    BadRequest(String),
    #[error("failed to load {what}: {reason}")]
    Startup { what: &'static str, reason: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Session(e) => match e {
                SessionError::Missing(_) => StatusCode::NOT_FOUND,
                SessionError::WrongPhase(_) => StatusCode::CONFLICT,
                SessionError::EmptyAnswer | SessionError::AnswerOutOfVocabulary | SessionError::InvalidId(_) => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServiceError::Exists(_) => StatusCode::CONFLICT,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Startup { .. } | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Session(e) => match e {
                SessionError::Missing(_) => "not_found",
                SessionError::WrongPhase(_) => "wrong_phase",
                SessionError::EmptyAnswer => "empty_answer",
                SessionError::AnswerOutOfVocabulary => "answer_out_of_vocabulary",
                SessionError::InvalidId(_) => "invalid_id",
                SessionError::EmptyCorpus | SessionError::CorpusTooSmall(_) => "corpus_unusable",
                SessionError::Corrupt { .. } => "corrupt_session",
                SessionError::Io { .. } => "store_io",
                SessionError::Engine(_) => "engine",
                SessionError::Generator(_) => "generator",
            },
            ServiceError::Exists(_) => "exists",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Startup { .. } => "startup",
            ServiceError::Internal(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartResponse {
    pub session_id: String,
    pub state: Phase,
    pub question: Option<String>,
    pub result: Option<Vec<RankedDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub session_id: String,
    pub state: Phase,
    pub question: Option<String>,
    pub result: Option<Vec<RankedDoc>>,
    pub turn: Turn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub query: String,
    pub state: Phase,
    pub question: Option<String>,
    pub delta: f64,
    pub wmd_scale: f64,
    pub turns: usize,
    pub remaining: usize,
    pub documents: Vec<String>,
    pub crm: Option<Crm>,
    pub clusters: Vec<Vec<String>>,
    pub ranked_words: Option<RankedList>,
    pub history: Vec<Turn>,
    pub result: Vec<RankedDoc>,
}

impl SessionView {
    pub fn of(s: &Session) -> Self {
        SessionView {
            session_id: s.id.clone(),
            query: s.query.clone(),
            state: s.phase,
            question: s.question().map(String::from),
            delta: s.delta(),
            wmd_scale: s.wmd_scale,
            turns: s.turn(),
            remaining: s.corpus.len(),
            documents: s.corpus.iter().map(|d| d.id.clone()).collect(),
            crm: s.engine.as_ref().map(|e| e.crm.clone()),
            clusters: s.engine.as_ref().map(|e| e.clusters.iter().map(|c| c.words.clone()).collect()).unwrap_or_default(),
            ranked_words: s.ranked.clone(),
            history: s.history.clone(),
            result: s.result.clone(),
        }
    }
}

fn finished(s: &Session) -> Option<Vec<RankedDoc>> {
    (s.phase != Phase::AwaitingAnswer).then(|| s.result.clone())
}

fn startup(what: &'static str, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Startup { what, reason: e.to_string() }
}

pub struct Hub {
    ctx: Retriever,
    corpus: Vec<Document>,
    store: SessionStore,
    config: SessionConfig,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    creating: Mutex<()>,
}

impl Hub {
    pub fn new(ctx: Retriever, corpus: Vec<Document>, store: SessionStore, config: SessionConfig) -> Self {
        Hub {
            ctx,
            corpus,
            store,
            config,
            locks: Mutex::new(HashMap::new()),
            creating: Mutex::new(()),
        }
    }

    /// Loads every input named by `cfg` and opens the session store.
    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let lemmas = match &cfg.lemmas {
            Some(p) => LemmaTable::load(p).map_err(|e| startup("lemma table", e))?,
            None => LemmaTable::bundled(),
        };
        let stopwords = match &cfg.stopwords {
            Some(p) => StopWords::load(p).map_err(|e| startup("stop words", e))?,
            None => StopWords::bundled(),
        };
        let corpus = ingest(&cfg.corpus, cfg.corpus_format, &lemmas).map_err(|e| startup("corpus", e))?;
        let table = EmbeddingTable::load(&cfg.embeddings).map_err(|e| startup("embeddings", e))?;
        let model = Seq2SeqModel::load(&cfg.model).map_err(|e| startup("model", e))?;
        let store = SessionStore::open(&cfg.store)?;
        let ctx = Retriever {
            table,
            lemmas,
            stopwords,
            generator: Arc::new(model),
        };
        Ok(Hub::new(ctx, corpus, store, cfg.session_config()))
    }

    pub fn retriever(&self) -> &Retriever {
        &self.ctx
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    fn next_id(&self) -> Result<String, ServiceError> {
        let mut n = self.store.list()?.len() + 1;
        loop {
            let id = format!("s{n:04}");
            if !self.store.exists(&id) {
                return Ok(id);
            }
            n += 1;
        }
    }

    /// Starts a session over the configured corpus. Without an explicit id
    /// the next free `sNNNN` is used.
    pub fn start(&self, query: &str, id: Option<&str>) -> Result<Session, ServiceError> {
        let _guard = self.creating.lock().unwrap_or_else(|p| p.into_inner());
        let id = match id {
            Some(id) if self.store.exists(id) => return Err(ServiceError::Exists(id.to_string())),
            Some(id) => id.to_string(),
            None => self.next_id()?,
        };
        let session = Session::start(&self.ctx, id, self.corpus.clone(), query, self.config.clone())?;
        self.store.save(&session)?;
        Ok(session)
    }

    pub fn answer(&self, id: &str, answer: &str) -> Result<(Session, Turn), ServiceError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut session = self.store.load(id)?;
        let outcome = session.submit_answer(&self.ctx, answer)?;
        self.store.save(&session)?;
        Ok((session, outcome.turn))
    }

    pub fn session(&self, id: &str) -> Result<Session, ServiceError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        Ok(self.store.load(id)?)
    }

    pub fn view(&self, id: &str) -> Result<SessionView, ServiceError> {
        self.session(id).map(|s| SessionView::of(&s))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StartRequest {
    query: String,
    session_id: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRequest {
    answer: String,
}

fn body<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn start_session(State(hub): State<Arc<Hub>>, bytes: Bytes) -> Result<Json<StartResponse>, ServiceError> {
    let req: StartRequest = body(&bytes)?;
    let s = blocking(move || hub.start(&req.query, req.session_id.as_deref())).await?;
    Ok(Json(StartResponse {
        session_id: s.id.clone(),
        state: s.phase,
        question: s.question().map(String::from),
        result: finished(&s),
    }))
}

async fn answer_session(State(hub): State<Arc<Hub>>, Path(id): Path<String>, bytes: Bytes) -> Result<Json<AnswerResponse>, ServiceError> {
    let req: AnswerRequest = body(&bytes)?;
    let (s, turn) = blocking(move || hub.answer(&id, &req.answer)).await?;
    Ok(Json(AnswerResponse {
        session_id: s.id.clone(),
        state: s.phase,
        question: s.question().map(String::from),
        result: finished(&s),
        turn,
    }))
}

async fn get_session(State(hub): State<Arc<Hub>>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(blocking(move || hub.view(&id)).await?))
}

pub fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(start_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/answer", post(answer_session))
        .with_state(hub)
}

pub async fn serve(hub: Arc<Hub>, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    axum::serve(listener, router(hub)).await
}
