// Drives the HTTP API in-process: health check, a session start and one
// answer.

use std::sync::Arc;

use http_body_util::BodyExt;
use qir::corpus::{ingest, CorpusFormat, LemmaTable, StopWords};
use qir::embedding::EmbeddingTable;
use qir::qgen::{QgenError, QuestionGenerator};
use qir::service::{router, Hub};
use qir::session::{Retriever, SessionConfig, SessionStore};
use tower::ServiceExt;

struct Template;

impl QuestionGenerator for Template {
    fn generate(&self, input: &[String], max_len: usize) -> Result<Vec<String>, QgenError> {
        let mut q: Vec<String> = ["do", "you", "have"].iter().map(|s| s.to_string()).collect();
        q.extend(input.iter().cloned());
        q.push("?".into());
        q.truncate(max_len);
        Ok(q)
    }
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
    let req = axum::http::Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(axum::body::Body::from(if body.is_null() { String::new() } else { body.to_string() }))
        .expect("request");
    let resp = app.clone().oneshot(req).await.expect("infallible");
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).expect("json body"))
}

pub fn run_example() -> Vec<(u16, serde_json::Value)> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let lemmas = LemmaTable::bundled();
    let corpus = ingest(format!("{dir}/data/toy_corpus.jsonl"), CorpusFormat::Jsonl, &lemmas).expect("bundled corpus");
    let ctx = Retriever {
        table: EmbeddingTable::load(format!("{dir}/data/vectors.txt")).expect("bundled vectors"),
        lemmas,
        stopwords: StopWords::bundled(),
        generator: Arc::new(Template),
    };
    let store_dir = tempfile::tempdir().expect("temp dir");
    let store = SessionStore::open(store_dir.path()).expect("store");
    let app = router(Arc::new(Hub::new(ctx, corpus, store, SessionConfig::default())));
    let rt = tokio::runtime::Builder::new_current_thread().build().expect("runtime");
    rt.block_on(async {
        let mut out = vec![call(&app, "GET", "/health", serde_json::Value::Null).await];
        let started = call(&app, "POST", "/sessions", serde_json::json!({ "query": "cough" })).await;
        let id = started.1["session_id"].as_str().unwrap_or_default().to_string();
        out.push(started);
        out.push(call(&app, "POST", &format!("/sessions/{id}/answer"), serde_json::json!({ "answer": "yes" })).await);
        out.push(call(&app, "GET", &format!("/sessions/{id}"), serde_json::Value::Null).await);
        for (status, body) in &out {
            println!("{status} {body}");
        }
        out
    })
}

#[allow(dead_code)]
fn main() {
    run_example();
}
