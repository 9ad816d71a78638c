// Runs a scripted retrieval session over the toy corpus with a template
// question generator.

use std::sync::Arc;

use qir::corpus::{ingest, CorpusFormat, LemmaTable, StopWords};
use qir::embedding::EmbeddingTable;
use qir::qgen::{QgenError, QuestionGenerator};
use qir::session::{Phase, Retriever, Session, SessionConfig};

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

pub fn run_example() -> Session {
    let dir = env!("CARGO_MANIFEST_DIR");
    let lemmas = LemmaTable::bundled();
    let corpus = ingest(format!("{dir}/data/toy_corpus.jsonl"), CorpusFormat::Jsonl, &lemmas).expect("bundled corpus");
    let ctx = Retriever {
        table: EmbeddingTable::load(format!("{dir}/data/vectors.txt")).expect("bundled vectors"),
        lemmas,
        stopwords: StopWords::bundled(),
        generator: Arc::new(Template),
    };
    let config = SessionConfig { result_size: 1, delta: 0.5, ..SessionConfig::default() };
    let n = corpus.len();
    let mut session = Session::start(&ctx, "demo", corpus, "cough", config).expect("start");
    let answers = ["yes", "Fever and chills at night. A persistent cough with wheezing.", "cough"];
    let bound = session.turn_bound(n);
    while session.phase == Phase::AwaitingAnswer && session.turn() < bound {
        let answer = answers[session.turn().min(answers.len() - 1)];
        println!("Q: {}", session.question().unwrap_or(""));
        let outcome = session.submit_answer(&ctx, answer).expect("answer");
        println!("A: {answer}\n   {:?} (score {:.3}, {} left)", outcome.turn.action, outcome.turn.wmd_score, outcome.turn.remaining);
    }
    println!("{:?}", session.phase);
    for (i, d) in session.result.iter().enumerate() {
        println!("{}. [{}] {}", i + 1, d.doc_id, d.text);
    }
    session
}

#[allow(dead_code)]
fn main() {
    run_example();
}
