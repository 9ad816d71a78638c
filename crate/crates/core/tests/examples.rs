#[allow(dead_code)]
mod preprocess {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/preprocess.rs"));
}
#[allow(dead_code)]
mod embeddings_pca {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/embeddings_pca.rs"));
}
#[allow(dead_code)]
mod cluster_bakeoff {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/cluster_bakeoff.rs"));
}
#[allow(dead_code)]
mod word_movers {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/word_movers.rs"));
}
#[allow(dead_code)]
mod entity_selection {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/entity_selection.rs"));
}
#[allow(dead_code)]
mod train_questions {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/train_questions.rs"));
}
#[allow(dead_code)]
mod evaluate_questions {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/evaluate_questions.rs"));
}
#[allow(dead_code)]
mod interactive_session {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/interactive_session.rs"));
}
#[allow(dead_code)]
mod http_api {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/http_api.rs"));
}

use qir::clustering::Algorithm;
use qir::entity::Selection;
use qir::session::Phase;

#[test]
fn preprocess_example() {
    let (docs, sentences) = preprocess::run_example();
    assert_eq!(docs, 12);
    assert!(sentences >= docs);
}

#[test]
fn embeddings_pca_example() {
    let v = embeddings_pca::run_example();
    assert_eq!(v.len(), 2);
    assert!(v[0] >= v[1] && v[1] >= 0.0);
}

#[test]
fn cluster_bakeoff_example() {
    let report = cluster_bakeoff::run_example();
    assert_eq!(report.rows.len(), 4);
    let best = report.rows.iter().map(|r| r.score.f1).fold(0.0, f64::max);
    assert!(report.score(Algorithm::KMeans).unwrap().f1 >= best - 0.02);
}

#[test]
fn word_movers_example() {
    let d = word_movers::run_example();
    assert!(d[0] < d[1] && d[0] < d[2], "{d:?}");
}

#[test]
fn entity_selection_example() {
    assert!(!matches!(entity_selection::run_example(), Selection::Exhausted));
}

#[test]
fn train_questions_example() {
    let (model, report) = train_questions::run_example();
    assert!(report.last().unwrap().eval_perplexity.unwrap() < 1.1);
    assert!(model.is_finite());
}

#[test]
fn evaluate_questions_example() {
    let r = evaluate_questions::run_example();
    assert_eq!(r.instances, 5);
    assert!((0.0..=1.0).contains(&r.bleu1) && (0.0..=1.0).contains(&r.meteor));
    assert!(r.perplexity >= 1.0);
}

#[test]
fn interactive_session_example() {
    let s = interactive_session::run_example();
    assert_ne!(s.phase, Phase::AwaitingAnswer);
    assert!(!s.result.is_empty());
}

#[test]
fn http_api_example() {
    let out = http_api::run_example();
    assert!(out.iter().all(|(status, _)| *status == 200), "{out:?}");
    assert_eq!(out[3].1["session_id"], out[1].1["session_id"]);
}
