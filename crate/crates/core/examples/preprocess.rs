// Normalizes raw text and loads the bundled toy corpus.

use qir::corpus::{ingest, preprocess, split_sentences, CorpusFormat, LemmaTable};

pub fn run_example() -> (usize, usize) {
    let lemmas = LemmaTable::bundled();
    let raw = "Fevers at NIGHT, 3 days ago! Coughing with wheezing.";
    for s in split_sentences(raw) {
        let lemmas: Vec<String> = preprocess(&s, &lemmas).into_iter().map(|t| t.lemma).collect();
        println!("{s:?} -> {lemmas:?}");
    }
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.jsonl");
    let corpus = ingest(path, CorpusFormat::Jsonl, &lemmas).expect("bundled corpus");
    let sentences = corpus.iter().map(|d| d.sentences.len()).sum();
    println!("{} documents, {sentences} sentences", corpus.len());
    (corpus.len(), sentences)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
