// Clusters the labelled mini-corpus with every algorithm and scores each
// with BCubed F.

use qir::clustering::{bakeoff, BakeoffReport};
use qir::corpus::{load_labelled, preprocess, LemmaTable};
use qir::embedding::EmbeddingTable;

pub fn run_example() -> BakeoffReport {
    let dir = env!("CARGO_MANIFEST_DIR");
    let table = EmbeddingTable::load(format!("{dir}/data/vectors.txt")).expect("bundled vectors");
    let items = load_labelled(format!("{dir}/data/mini_labelled.jsonl")).expect("bundled items");
    let lemmas = LemmaTable::bundled();
    let (points, labels): (Vec<Vec<f64>>, Vec<String>) = items
        .iter()
        .map(|it| (table.embed_phrase(&preprocess(&it.text, &lemmas)).expect("embeddable"), it.category.clone()))
        .unzip();
    let report = bakeoff(&points, &labels, 3, 0).expect("bake-off");
    print!("{}", report.to_table());
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
