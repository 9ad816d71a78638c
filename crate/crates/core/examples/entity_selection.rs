// Clusters the toy corpus vocabulary, picks the most distinct cluster and
// the sentence to ask about.

use qir::corpus::{ingest, CorpusFormat, LemmaTable, StopWords};
use qir::embedding::EmbeddingTable;
use qir::entity::{EngineConfig, EngineState, Selection, UsedEntities};

pub fn run_example() -> Selection {
    let dir = env!("CARGO_MANIFEST_DIR");
    let table = EmbeddingTable::load(format!("{dir}/data/vectors.txt")).expect("bundled vectors");
    let corpus = ingest(format!("{dir}/data/toy_corpus.jsonl"), CorpusFormat::Jsonl, &LemmaTable::bundled()).expect("bundled corpus");
    let mut engine = EngineState::from_corpus(&corpus, &table, &StopWords::bundled(), EngineConfig::default()).expect("engine");
    engine.settle(&table).expect("settle");
    for (i, c) in engine.clusters.iter().enumerate() {
        println!("cluster {i}: {:?}", c.words);
    }
    let ranked = engine.rank().expect("rank");
    println!("ranked cluster {}: {:?}", ranked.cluster_id, ranked.words.iter().map(|w| &w.word).collect::<Vec<_>>());
    let selection = engine.select(&ranked, &corpus, &UsedEntities::default());
    match &selection {
        Selection::Sentence { word, sentence } => println!("ask about {word:?}: {}", sentence.text()),
        Selection::WordOnly { word } => println!("ask about {word:?} alone"),
        Selection::Exhausted => println!("nothing left to ask"),
    }
    selection
}

#[allow(dead_code)]
fn main() {
    run_example();
}
