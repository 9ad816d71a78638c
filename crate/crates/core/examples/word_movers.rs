// Word Mover's Distance between short phrases and the cluster relation
// matrix of three word groups.

use qir::embedding::EmbeddingTable;
use qir::transport::{crm, wmd, CrmAggregation, NBow};

pub fn run_example() -> Vec<f64> {
    let table = EmbeddingTable::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/vectors.txt")).expect("bundled vectors");
    let bow = |s: &'static str| NBow::from_words(s.split_whitespace(), |w| table.contains(w)).expect("embeddable");
    let query = bow("fever chills night");
    let mut out = Vec::new();
    for other in ["fever night", "cough wheezing", "rash itching"] {
        let (d, flow) = wmd(&query, &bow(other), &table).expect("wmd");
        println!("{other:>14}: {d:.4} (flow rows {:?})", flow.row_sums());
        out.push(d);
    }
    let groups: Vec<Vec<String>> = [vec!["fever", "chills"], vec!["cough", "wheezing"], vec!["rash", "itching"]]
        .iter()
        .map(|g| g.iter().map(|w| w.to_string()).collect())
        .collect();
    let m = crm(&groups, &table, CrmAggregation::Mean).expect("crm");
    for i in 0..m.n {
        println!("{:?}", m.row(i));
    }
    out
}

#[allow(dead_code)]
fn main() {
    run_example();
}
