// Loads the bundled word vectors and projects them onto two principal
// components.

use qir::embedding::{euclidean, pca_fit, EmbeddingTable};

pub fn run_example() -> Vec<f64> {
    let table = EmbeddingTable::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/vectors.txt")).expect("bundled vectors");
    let rows: Vec<Vec<f64>> = table.words().iter().map(|w| table.get(w).unwrap().to_vec()).collect();
    let pca = pca_fit(&rows, 2).expect("enough rows");
    println!("{} words, dim {} -> {}", table.len(), pca.input_dim, pca.output_dim);
    println!("explained variance {:?}", pca.explained_variance);
    for pair in [["fever", "chills"], ["fever", "rash"]] {
        if let (Some(a), Some(b)) = (table.get(pair[0]), table.get(pair[1])) {
            println!("{} ~ {}: {:.3}", pair[0], pair[1], euclidean(a, b));
        }
    }
    pca.explained_variance
}

#[allow(dead_code)]
fn main() {
    run_example();
}
