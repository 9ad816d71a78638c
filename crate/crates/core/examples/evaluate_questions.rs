// Scores generated questions with BLEU-1/2, METEOR, perplexity and
// accuracy.

use qir::corpus::StopWords;
use qir::qgen::train::{train, Hyperparams, TrainMode};
use qir::qgen::{build_vocab, load_training_corpus, tokenize, Seq2SeqModel};
use qir::texteval::{bleu, evaluate_model, meteor, EvalReport};

pub fn run_example() -> EvalReport {
    let hyp = tokenize("the cat sat");
    let reference = tokenize("the cat sat down");
    println!("BLEU-1 {:.4}", bleu(&hyp, &[reference.clone()], 1).expect("bleu"));
    println!("METEOR {:.4}", meteor(&hyp, &reference, None));

    let pairs = load_training_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_pairs.jsonl")).expect("bundled pairs");
    let stop = StopWords::bundled();
    let mut model = Seq2SeqModel::new(build_vocab(&pairs, 1), 16, 24, 3);
    let hyper = Hyperparams { epochs: 30, learning_rate: 0.3, seed: 3, ..Hyperparams::default() };
    train(&mut model, &pairs, TrainMode::Sentence, &hyper, &stop, |_| {}).expect("training");
    let (report, predictions) = evaluate_model(&model, &pairs, TrainMode::Sentence, &stop, hyper.max_words, 20, None).expect("evaluation");
    for (p, pair) in predictions.iter().zip(&pairs) {
        println!("{:>40} | {}", pair.question.join(" "), p.join(" "));
    }
    print!("{}", report.to_table("toy pairs"));
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
