// Trains the attention seq2seq generator on the bundled answer/question
// pairs until it reproduces them, then asks it a question.

use qir::corpus::StopWords;
use qir::qgen::train::{train, Hyperparams, TrainMode, TrainReport};
use qir::qgen::{build_vocab, load_training_corpus, Seq2SeqModel};

pub fn run_example() -> (Seq2SeqModel, TrainReport) {
    let pairs = load_training_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_pairs.jsonl")).expect("bundled pairs");
    let mut model = Seq2SeqModel::new(build_vocab(&pairs, 1), 32, 64, 1);
    let hyper = Hyperparams {
        epochs: 200,
        learning_rate: 0.3,
        patience: 10,
        seed: 1,
        target_perplexity: Some(1.01),
        ..Hyperparams::default()
    };
    let report = train(&mut model, &pairs, TrainMode::Sentence, &hyper, &StopWords::bundled(), |e| {
        if e.epoch % 10 == 0 {
            println!("epoch {} loss {:.4} ppl {:.4}", e.epoch, e.loss, e.perplexity);
        }
    })
    .expect("training");
    let last = report.last().expect("at least one epoch");
    println!("{} instances, {} epochs, eval ppl {:?}", report.instances, report.epochs.len(), last.eval_perplexity);
    let q = model.generate_question(&pairs[2].answer, 20).expect("generation");
    println!("{} -> {}", pairs[2].answer.join(" "), q.tokens.join(" "));
    (model, report)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
