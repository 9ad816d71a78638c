//! SGD training in sentence or word mode.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{QgenError, Seq2SeqModel, TrainingPair, EOS};
use crate::corpus::StopWords;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// The whole answer is the source.
    Sentence,
    /// Each selected content word of the answer is a separate source.
    Word,
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(TrainMode::Sentence),
            "word" => Ok(TrainMode::Word),
            other => Err(format!("unknown training mode {other:?} (expected sentence or word)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    /// Epochs without a new best loss before the learning rate halves.
    pub patience: usize,
    /// Words per answer in word mode.
    pub max_words: usize,
    pub seed: u64,
    /// When set, the model is re-evaluated after every epoch and training
    /// stops once that perplexity drops below this value.
    pub target_perplexity: Option<f64>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 20,
            learning_rate: 0.1,
            clip_norm: 5.0,
            patience: 3,
            max_words: 5,
            seed: 0,
            target_perplexity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean negative log-likelihood per target token.
    pub loss: f64,
    pub perplexity: f64,
    pub accuracy: f64,
    pub learning_rate: f64,
    /// Perplexity of the end-of-epoch parameters, without updates.
    pub eval_perplexity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: TrainMode,
    pub instances: usize,
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

/// Up to `max_words` non-stop-words of `answer`, by descending frequency,
/// ties by first occurrence.
pub fn content_words(answer: &[String], stopwords: &StopWords, max_words: usize) -> Vec<String> {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for (pos, w) in answer.iter().enumerate() {
        if stopwords.contains(w) || !w.chars().any(char::is_alphanumeric) {
            continue;
        }
        counts.entry(w.as_str()).or_insert((0, pos)).0 += 1;
    }
    let mut ranked: Vec<(&str, usize, usize)> = counts.into_iter().map(|(w, (c, p))| (w, c, p)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.into_iter().take(max_words).map(|(w, _, _)| w.to_string()).collect()
}

pub fn instances(corpus: &[TrainingPair], mode: TrainMode, stopwords: &StopWords, max_words: usize) -> Vec<TrainingInstance> {
    let mut out = Vec::new();
    for pair in corpus {
        match mode {
            TrainMode::Sentence => out.push(TrainingInstance {
                source: pair.answer.clone(),
                target: pair.question.clone(),
            }),
            TrainMode::Word => {
                for w in content_words(&pair.answer, stopwords, max_words) {
                    out.push(TrainingInstance {
                        source: vec![w],
                        target: pair.question.clone(),
                    });
                }
            }
        }
    }
    out
}

fn clip(grads: &mut [super::tape::Tensor], max_norm: f64) {
    let norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = max_norm / norm;
        grads.iter_mut().for_each(|g| g.data.iter_mut().for_each(|x| *x *= k));
    }
}

/// Trains `model` in place with per-instance SGD and teacher forcing. The
/// instance order is reshuffled every epoch from `hyper.seed`; the learning
/// rate halves after `patience` epochs without a new best mean loss.
pub fn train(
    model: &mut Seq2SeqModel,
    corpus: &[TrainingPair],
    mode: TrainMode,
    hyper: &Hyperparams,
    stopwords: &StopWords,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainReport, QgenError> {
    if corpus.is_empty() {
        return Err(QgenError::EmptyCorpus);
    }
    if model.vocab().is_empty() {
        return Err(QgenError::EmptyVocab);
    }
    let data: Vec<(Vec<usize>, Vec<usize>)> = instances(corpus, mode, stopwords, hyper.max_words)
        .into_iter()
        .map(|inst| {
            let mut tgt = model.vocab().encode(&inst.target);
            tgt.push(EOS);
            (model.vocab().encode(&inst.source), tgt)
        })
        .collect();
    if data.is_empty() {
        return Err(QgenError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut lr = hyper.learning_rate;
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut report = TrainReport {
        mode,
        instances: data.len(),
        epochs: Vec::new(),
    };
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut tokens = 0usize;
        let mut correct = 0usize;
        for (k, &i) in order.iter().enumerate() {
            let (src, tgt) = &data[i];
            let mut grads = model.zero_grads();
            let (loss, hits) = model.loss_and_grad(src, tgt, &mut grads)?;
            if !loss.is_finite() {
                return Err(QgenError::NonFiniteLoss {
                    epoch,
                    instance: k,
                    loss,
                    learning_rate: lr,
                });
            }
            clip(&mut grads, hyper.clip_norm);
            for (p, g) in model.params_mut().iter_mut().zip(&grads) {
                p.data.iter_mut().zip(&g.data).for_each(|(w, d)| *w -= lr * d);
            }
            total += loss;
            tokens += tgt.len();
            correct += hits;
        }
        let mean = total / tokens as f64;
        let eval_perplexity = match hyper.target_perplexity {
            Some(_) => Some(mean_loss(model, &data)?.0.exp()),
            None => None,
        };
        let stats = EpochStats {
            epoch,
            loss: mean,
            perplexity: mean.exp(),
            accuracy: correct as f64 / tokens as f64,
            learning_rate: lr,
            eval_perplexity,
        };
        on_epoch(&stats);
        let done = matches!((hyper.target_perplexity, eval_perplexity), (Some(t), Some(p)) if p < t);
        report.epochs.push(stats);
        if done {
            break;
        }
        if mean < best {
            best = mean;
            stale = 0;
        } else {
            stale += 1;
            if stale >= hyper.patience {
                lr *= 0.5;
                stale = 0;
            }
        }
    }
    Ok(report)
}

fn mean_loss(model: &Seq2SeqModel, data: &[(Vec<usize>, Vec<usize>)]) -> Result<(f64, f64), QgenError> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    let mut correct = 0usize;
    for (src, tgt) in data {
        let (loss, hits) = model.loss(src, tgt)?;
        total += loss;
        tokens += tgt.len();
        correct += hits;
    }
    if tokens == 0 {
        return Err(QgenError::EmptyCorpus);
    }
    Ok((total / tokens as f64, correct as f64 / tokens as f64))
}

/// Teacher-forced loss, perplexity and accuracy of `model` on `corpus`
/// without updating anything.
pub fn evaluate(model: &Seq2SeqModel, corpus: &[TrainingPair], mode: TrainMode, stopwords: &StopWords, max_words: usize) -> Result<EpochStats, QgenError> {
    let data: Vec<(Vec<usize>, Vec<usize>)> = instances(corpus, mode, stopwords, max_words)
        .into_iter()
        .map(|inst| {
            let mut tgt = model.vocab().encode(&inst.target);
            tgt.push(EOS);
            (model.vocab().encode(&inst.source), tgt)
        })
        .collect();
    let (mean, accuracy) = mean_loss(model, &data)?;
    Ok(EpochStats {
        epoch: 0,
        loss: mean,
        perplexity: mean.exp(),
        accuracy,
        learning_rate: 0.0,
        eval_perplexity: Some(mean.exp()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn content_words_rank_by_frequency() {
        let sw = StopWords::parse("the\nis\n");
        let got = content_words(&words("the pain is sharp pain near the chest"), &sw, 2);
        assert_eq!(got, vec!["pain", "sharp"]);
    }

    #[test]
    fn word_mode_expands_answers() {
        let sw = StopWords::parse("a\n");
        let corpus = vec![TrainingPair {
            answer: words("a fever b"),
            question: words("q ?"),
        }];
        let inst = instances(&corpus, TrainMode::Word, &sw, 5);
        assert_eq!(inst.len(), 2);
        assert_eq!(inst[0].source, vec!["fever"]);
        assert_eq!(inst[1].source, vec!["b"]);
    }
}
