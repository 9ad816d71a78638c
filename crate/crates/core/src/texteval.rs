//! BLEU, METEOR and the perplexity/accuracy report for generated questions.
//!
//! Scores are kept in [0, 1]; the text table multiplies BLEU and METEOR by
//! 100 for display.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StopWords;
use crate::qgen::train::{evaluate, instances};
use crate::qgen::{QgenError, Seq2SeqModel, TrainMode, TrainingPair};

/// Replaces a zero n-gram precision above order 1 before taking logs.
pub const BLEU_EPSILON: f64 = 1e-9;
pub const METEOR_RECALL_WEIGHT: f64 = 9.0;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("hypothesis is empty")]
    EmptyHypothesis,
    #[error("no non-empty reference")]
    EmptyReference,
    #[error("{predictions} predictions for {references} references")]
    Misaligned { predictions: usize, references: usize },
    #[error("failed to read {0}")]
    Io(String),
    #[error("model evaluation failed: {0}")]
    Model(String),
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped n-gram matches and total hypothesis n-grams.
fn clipped(hyp: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
    let h = ngrams(hyp, n);
    let ref_counts: Vec<_> = refs.iter().map(|r| ngrams(r, n)).collect();
    let mut matched = 0;
    for (g, c) in &h {
        let max_ref = ref_counts.iter().map(|rc| rc.get(g).copied().unwrap_or(0)).max().unwrap_or(0);
        matched += (*c).min(max_ref);
    }
    (matched, hyp.len().saturating_sub(n - 1))
}

/// Reference length closest to `hyp_len`; the shorter one on ties.
fn closest_ref_len(hyp_len: usize, refs: &[Vec<String>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

fn combine(matches: &[(usize, usize)], hyp_len: usize, ref_len: usize) -> f64 {
    if matches[0].0 == 0 {
        return 0.0;
    }
    let orders: Vec<f64> = matches
        .iter()
        .filter(|(_, total)| *total > 0)
        .map(|&(m, total)| if m == 0 { BLEU_EPSILON } else { m as f64 / total as f64 })
        .collect();
    let log_mean = orders.iter().map(|p| p.ln()).sum::<f64>() / orders.len() as f64;
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    bp * log_mean.exp()
}

fn check(hyp: &[String], refs: &[Vec<String>]) -> Result<(), EvalError> {
    if hyp.is_empty() {
        return Err(EvalError::EmptyHypothesis);
    }
    if refs.iter().all(Vec::is_empty) {
        return Err(EvalError::EmptyReference);
    }
    Ok(())
}

/// Cumulative BLEU up to `max_n` with uniform weights, clipped counts
/// against the per-reference maximum and the usual brevity penalty. No
/// unigram overlap gives exactly 0; orders the hypothesis is too short to
/// contain are left out of the mean.
pub fn bleu(hyp: &[String], refs: &[Vec<String>], max_n: usize) -> Result<f64, EvalError> {
    check(hyp, refs)?;
    let refs: Vec<Vec<String>> = refs.iter().filter(|r| !r.is_empty()).cloned().collect();
    let matches: Vec<(usize, usize)> = (1..=max_n.max(1)).map(|n| clipped(hyp, &refs, n)).collect();
    Ok(combine(&matches, hyp.len(), closest_ref_len(hyp.len(), &refs)))
}

/// Corpus-level BLEU: counts and lengths are summed before combining.
pub fn corpus_bleu(hyps: &[Vec<String>], refs: &[Vec<Vec<String>>], max_n: usize) -> Result<f64, EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::Misaligned {
            predictions: hyps.len(),
            references: refs.len(),
        });
    }
    let max_n = max_n.max(1);
    let mut totals = vec![(0, 0); max_n];
    let (mut c, mut r) = (0, 0);
    for (h, rs) in hyps.iter().zip(refs) {
        check(h, rs)?;
        let rs: Vec<Vec<String>> = rs.iter().filter(|x| !x.is_empty()).cloned().collect();
        for (n, t) in totals.iter_mut().enumerate() {
            let (m, total) = clipped(h, &rs, n + 1);
            t.0 += m;
            t.1 += total;
        }
        c += h.len();
        r += closest_ref_len(h.len(), &rs);
    }
    Ok(combine(&totals, c, r))
}

// ---------------------------------------------------------------------------

/// Porter stemmer (the original 1980 rule set).
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if w.len() <= 2 || !w.is_ascii() {
        return w;
    }
    porter::stem(&w)
}

mod porter {
    fn is_consonant(b: &[u8], i: usize) -> bool {
        match b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !is_consonant(b, i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in `b`.
    fn measure(b: &[u8]) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < b.len() && is_consonant(b, i) {
            i += 1;
        }
        loop {
            while i < b.len() && !is_consonant(b, i) {
                i += 1;
            }
            if i >= b.len() {
                return m;
            }
            while i < b.len() && is_consonant(b, i) {
                i += 1;
            }
            m += 1;
        }
    }

    fn has_vowel(b: &[u8]) -> bool {
        (0..b.len()).any(|i| !is_consonant(b, i))
    }

    fn double_consonant(b: &[u8]) -> bool {
        let n = b.len();
        n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b, n - 1)
    }

    /// consonant-vowel-consonant ending, last not w, x or y.
    fn cvc(b: &[u8]) -> bool {
        let n = b.len();
        n >= 3
            && is_consonant(b, n - 3)
            && !is_consonant(b, n - 2)
            && is_consonant(b, n - 1)
            && !matches!(b[n - 1], b'w' | b'x' | b'y')
    }

    fn replace_if(w: &mut Vec<u8>, suffix: &str, repl: &str, min_m: usize) -> bool {
        let s = suffix.as_bytes();
        if w.ends_with(s) {
            let stem_len = w.len() - s.len();
            if measure(&w[..stem_len]) > min_m.saturating_sub(1) || min_m == 0 {
                w.truncate(stem_len);
                w.extend_from_slice(repl.as_bytes());
            }
            return true;
        }
        false
    }

    pub fn stem(word: &str) -> String {
        let mut w = word.as_bytes().to_vec();
        // 1a
        if w.ends_with(b"sses") || w.ends_with(b"ies") {
            w.truncate(w.len() - 2);
        } else if !w.ends_with(b"ss") && w.ends_with(b"s") {
            w.pop();
        }
        // 1b
        let mut extra = false;
        if w.ends_with(b"eed") {
            if measure(&w[..w.len() - 3]) > 0 {
                w.pop();
            }
        } else if w.ends_with(b"ed") && has_vowel(&w[..w.len() - 2]) {
            w.truncate(w.len() - 2);
            extra = true;
        } else if w.ends_with(b"ing") && has_vowel(&w[..w.len() - 3]) {
            w.truncate(w.len() - 3);
            extra = true;
        }
        if extra {
            if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
                w.push(b'e');
            } else if double_consonant(&w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
                w.pop();
            } else if measure(&w) == 1 && cvc(&w) {
                w.push(b'e');
            }
        }
        // 1c
        if w.ends_with(b"y") && has_vowel(&w[..w.len() - 1]) {
            let n = w.len();
            w[n - 1] = b'i';
        }
        // 2
        const STEP2: [(&str, &str); 20] = [
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ];
        for (s, r) in STEP2 {
            if replace_if(&mut w, s, r, 1) {
                break;
            }
        }
        // 3
        const STEP3: [(&str, &str); 7] = [
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        for (s, r) in STEP3 {
            if replace_if(&mut w, s, r, 1) {
                break;
            }
        }
        // 4
        const STEP4: [&str; 19] = [
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou", "ism", "ate",
            "iti", "ous", "ive", "ize",
        ];
        let mut longest: Option<&str> = None;
        for s in STEP4 {
            if w.ends_with(s.as_bytes()) && longest.is_none_or(|l| s.len() > l.len()) {
                longest = Some(s);
            }
        }
        if let Some(s) = longest {
            let stem_len = w.len() - s.len();
            let ok = measure(&w[..stem_len]) > 1
                && (s != "ion" || (stem_len > 0 && matches!(w[stem_len - 1], b's' | b't')));
            if ok {
                w.truncate(stem_len);
            }
        }
        // 5a
        if w.ends_with(b"e") {
            let stem = &w[..w.len() - 1];
            let m = measure(stem);
            if m > 1 || (m == 1 && !cvc(stem)) {
                w.pop();
            }
        }
        // 5b
        if measure(&w) > 1 && double_consonant(&w) && w.ends_with(b"l") {
            w.pop();
        }
        String::from_utf8(w).expect("ascii in, ascii out")
    }
}

/// Groups of interchangeable words, one group per line separated by
/// whitespace or commas.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    group_of: HashMap<String, Vec<usize>>,
}

impl SynonymTable {
    pub fn parse(text: &str) -> Self {
        let mut group_of: HashMap<String, Vec<usize>> = HashMap::new();
        for (g, line) in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).enumerate() {
            for w in line.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()) {
                group_of.entry(w.to_lowercase()).or_default().push(g);
            }
        }
        SynonymTable { group_of }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self::parse(&text))
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        match (self.group_of.get(a), self.group_of.get(b)) {
            (Some(ga), Some(gb)) => ga.iter().any(|g| gb.contains(g)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorDetail {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Aligns hypothesis tokens left to right, each stage (exact, stem,
/// synonym) only touching tokens the earlier stages left unaligned, and
/// returns ref position per hyp position.
fn align(hyp: &[String], reference: &[String], synonyms: Option<&SynonymTable>) -> Vec<Option<usize>> {
    let mut hyp_to_ref = vec![None; hyp.len()];
    let mut ref_used = vec![false; reference.len()];
    let hyp_stems: Vec<String> = hyp.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|w| stem(w)).collect();
    let stages: [&dyn Fn(usize, usize) -> bool; 3] = [
        &|i, j| hyp[i] == reference[j],
        &|i, j| hyp_stems[i] == ref_stems[j],
        &|i, j| synonyms.is_some_and(|s| s.are_synonyms(&hyp[i], &reference[j])),
    ];
    for matches in stages {
        for i in 0..hyp.len() {
            if hyp_to_ref[i].is_some() {
                continue;
            }
            if let Some(j) = (0..reference.len()).find(|&j| !ref_used[j] && matches(i, j)) {
                hyp_to_ref[i] = Some(j);
                ref_used[j] = true;
            }
        }
    }
    hyp_to_ref
}

pub fn meteor_detail(hyp: &[String], reference: &[String], synonyms: Option<&SynonymTable>) -> MeteorDetail {
    let alignment = align(hyp, reference, synonyms);
    let pairs: Vec<(usize, usize)> = alignment.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    let m = pairs.len();
    if m == 0 {
        return MeteorDetail {
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            fmean: 0.0,
            penalty: 0.0,
            score: 0.0,
        };
    }
    let mut chunks = 1;
    for w in pairs.windows(2) {
        if !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1) {
            chunks += 1;
        }
    }
    let precision = m as f64 / hyp.len() as f64;
    let recall = m as f64 / reference.len() as f64;
    let fmean = (1.0 + METEOR_RECALL_WEIGHT) * precision * recall / (recall + METEOR_RECALL_WEIGHT * precision);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    MeteorDetail {
        matches: m,
        chunks,
        precision,
        recall,
        fmean,
        penalty,
        score: fmean * (1.0 - penalty),
    }
}

/// Unigram F-mean (recall weighted 9:1) times one minus the fragmentation
/// penalty 0.5·(chunks/matches)³.
pub fn meteor(hyp: &[String], reference: &[String], synonyms: Option<&SynonymTable>) -> f64 {
    meteor_detail(hyp, reference, synonyms).score
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meteor: f64,
    pub bleu1: f64,
    pub bleu2: f64,
    pub perplexity: f64,
    pub accuracy: f64,
    pub instances: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned table with METEOR and BLEU on a 0-100 scale.
    pub fn to_table(&self, label: &str) -> String {
        let header = format!(
            "{:<16} {:>8} {:>8} {:>8} {:>11} {:>9}",
            "Model", "METEOR", "BLEU-1", "BLEU-2", "Perplexity", "Accuracy"
        );
        let row = format!(
            "{:<16} {:>8.2} {:>8.2} {:>8.2} {:>11.3} {:>9.3}",
            label,
            self.meteor * 100.0,
            self.bleu1 * 100.0,
            self.bleu2 * 100.0,
            self.perplexity,
            self.accuracy
        );
        format!("{header}\n{row}\n")
    }
}

/// Corpus BLEU-1/2 and mean METEOR of `predictions` against single
/// references, plus the model's teacher-forced perplexity (exp of mean
/// NLL) and next-token accuracy.
pub fn summarize(
    predictions: &[Vec<String>],
    references: &[Vec<String>],
    mean_nll: f64,
    accuracy: f64,
    synonyms: Option<&SynonymTable>,
) -> Result<EvalReport, EvalError> {
    if predictions.len() != references.len() {
        return Err(EvalError::Misaligned {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    let refs: Vec<Vec<Vec<String>>> = references.iter().map(|r| vec![r.clone()]).collect();
    // an empty prediction scores zero rather than failing the whole report
    let scorable: Vec<usize> = (0..predictions.len()).filter(|&i| !predictions[i].is_empty()).collect();
    let (bleu1, bleu2) = if scorable.is_empty() {
        (0.0, 0.0)
    } else {
        let h: Vec<Vec<String>> = scorable.iter().map(|&i| predictions[i].clone()).collect();
        let r: Vec<Vec<Vec<String>>> = scorable.iter().map(|&i| refs[i].clone()).collect();
        let missing = predictions.len() - scorable.len();
        let scale = |b: f64| b * scorable.len() as f64 / (scorable.len() + missing) as f64;
        (scale(corpus_bleu(&h, &r, 1)?), scale(corpus_bleu(&h, &r, 2)?))
    };
    let meteor_mean = if predictions.is_empty() {
        0.0
    } else {
        predictions.iter().zip(references).map(|(p, r)| meteor(p, r, synonyms)).sum::<f64>() / predictions.len() as f64
    };
    Ok(EvalReport {
        meteor: meteor_mean,
        bleu1,
        bleu2,
        perplexity: mean_nll.exp(),
        accuracy,
        instances: predictions.len(),
    })
}

/// Greedy generations of `model` for every instance of `corpus` in `mode`,
/// scored against the instance's question, together with the model's
/// teacher-forced perplexity and accuracy on the same instances.
pub fn evaluate_model(
    model: &Seq2SeqModel,
    corpus: &[TrainingPair],
    mode: TrainMode,
    stopwords: &StopWords,
    max_words: usize,
    max_len: usize,
    synonyms: Option<&SynonymTable>,
) -> Result<(EvalReport, Vec<Vec<String>>), EvalError> {
    let model_err = |e: QgenError| EvalError::Model(e.to_string());
    let stats = evaluate(model, corpus, mode, stopwords, max_words).map_err(model_err)?;
    let mut predictions = Vec::new();
    let mut references = Vec::new();
    for inst in instances(corpus, mode, stopwords, max_words) {
        predictions.push(model.generate_question(&inst.source, max_len).map_err(model_err)?.tokens);
        references.push(inst.target);
    }
    let report = summarize(&predictions, &references, stats.loss, stats.accuracy, synonyms)?;
    Ok((report, predictions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn bleu_hand_cases() {
        let b = bleu(&toks("the cat sat"), &[toks("the cat sat down")], 1).unwrap();
        assert!((b - (1.0f64 - 4.0 / 3.0).exp()).abs() < 1e-12);
        assert_eq!(bleu(&toks("a b c"), &[toks("a b c")], 2).unwrap(), 1.0);
        assert_eq!(bleu(&toks("x y"), &[toks("a b c")], 1).unwrap(), 0.0);
    }

    #[test]
    fn bleu_clips_repeats() {
        // 2 of the 4 "the" are matched
        let b = bleu(&toks("the the the the"), &[toks("the cat the mat")], 1).unwrap();
        assert!((b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn meteor_hand_cases() {
        let m = meteor(&toks("a b c"), &toks("a b c"), None);
        assert!((m - (1.0 - 0.5 / 27.0)).abs() < 1e-12);
        assert_eq!(meteor(&toks("x"), &toks("y"), None), 0.0);
        let d = meteor_detail(&toks("cats"), &toks("cat"), None);
        assert_eq!(d.matches, 1);
        let syn = SynonymTable::parse("ache pain\n");
        assert_eq!(meteor_detail(&toks("ache"), &toks("pain"), Some(&syn)).matches, 1);
        assert_eq!(meteor_detail(&toks("ache"), &toks("pain"), None).matches, 0);
    }

    #[test]
    fn porter_reference_words() {
        for (w, s) in [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("cats", "cat"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("motoring", "motor"),
            ("hopping", "hop"),
            ("filing", "file"),
            ("happy", "happi"),
            ("relational", "relat"),
            ("generalization", "gener"),
            ("adjustment", "adjust"),
            ("controll", "control"),
            ("rate", "rate"),
        ] {
            assert_eq!(stem(w), s, "{w}");
        }
    }
}
