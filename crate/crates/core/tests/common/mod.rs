//! Fixtures and independent reference implementations shared by the
//! integration tests. Nothing here calls into the code under test except
//! to load fixtures.

#![allow(dead_code)]

pub mod lp;

use std::path::PathBuf;
use std::sync::Arc;

use qir::corpus::{parse_corpus, CorpusFormat, Document, LemmaTable, StopWords};
use qir::embedding::EmbeddingTable;
use qir::qgen::{tape::Tensor, QgenError, QuestionGenerator, Seq2SeqModel};
use qir::session::Retriever;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap()
}

/// Turns the source into "do you have <source> ?".
pub struct TemplateGenerator;

impl QuestionGenerator for TemplateGenerator {
    fn generate(&self, input: &[String], max_len: usize) -> Result<Vec<String>, QgenError> {
        let mut q = vec!["do".to_string(), "you".into(), "have".into()];
        q.extend(input.iter().cloned());
        q.push("?".into());
        q.truncate(max_len);
        Ok(q)
    }
}

pub fn toy_retriever() -> Retriever {
    Retriever {
        table: EmbeddingTable::parse(&read_data("vectors.txt")).unwrap(),
        lemmas: LemmaTable::bundled(),
        stopwords: StopWords::bundled(),
        generator: Arc::new(TemplateGenerator),
    }
}

pub fn toy_corpus() -> Vec<Document> {
    parse_corpus(&read_data("toy_corpus.jsonl"), CorpusFormat::Jsonl, &LemmaTable::bundled()).unwrap()
}

// ---------------------------------------------------------------------------
// Exhaustive clustering optima
// ---------------------------------------------------------------------------

/// Every labelling of `n` points into exactly `k` non-empty clusters, in
/// canonical form (first occurrences of labels appear in order 0, 1, ...).
pub fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, k: usize, used: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            if used == k {
                out.push(cur.clone());
            }
            return;
        }
        if k - used > n - i {
            return;
        }
        for l in 0..(used + 1).min(k) {
            cur.push(l);
            rec(i + 1, n, k, used.max(l + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Relabels clusters by order of first appearance.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(points: &[&Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; points[0].len()];
    for p in points {
        m.iter_mut().zip(p.iter()).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= points.len() as f64);
    m
}

pub fn brute_wcss(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|c| {
            let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            let m = mean_of(&members);
            members.iter().map(|p| sq(p, &m)).sum::<f64>()
        })
        .sum()
}

/// Σ (1 − cos(p, unit mean direction)) per cluster.
pub fn brute_cosine_objective(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let unit = |v: &[f64]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    (0..k)
        .map(|c| {
            let members: Vec<Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| unit(p)).collect();
            let refs: Vec<&Vec<f64>> = members.iter().collect();
            let centre = unit(&mean_of(&refs));
            members.iter().map(|p| 1.0 - p.iter().zip(&centre).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
        })
        .sum()
}

/// Minimum of `objective` over all k-partitions, and every canonical
/// labelling within `tol` of it.
pub fn brute_optimum(points: &[Vec<f64>], k: usize, objective: impl Fn(&[Vec<f64>], &[usize], usize) -> f64, tol: f64) -> (f64, Vec<Vec<usize>>) {
    let scored: Vec<(f64, Vec<usize>)> = partitions(points.len(), k).into_iter().map(|l| (objective(points, &l, k), l)).collect();
    let best = scored.iter().map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
    let winners = scored.into_iter().filter(|(s, _)| *s <= best + tol).map(|(_, l)| l).collect();
    (best, winners)
}

// ---------------------------------------------------------------------------
// Naive Ward
// ---------------------------------------------------------------------------

/// Ward agglomeration that recomputes every pairwise merge cost
/// |A||B|/(|A|+|B|)·‖μ_A − μ_B‖² from scratch at each step. Merges are
/// reported as (left name, right name, cost) with clusters named by their
/// lowest point index.
pub fn naive_ward_merges(points: &[Vec<f64>], stop_at: usize) -> Vec<(usize, usize, f64)> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > stop_at {
        let mut best = (0, 0, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let pa: Vec<&Vec<f64>> = clusters[a].iter().map(|&i| &points[i]).collect();
                let pb: Vec<&Vec<f64>> = clusters[b].iter().map(|&i| &points[i]).collect();
                let (na, nb) = (pa.len() as f64, pb.len() as f64);
                let cost = na * nb / (na + nb) * sq(&mean_of(&pa), &mean_of(&pb));
                if cost < best.2 {
                    best = (a, b, cost);
                }
            }
        }
        let (a, b, cost) = best;
        let (left, right) = (clusters[a][0], clusters[b][0]);
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters[a].sort();
        out.push((left.min(right), left.max(right), cost));
    }
    out
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigenvalues (descending) and matching unit eigenvectors of a symmetric
/// matrix.
pub fn jacobi_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut a = m.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n).map(|i| (a[i][i], (0..n).map(|r| v[r][i]).collect())).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs.into_iter().unzip()
}

// ---------------------------------------------------------------------------
// Scalar seq2seq forward pass
// ---------------------------------------------------------------------------

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn row(t: &Tensor, r: usize) -> &[f64] {
    &t.data[r * t.cols..(r + 1) * t.cols]
}

fn matvec(t: &Tensor, x: &[f64]) -> Vec<f64> {
    (0..t.rows).map(|r| row(t, r).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

/// Reference model evaluated with explicit loops over named tensors.
pub struct ScalarModel<'a> {
    pub m: &'a Seq2SeqModel,
}

impl ScalarModel<'_> {
    fn p(&self, name: &str) -> &Tensor {
        self.m.param(name).unwrap_or_else(|| panic!("missing tensor {name}"))
    }

    /// One LSTM cell update with gates ordered input, forget, candidate,
    /// output.
    pub fn lstm(&self, prefix: &str, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = h.len();
        let wi = self.p(&format!("{prefix}.w_ih"));
        let wh = self.p(&format!("{prefix}.w_hh"));
        let b = &self.p(&format!("{prefix}.bias")).data;
        let mut h2 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for k in 0..n {
            let z = |g: usize| {
                let r = g * n + k;
                let mut s = b[r];
                for (j, xj) in x.iter().enumerate() {
                    s += wi.data[r * wi.cols + j] * xj;
                }
                for (j, hj) in h.iter().enumerate() {
                    s += wh.data[r * wh.cols + j] * hj;
                }
                s
            };
            let i = sigmoid(z(0));
            let f = sigmoid(z(1));
            let g = z(2).tanh();
            let o = sigmoid(z(3));
            c2[k] = f * c[k] + i * g;
            h2[k] = o * c2[k].tanh();
        }
        (h2, c2)
    }

    pub fn encode(&self, src: &[usize]) -> Vec<Vec<f64>> {
        let h = self.m.dims().hidden;
        let embed = self.p("embed");
        let mut layer: Vec<Vec<f64>> = src.iter().map(|&id| row(embed, id).to_vec()).collect();
        for l in 0..2 {
            let n = layer.len();
            let mut fwd = vec![vec![]; n];
            let (mut hh, mut cc) = (vec![0.0; h], vec![0.0; h]);
            for i in 0..n {
                let (a, b) = self.lstm(&format!("enc.l{l}.fwd"), &layer[i], &hh, &cc);
                hh = a;
                cc = b;
                fwd[i] = hh.clone();
            }
            let mut bwd = vec![vec![]; n];
            let (mut hh, mut cc) = (vec![0.0; h], vec![0.0; h]);
            for i in (0..n).rev() {
                let (a, b) = self.lstm(&format!("enc.l{l}.bwd"), &layer[i], &hh, &cc);
                hh = a;
                cc = b;
                bwd[i] = hh.clone();
            }
            layer = fwd.into_iter().zip(bwd).map(|(f, b)| [f, b].concat()).collect();
        }
        layer
    }

    /// (α, Σ α_i h_i) with u_i = tanh(W h_i + b) and α = softmax(u_i · u_w).
    pub fn word_attention(&self, states: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let w = self.p("han.w");
        let b = &self.p("han.bias").data;
        let ctx = &self.p("han.context").data;
        let scores: Vec<f64> = states
            .iter()
            .map(|hs| matvec(w, hs).iter().zip(b).map(|(x, y)| (x + y).tanh()).zip(ctx).map(|(u, c)| u * c).sum())
            .collect();
        let alpha = softmax(&scores);
        let mut s = vec![0.0; states[0].len()];
        for (a, hs) in alpha.iter().zip(states) {
            s.iter_mut().zip(hs).for_each(|(acc, x)| *acc += a * x);
        }
        (alpha, s)
    }

    pub fn general_attention(&self, dec: &[f64], states: &[Vec<f64>]) -> Vec<f64> {
        let w = self.p("att.w");
        let scores: Vec<f64> = states.iter().map(|hs| matvec(w, hs).iter().zip(dec).map(|(a, b)| a * b).sum()).collect();
        softmax(&scores)
    }

    pub fn apply_coverage(&self, states: &[Vec<f64>], coverage: &[f64]) -> Vec<Vec<f64>> {
        let wc = &self.p("cov.w").data;
        states
            .iter()
            .zip(coverage)
            .map(|(hs, c)| hs.iter().zip(wc).map(|(x, w)| (x + w * c).tanh()).collect())
            .collect()
    }

    /// One decoder step: returns (distribution, attention, hidden, cell).
    #[allow(clippy::type_complexity)]
    pub fn decode_step(
        &self,
        states: &[Vec<f64>],
        summary: &[f64],
        prev: usize,
        hidden: &[Vec<f64>; 2],
        cell: &[Vec<f64>; 2],
        coverage: &[f64],
    ) -> (Vec<f64>, Vec<f64>, [Vec<f64>; 2], [Vec<f64>; 2]) {
        let x = row(self.p("embed"), prev).to_vec();
        let (h0, c0) = self.lstm("dec.l0", &x, &hidden[0], &cell[0]);
        let (h1, c1) = self.lstm("dec.l1", &h0, &hidden[1], &cell[1]);
        let adjusted = self.apply_coverage(states, coverage);
        let a = self.general_attention(&h1, &adjusted);
        let width = states[0].len();
        let mut s_t = vec![0.0; width];
        let mut general = vec![0.0; width];
        for i in 0..states.len() {
            for d in 0..width {
                s_t[d] += a[i] * adjusted[i][d];
                general[d] += a[i] * states[i][d];
            }
        }
        let q_t: Vec<f64> = general.iter().zip(summary).map(|(g, s)| g.max(*s)).collect();
        let joined = [s_t, q_t, h1.clone()].concat();
        let bx = &self.p("out.bias_x").data;
        let hidden_att: Vec<f64> = matvec(self.p("out.w_x"), &joined).iter().zip(bx).map(|(v, b)| (v + b).tanh()).collect();
        let bo = &self.p("out.bias_o").data;
        let logits: Vec<f64> = matvec(self.p("out.w_o"), &hidden_att).iter().zip(bo).map(|(v, b)| v + b).collect();
        (softmax(&logits), a, [h0, h1], [c0, c1])
    }
}

// ---------------------------------------------------------------------------
// Small random instances
// ---------------------------------------------------------------------------

/// Between 5 and 8 points in 2 or 3 dimensions with k in 2..=3, drawn from a
/// seeded generator independent of the library.
pub fn small_instance(seed: u64) -> (Vec<Vec<f64>>, usize) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = rng.gen_range(5..=8);
    let dim = rng.gen_range(2..=3);
    let k = rng.gen_range(2..=3);
    let points = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
    (points, k)
}

/// The bundled labelled phrases embedded with the bundled vectors.
pub fn bundled_points() -> (Vec<Vec<f64>>, Vec<String>) {
    let table = EmbeddingTable::parse(&read_data("vectors.txt")).unwrap();
    let lemmas = LemmaTable::bundled();
    let items = qir::corpus::parse_labelled(&read_data("mini_labelled.jsonl")).unwrap();
    items
        .iter()
        .map(|it| (table.embed_phrase(&qir::corpus::preprocess(&it.text, &lemmas)).unwrap(), it.category.clone()))
        .unzip()
}

/// Between 5 and 8 points scattered (±1 per coordinate) around k in 2..=3
/// planted centres at least 6 apart, every centre used at least once.
pub fn blob_instance(seed: u64) -> (Vec<Vec<f64>>, usize) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5151_7a7a);
    let n = rng.gen_range(5..=8);
    let dim = rng.gen_range(2..=3);
    let k = rng.gen_range(2..=3);
    let mut centres: Vec<Vec<f64>> = Vec::new();
    while centres.len() < k {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
        if centres.iter().all(|o| sq(o, &c).sqrt() >= 6.0) {
            centres.push(c);
        }
    }
    let points = (0..n)
        .map(|i| {
            let c = if i < k { i } else { rng.gen_range(0..k) };
            centres[c].iter().map(|x| x + rng.gen_range(-1.0..1.0)).collect()
        })
        .collect();
    (points, k)
}

/// A random embedding of at most 6 words in at most 4 dimensions and two
/// random documents over it.
pub fn wmd_case(rng: &mut impl rand::Rng) -> (EmbeddingTable, Vec<String>, Vec<String>) {
    let vocab = rng.gen_range(1..=6);
    let dim = rng.gen_range(1..=4);
    let mut table = EmbeddingTable::new(dim);
    for w in 0..vocab {
        table.insert(&format!("w{w}"), (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
    }
    let doc = |rng: &mut dyn rand::RngCore| {
        let len = rand::Rng::gen_range(rng, 1..=8);
        (0..len).map(|_| format!("w{}", rand::Rng::gen_range(rng, 0..vocab))).collect::<Vec<String>>()
    };
    let a = doc(rng);
    let b = doc(rng);
    (table, a, b)
}

/// WMD through the LP oracle: bag-of-words weights counted here, costs
/// from raw embedding lookups.
pub fn wmd_oracle(table: &EmbeddingTable, a: &[String], b: &[String]) -> f64 {
    let bag = |d: &[String]| {
        let mut words: Vec<String> = d.to_vec();
        words.sort();
        words.dedup();
        let w: Vec<f64> = words.iter().map(|x| d.iter().filter(|y| *y == x).count() as f64 / d.len() as f64).collect();
        (words, w)
    };
    let (wa, pa) = bag(a);
    let (wb, pb) = bag(b);
    let cost: Vec<Vec<f64>> = wa.iter().map(|x| wb.iter().map(|y| sq(table.get(x).unwrap(), table.get(y).unwrap()).sqrt()).collect()).collect();
    lp::transport_lp(&pa, &pb, &cost)
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

/// Two short answer/question pairs over a small vocabulary.
pub fn gradient_pairs() -> Vec<qir::qgen::TrainingPair> {
    vec![
        qir::qgen::TrainingPair::from_text("high fever at night", "do you have a fever ?"),
        qir::qgen::TrainingPair::from_text("itchy rash", "where is the rash ?"),
    ]
}

/// Per tensor: (name, ‖analytic − numeric‖ / max(‖analytic‖ + ‖numeric‖, 1e-12))
/// with central differences of step `h` on the summed loss of `pairs`.
pub fn gradient_check(model: &Seq2SeqModel, pairs: &[qir::qgen::TrainingPair], h: f64) -> Vec<(String, f64)> {
    let encoded: Vec<(Vec<usize>, Vec<usize>)> = pairs
        .iter()
        .map(|p| {
            let mut tgt = model.vocab().encode(&p.question);
            tgt.push(qir::qgen::EOS);
            (model.vocab().encode(&p.answer), tgt)
        })
        .collect();
    let total = |m: &Seq2SeqModel| encoded.iter().map(|(s, t)| m.loss(s, t).unwrap().0).sum::<f64>();
    let mut grads = model.zero_grads();
    for (s, t) in &encoded {
        model.loss_and_grad(s, t, &mut grads).unwrap();
    }
    let mut probe = model.clone();
    let mut out = Vec::new();
    for (k, name) in model.names().iter().enumerate() {
        let (mut diff, mut norm_a, mut norm_n) = (0.0, 0.0, 0.0);
        for i in 0..model.params()[k].data.len() {
            let orig = probe.params()[k].data[i];
            probe.params_mut()[k].data[i] = orig + h;
            let up = total(&probe);
            probe.params_mut()[k].data[i] = orig - h;
            let down = total(&probe);
            probe.params_mut()[k].data[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads[k].data[i];
            diff += (analytic - numeric).powi(2);
            norm_a += analytic * analytic;
            norm_n += numeric * numeric;
        }
        out.push((name.clone(), diff.sqrt() / (norm_a.sqrt() + norm_n.sqrt()).max(1e-12)));
    }
    out
}

/// A freshly initialized model over the vocabulary of `pairs`.
pub fn small_model(pairs: &[qir::qgen::TrainingPair], embed: usize, hidden: usize, seed: u64) -> Seq2SeqModel {
    Seq2SeqModel::new(qir::qgen::build_vocab(pairs, 1), embed, hidden, seed)
}

/// Redraws every parameter uniformly from (−scale, scale) so that gradients
/// are not vanishingly small at the check point.
pub fn randomized(mut model: Seq2SeqModel, seed: u64, scale: f64) -> Seq2SeqModel {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for t in model.params_mut() {
        t.data.iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
    }
    model
}

// ---------------------------------------------------------------------------
// Session planning
// ---------------------------------------------------------------------------

/// Answers the toy-session planner may give: every toy document text and a
/// bare "yes".
pub fn candidate_answers() -> Vec<String> {
    let mut out: Vec<String> = toy_corpus().iter().map(|d| d.raw_text.clone()).collect();
    out.push("yes".into());
    out
}

/// Depth-first search over cloned sessions for an answer sequence of at
/// most `depth` turns after which the session has converged with `target`
/// ranked first.
pub fn plan_to_target(ctx: &qir::session::Retriever, s: &qir::session::Session, target: &str, depth: usize, candidates: &[String]) -> Option<Vec<String>> {
    use qir::session::Phase;
    if depth == 0 {
        return None;
    }
    for answer in candidates {
        let mut next = s.clone();
        if next.submit_answer(ctx, answer).is_err() {
            continue;
        }
        match next.phase {
            Phase::Converged if next.result.first().is_some_and(|d| d.doc_id == target) => return Some(vec![answer.clone()]),
            Phase::AwaitingAnswer if next.corpus.iter().any(|d| d.id == target) => {
                if let Some(mut rest) = plan_to_target(ctx, &next, target, depth - 1, candidates) {
                    rest.insert(0, answer.clone());
                    return Some(rest);
                }
            }
            _ => {}
        }
    }
    None
}

/// Lemmas of `text` that have an embedding.
pub fn embeddable(text: &str, table: &EmbeddingTable) -> Vec<String> {
    qir::corpus::preprocess(text, &LemmaTable::bundled()).into_iter().map(|t| t.lemma).filter(|w| table.contains(w)).collect()
}

/// 95th-percentile (nearest rank) pairwise LP distance over `docs`.
pub fn scale_oracle(docs: &[Vec<String>], table: &EmbeddingTable) -> f64 {
    let mut d = Vec::new();
    for i in 0..docs.len() {
        for j in (i + 1)..docs.len() {
            d.push(wmd_oracle(table, &docs[i], &docs[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    d[((0.95 * d.len() as f64).ceil() as usize).max(1) - 1]
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

/// A hub over the toy corpus with the template generator and a store in
/// `dir`.
pub fn toy_hub(dir: &std::path::Path, config: qir::session::SessionConfig) -> Arc<qir::service::Hub> {
    let store = qir::session::SessionStore::open(dir).unwrap();
    Arc::new(qir::service::Hub::new(toy_retriever(), toy_corpus(), store, config))
}

/// Sends one request through the router and returns the status and raw
/// body.
pub async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<&str>) -> (axum::http::StatusCode, String) {
    use http_body_util::BodyExt;
    use tower::ServiceExt;
    let req = axum::http::Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(axum::body::Body::from(body.unwrap_or("").to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

/// Starts a session, answers from `answers` in order (repeating the last)
/// until it finishes, then fetches the view. Returns every response body
/// in order.
pub async fn scripted_http_session(app: &axum::Router, query: &str, answers: &[&str]) -> Vec<String> {
    let mut transcript = Vec::new();
    let (status, body) = call(app, "POST", "/sessions", Some(&serde_json::json!({ "query": query }).to_string())).await;
    assert_eq!(status, 200, "{body}");
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    let id = v["session_id"].as_str().unwrap().to_string();
    let mut state = v["state"].as_str().unwrap().to_string();
    transcript.push(body);
    let mut i = 0;
    while state == "AwaitingAnswer" {
        let answer = answers[i.min(answers.len() - 1)];
        i += 1;
        let (status, body) = call(app, "POST", &format!("/sessions/{id}/answer"), Some(&serde_json::json!({ "answer": answer }).to_string())).await;
        assert_eq!(status, 200, "{body}");
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        state = v["state"].as_str().unwrap().to_string();
        transcript.push(body);
    }
    let (status, body) = call(app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, 200);
    transcript.push(body);
    transcript
}
