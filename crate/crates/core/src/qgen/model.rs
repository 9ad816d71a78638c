//! Model parameters, forward computation and checkpoints.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Tensor, Var};
use super::{QgenError, Vocab, BOS, EOS, PAD, RESERVED, UNK};
use crate::embedding::EmbeddingTable;

pub const CHECKPOINT_FORMAT: &str = "qir-seq2seq";
pub const CHECKPOINT_VERSION: u32 = 1;
const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy)]
struct Lstm {
    w_ih: usize,
    w_hh: usize,
    bias: usize,
    hidden: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    embed: usize,
    // [layer][direction]
    enc: [[Lstm; 2]; 2],
    han_w: usize,
    han_bias: usize,
    han_context: usize,
    att_w: usize,
    cov_w: usize,
    dec: [Lstm; 2],
    out_wx: usize,
    out_bias_x: usize,
    out_wo: usize,
    out_bias_o: usize,
}

fn layout(d: ModelDims) -> (Layout, Vec<(String, usize, usize)>) {
    let h = d.hidden;
    let mut shapes: Vec<(String, usize, usize)> = Vec::new();
    let mut add = |name: String, rows: usize, cols: usize| {
        shapes.push((name, rows, cols));
        shapes.len() - 1
    };
    let embed = add("embed".into(), d.vocab, d.embed);
    let mut lstm = |prefix: &str, input: usize| Lstm {
        w_ih: add(format!("{prefix}.w_ih"), 4 * h, input),
        w_hh: add(format!("{prefix}.w_hh"), 4 * h, h),
        bias: add(format!("{prefix}.bias"), 1, 4 * h),
        hidden: h,
    };
    let enc = [
        [lstm("enc.l0.fwd", d.embed), lstm("enc.l0.bwd", d.embed)],
        [lstm("enc.l1.fwd", 2 * h), lstm("enc.l1.bwd", 2 * h)],
    ];
    let dec = [lstm("dec.l0", d.embed), lstm("dec.l1", h)];
    let han_w = add("han.w".into(), 2 * h, 2 * h);
    let han_bias = add("han.bias".into(), 1, 2 * h);
    let han_context = add("han.context".into(), 1, 2 * h);
    let att_w = add("att.w".into(), h, 2 * h);
    let cov_w = add("cov.w".into(), 1, 2 * h);
    let out_wx = add("out.w_x".into(), h, 5 * h);
    let out_bias_x = add("out.bias_x".into(), 1, h);
    let out_wo = add("out.w_o".into(), d.vocab, h);
    let out_bias_o = add("out.bias_o".into(), 1, d.vocab);
    let lay = Layout {
        embed,
        enc,
        han_w,
        han_bias,
        han_context,
        att_w,
        cov_w,
        dec,
        out_wx,
        out_bias_x,
        out_wo,
        out_bias_o,
    };
    (lay, shapes)
}

#[derive(Debug, Clone)]
pub struct Seq2SeqModel {
    dims: ModelDims,
    vocab: Vocab,
    names: Vec<String>,
    params: Vec<Tensor>,
    layout: Layout,
}

/// Encoder output for one source sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    /// Top-layer states `[f_i; b_i]`, each of length 2H.
    pub states: Vec<Vec<f64>>,
    /// Word-attention weights over source positions.
    pub alpha: Vec<f64>,
    /// Σ α_i h_i.
    pub summary: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeState {
    pub step: usize,
    pub hidden: [Vec<f64>; 2],
    pub cell: [Vec<f64>; 2],
    pub coverage: Vec<f64>,
    pub emitted: Vec<usize>,
    pub attention: Vec<Vec<f64>>,
}

impl DecodeState {
    /// The token fed to the next step: the last emitted one, or BOS.
    pub fn previous(&self) -> usize {
        self.emitted.last().copied().unwrap_or(BOS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub tokens: Vec<String>,
    pub ids: Vec<usize>,
    /// Attention over the source at every decode step.
    pub attention: Vec<Vec<f64>>,
    /// Coverage vector entering every decode step.
    pub coverage: Vec<Vec<f64>>,
}

struct EncVars {
    states: Vec<Var>,
    summary: Var,
}

struct StepVars {
    hidden: [Var; 2],
    cell: [Var; 2],
    coverage: Var,
}

struct StepOut {
    logits: Var,
    attention: Var,
    next: StepVars,
}

fn lstm_step(t: &mut Tape, l: Lstm, x: Var, h: Var, c: Var) -> (Var, Var) {
    let n = l.hidden;
    let gx = t.matvec(l.w_ih, x);
    let gh = t.matvec(l.w_hh, h);
    let b = t.param_row(l.bias, 0);
    let z0 = t.add(gx, gh);
    let z = t.add(z0, b);
    let zi = t.slice(z, 0, n);
    let zf = t.slice(z, n, n);
    let zg = t.slice(z, 2 * n, n);
    let zo = t.slice(z, 3 * n, n);
    let i = t.sigmoid(zi);
    let f = t.sigmoid(zf);
    let g = t.tanh(zg);
    let o = t.sigmoid(zo);
    let fc = t.mul(f, c);
    let ig = t.mul(i, g);
    let c_next = t.add(fc, ig);
    let tc = t.tanh(c_next);
    let h_next = t.mul(o, tc);
    (h_next, c_next)
}

fn run_direction(t: &mut Tape, l: Lstm, inputs: &[Var], reverse: bool) -> Vec<Var> {
    let zero = vec![0.0; l.hidden];
    let mut h = t.input(zero.clone());
    let mut c = t.input(zero);
    let mut out = vec![h; inputs.len()];
    let order: Vec<usize> = if reverse {
        (0..inputs.len()).rev().collect()
    } else {
        (0..inputs.len()).collect()
    };
    for i in order {
        let (h2, c2) = lstm_step(t, l, inputs[i], h, c);
        h = h2;
        c = c2;
        out[i] = h;
    }
    out
}

fn encode_vars(t: &mut Tape, lay: &Layout, src: &[usize]) -> Vec<Var> {
    let mut layer_in: Vec<Var> = src.iter().map(|&id| t.param_row(lay.embed, id)).collect();
    for layer in &lay.enc {
        let fwd = run_direction(t, layer[0], &layer_in, false);
        let bwd = run_direction(t, layer[1], &layer_in, true);
        layer_in = fwd.iter().zip(&bwd).map(|(f, b)| t.concat(&[*f, *b])).collect();
    }
    layer_in
}

fn word_attention_vars(t: &mut Tape, lay: &Layout, states: &[Var]) -> (Var, Var) {
    let context = t.param_row(lay.han_context, 0);
    let scores: Vec<Var> = states
        .iter()
        .map(|&h| {
            let wh = t.matvec(lay.han_w, h);
            let b = t.param_row(lay.han_bias, 0);
            let pre = t.add(wh, b);
            let u = t.tanh(pre);
            t.dot(u, context)
        })
        .collect();
    let scores = t.concat(&scores);
    let alpha = t.softmax(scores);
    let summary = t.weighted_sum(alpha, states);
    (alpha, summary)
}

fn coverage_vars(t: &mut Tape, lay: &Layout, states: &[Var], coverage: Var) -> Vec<Var> {
    let wc = t.param_row(lay.cov_w, 0);
    states
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let ci = t.pick(coverage, i);
            let shift = t.scale(wc, ci);
            let pre = t.add(h, shift);
            t.tanh(pre)
        })
        .collect()
}

fn general_attention_vars(t: &mut Tape, lay: &Layout, dec_h: Var, states: &[Var]) -> Var {
    let scores: Vec<Var> = states
        .iter()
        .map(|&h| {
            let wh = t.matvec(lay.att_w, h);
            t.dot(dec_h, wh)
        })
        .collect();
    let scores = t.concat(&scores);
    t.softmax(scores)
}

fn step_vars(t: &mut Tape, lay: &Layout, enc: &EncVars, st: &StepVars, prev: usize) -> StepOut {
    let x = t.param_row(lay.embed, prev);
    let (h0, c0) = lstm_step(t, lay.dec[0], x, st.hidden[0], st.cell[0]);
    let (h1, c1) = lstm_step(t, lay.dec[1], h0, st.hidden[1], st.cell[1]);
    let adjusted = coverage_vars(t, lay, &enc.states, st.coverage);
    let a = general_attention_vars(t, lay, h1, &adjusted);
    let s_t = t.weighted_sum(a, &adjusted);
    let general = t.weighted_sum(a, &enc.states);
    let q_t = t.max(general, enc.summary);
    let joined = t.concat(&[s_t, q_t, h1]);
    let wx = t.matvec(lay.out_wx, joined);
    let bx = t.param_row(lay.out_bias_x, 0);
    let pre = t.add(wx, bx);
    let attn_hidden = t.tanh(pre);
    let wo = t.matvec(lay.out_wo, attn_hidden);
    let bo = t.param_row(lay.out_bias_o, 0);
    let logits = t.add(wo, bo);
    let coverage = t.add(st.coverage, a);
    StepOut {
        logits,
        attention: a,
        next: StepVars {
            hidden: [h0, h1],
            cell: [c0, c1],
            coverage,
        },
    }
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Elementwise max of the general-attention context Σ a_i h_i and the
/// word-attention summary.
pub fn combined_context(attention: &[f64], summary: &[f64], states: &[Vec<f64>]) -> Vec<f64> {
    let mut general = vec![0.0; summary.len()];
    for (a, h) in attention.iter().zip(states) {
        general.iter_mut().zip(h).for_each(|(g, x)| *g += a * x);
    }
    general.iter().zip(summary).map(|(g, s)| g.max(*s)).collect()
}

#[derive(Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    dims: ModelDims,
    vocab: Vec<String>,
    tensors: Vec<NamedTensor>,
}

impl Seq2SeqModel {
    /// Fresh model: weights uniform in ±0.1, biases zero except the LSTM
    /// forget gates, which start at 1.
    pub fn new(vocab: Vocab, embed: usize, hidden: usize, seed: u64) -> Self {
        let dims = ModelDims {
            vocab: vocab.len(),
            embed,
            hidden,
        };
        let (layout, shapes) = layout(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::with_capacity(shapes.len());
        let mut params = Vec::with_capacity(shapes.len());
        for (name, rows, cols) in shapes {
            let mut t = Tensor::zeros(rows, cols);
            if !name.contains("bias") {
                t.data.iter_mut().for_each(|x| *x = rng.gen_range(-INIT_RANGE..INIT_RANGE));
            } else if name.starts_with("enc.") || name.starts_with("dec.") {
                let h = hidden;
                t.data[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
            }
            names.push(name);
            params.push(t);
        }
        Seq2SeqModel {
            dims,
            vocab,
            names,
            params,
            layout,
        }
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.params[i])
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Copies pretrained vectors into the embedding matrix for every vocab
    /// word the table knows. Returns the number of rows copied, or 0 if the
    /// dimensions differ.
    pub fn init_embeddings(&mut self, table: &EmbeddingTable) -> usize {
        if table.dim() != self.dims.embed {
            return 0;
        }
        let mut copied = 0;
        let embed = self.layout.embed;
        for id in RESERVED.len()..self.vocab.len() {
            if let Some(v) = table.get(self.vocab.word(id)) {
                let cols = self.params[embed].cols;
                self.params[embed].data[id * cols..(id + 1) * cols].copy_from_slice(v);
                copied += 1;
            }
        }
        copied
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// Top-layer encoder states for a sequence of token ids.
    pub fn encode(&self, src: &[usize]) -> Result<Vec<Vec<f64>>, QgenError> {
        Ok(self.prepare(src)?.states)
    }

    /// Encoder states together with the word-attention weights and summary.
    pub fn prepare(&self, src: &[usize]) -> Result<Encoded, QgenError> {
        if src.is_empty() {
            return Err(QgenError::EmptyInput);
        }
        let mut t = Tape::new(&self.params);
        let states = encode_vars(&mut t, &self.layout, src);
        let (alpha, summary) = word_attention_vars(&mut t, &self.layout, &states);
        Ok(Encoded {
            states: states.iter().map(|v| t.value(*v).to_vec()).collect(),
            alpha: t.value(alpha).to_vec(),
            summary: t.value(summary).to_vec(),
        })
    }

    /// Word attention over given states: (α, Σ α_i h_i).
    pub fn word_attention(&self, states: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let mut t = Tape::new(&self.params);
        let vars: Vec<Var> = states.iter().map(|h| t.input(h.clone())).collect();
        let (alpha, summary) = word_attention_vars(&mut t, &self.layout, &vars);
        (t.value(alpha).to_vec(), t.value(summary).to_vec())
    }

    /// softmax_i(h_decᵀ W_a h_i).
    pub fn general_attention(&self, dec_hidden: &[f64], states: &[Vec<f64>]) -> Vec<f64> {
        let mut t = Tape::new(&self.params);
        let h = t.input(dec_hidden.to_vec());
        let vars: Vec<Var> = states.iter().map(|s| t.input(s.clone())).collect();
        let a = general_attention_vars(&mut t, &self.layout, h, &vars);
        t.value(a).to_vec()
    }

    /// tanh(h_i + w_c · c_i) for every source position.
    pub fn apply_coverage(&self, states: &[Vec<f64>], coverage: &[f64]) -> Vec<Vec<f64>> {
        let mut t = Tape::new(&self.params);
        let vars: Vec<Var> = states.iter().map(|s| t.input(s.clone())).collect();
        let c = t.input(coverage.to_vec());
        coverage_vars(&mut t, &self.layout, &vars, c)
            .into_iter()
            .map(|v| t.value(v).to_vec())
            .collect()
    }

    pub fn initial_state(&self, source_len: usize) -> DecodeState {
        let h = self.dims.hidden;
        DecodeState {
            step: 0,
            hidden: [vec![0.0; h], vec![0.0; h]],
            cell: [vec![0.0; h], vec![0.0; h]],
            coverage: vec![0.0; source_len],
            emitted: Vec::new(),
            attention: Vec::new(),
        }
    }

    /// One decoder step fed with `state.previous()`. Returns the output
    /// distribution and the advanced state (nothing emitted yet).
    pub fn decode_step(&self, enc: &Encoded, state: &DecodeState) -> (Vec<f64>, DecodeState) {
        let mut t = Tape::new(&self.params);
        let ev = EncVars {
            states: enc.states.iter().map(|s| t.input(s.clone())).collect(),
            summary: t.input(enc.summary.clone()),
        };
        let sv = StepVars {
            hidden: [t.input(state.hidden[0].clone()), t.input(state.hidden[1].clone())],
            cell: [t.input(state.cell[0].clone()), t.input(state.cell[1].clone())],
            coverage: t.input(state.coverage.clone()),
        };
        let out = step_vars(&mut t, &self.layout, &ev, &sv, state.previous());
        let dist = softmax(t.value(out.logits));
        let attention = t.value(out.attention).to_vec();
        let coverage = state.coverage.iter().zip(&attention).map(|(c, a)| c + a).collect();
        let mut next_attention = state.attention.clone();
        next_attention.push(attention);
        let next = DecodeState {
            step: state.step + 1,
            hidden: [t.value(out.next.hidden[0]).to_vec(), t.value(out.next.hidden[1]).to_vec()],
            cell: [t.value(out.next.cell[0]).to_vec(), t.value(out.next.cell[1]).to_vec()],
            coverage,
            emitted: state.emitted.clone(),
            attention: next_attention,
        };
        (dist, next)
    }

    /// Greedy decoding until EOS or `max_len` tokens. An emitted UNK is
    /// replaced by the source word that received the most attention at
    /// that step.
    pub fn generate_question(&self, input: &[String], max_len: usize) -> Result<Generated, QgenError> {
        let src = self.vocab.encode(input);
        let enc = self.prepare(&src)?;
        let mut state = self.initial_state(src.len());
        let mut out = Generated {
            tokens: Vec::new(),
            ids: Vec::new(),
            attention: Vec::new(),
            coverage: Vec::new(),
        };
        while out.tokens.len() < max_len {
            out.coverage.push(state.coverage.clone());
            let (mut dist, next) = self.decode_step(&enc, &state);
            state = next;
            let attention = state.attention.last().cloned().unwrap_or_default();
            out.attention.push(attention.clone());
            dist[PAD] = f64::NEG_INFINITY;
            dist[BOS] = f64::NEG_INFINITY;
            let id = argmax(&dist);
            if id == EOS {
                break;
            }
            let word = if id == UNK {
                input[argmax(&attention)].clone()
            } else {
                self.vocab.word(id).to_string()
            };
            state.emitted.push(id);
            out.ids.push(id);
            out.tokens.push(word);
        }
        Ok(out)
    }

    fn sequence_loss(&self, t: &mut Tape, src: &[usize], tgt: &[usize]) -> Result<(Var, usize), QgenError> {
        if src.is_empty() || tgt.is_empty() {
            return Err(QgenError::EmptyInput);
        }
        let lay = &self.layout;
        let states = encode_vars(t, lay, src);
        let (_, summary) = word_attention_vars(t, lay, &states);
        let enc = EncVars { states, summary };
        let h = self.dims.hidden;
        let mut st = StepVars {
            hidden: [t.input(vec![0.0; h]), t.input(vec![0.0; h])],
            cell: [t.input(vec![0.0; h]), t.input(vec![0.0; h])],
            coverage: t.input(vec![0.0; src.len()]),
        };
        let mut prev = BOS;
        let mut terms = Vec::with_capacity(tgt.len());
        let mut correct = 0;
        for &y in tgt {
            let out = step_vars(t, lay, &enc, &st, prev);
            if argmax(t.value(out.logits)) == y {
                correct += 1;
            }
            terms.push(t.neg_log_softmax(out.logits, y));
            st = out.next;
            prev = y;
        }
        Ok((t.sum(&terms), correct))
    }

    /// Teacher-forced negative log-likelihood of `tgt` given `src`, summed
    /// over target positions, and the number of positions where the argmax
    /// prediction equals the target.
    pub fn loss(&self, src: &[usize], tgt: &[usize]) -> Result<(f64, usize), QgenError> {
        let mut t = Tape::new(&self.params);
        let (loss, correct) = self.sequence_loss(&mut t, src, tgt)?;
        Ok((t.scalar(loss), correct))
    }

    /// Like [`loss`](Self::loss), also adding parameter gradients into `grads`.
    pub fn loss_and_grad(&self, src: &[usize], tgt: &[usize], grads: &mut [Tensor]) -> Result<(f64, usize), QgenError> {
        let mut t = Tape::new(&self.params);
        let (loss, correct) = self.sequence_loss(&mut t, src, tgt)?;
        t.backward(loss, grads);
        Ok((t.scalar(loss), correct))
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| Tensor::zeros(p.rows, p.cols)).collect()
    }

    /// JSON checkpoint: format tag, version, dims, vocabulary (without the
    /// reserved entries) and every tensor by name.
    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dims: self.dims,
            vocab: self.vocab.words().to_vec(),
            tensors: self
                .names
                .iter()
                .zip(&self.params)
                .map(|(name, t)| NamedTensor {
                    name: name.clone(),
                    rows: t.rows,
                    cols: t.cols,
                    data: t.data.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, QgenError> {
        let bad = |m: String| QgenError::Checkpoint(m);
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("unknown format {:?}", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {}", ck.version)));
        }
        let vocab = Vocab::from_words(ck.vocab);
        if vocab.len() != ck.dims.vocab {
            return Err(bad(format!("vocab has {} entries, dims say {}", vocab.len(), ck.dims.vocab)));
        }
        let (layout, shapes) = layout(ck.dims);
        if shapes.len() != ck.tensors.len() {
            return Err(bad(format!("expected {} tensors, found {}", shapes.len(), ck.tensors.len())));
        }
        let mut names = Vec::new();
        let mut params = Vec::new();
        for ((name, rows, cols), t) in shapes.into_iter().zip(ck.tensors) {
            if t.name != name || t.rows != rows || t.cols != cols || t.data.len() != rows * cols {
                return Err(bad(format!("tensor {:?} does not match expected {name} {rows}x{cols}", t.name)));
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("tensor {name} has non-finite entries")));
            }
            names.push(name);
            params.push(Tensor {
                rows,
                cols,
                data: t.data,
            });
        }
        Ok(Seq2SeqModel {
            dims: ck.dims,
            vocab,
            names,
            params,
            layout,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), QgenError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| QgenError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QgenError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| QgenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Seq2SeqModel {
        let vocab = Vocab::from_words(["fever", "do", "you", "have", "?"].map(String::from));
        Seq2SeqModel::new(vocab, 4, 3, 7)
    }

    #[test]
    fn encoder_shapes() {
        let m = tiny();
        let hs = m.encode(&[4, 5, 6]).unwrap();
        assert_eq!(hs.len(), 3);
        assert!(hs.iter().all(|h| h.len() == 6));
        assert!(matches!(m.encode(&[]), Err(QgenError::EmptyInput)));
    }

    #[test]
    fn single_state_attention_is_identity() {
        let m = tiny();
        let hs = m.encode(&[4]).unwrap();
        let (alpha, s) = m.word_attention(&hs);
        assert_eq!(alpha, vec![1.0]);
        assert_eq!(s, hs[0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = tiny();
        let back = Seq2SeqModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.vocab(), m.vocab());
        let mut broken: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        broken["version"] = 99.into();
        assert!(Seq2SeqModel::from_json(&broken.to_string()).is_err());
    }

    #[test]
    fn generation_respects_max_len_and_never_emits_unk() {
        let m = tiny();
        let g = m.generate_question(&["fever".into(), "zzz".into()], 4).unwrap();
        assert!(g.tokens.len() <= 4);
        assert!(g.tokens.iter().all(|t| t != "<unk>"));
        for (a, c) in g.attention.iter().zip(&g.coverage) {
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(c.len(), 2);
        }
    }
}
