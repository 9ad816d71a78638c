//! A small reverse-mode differentiation tape over dense vectors.
//!
//! Every node holds a `Vec<f64>` (scalars are length-1 vectors). Parameters
//! live outside the tape as [`Tensor`]s; parameter-reading ops accumulate
//! their adjoints into a gradient buffer of the same shape.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    ParamRow { param: usize, row: usize },
    MatVec { param: usize, x: Var },
    Add(Var, Var),
    Mul(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Dot(Var, Var),
    Softmax(Var),
    WeightedSum { weights: Var, items: Vec<Var> },
    Max(Var, Var),
    Pick { x: Var, index: usize },
    Scale { x: Var, s: Var },
    NegLogSoftmax { logits: Var, target: usize },
    Sum(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p [Tensor],
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [Tensor]) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Input)
    }

    /// Row `row` of parameter `param` (embedding lookup, or a bias stored as a 1×n tensor).
    pub fn param_row(&mut self, param: usize, row: usize) -> Var {
        let value = self.params[param].row(row).to_vec();
        self.push(value, Op::ParamRow { param, row })
    }

    pub fn matvec(&mut self, param: usize, x: Var) -> Var {
        let w = &self.params[param];
        let xv = &self.nodes[x.0].value;
        debug_assert_eq!(w.cols, xv.len(), "matvec shape");
        let value = (0..w.rows)
            .map(|r| w.row(r).iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        self.push(value, Op::MatVec { param, x })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        self.push(value, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        self.push(value, Op::Mul(a, b))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(value, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(value, Op::Sigmoid(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let value = parts.iter().flat_map(|p| self.value(*p).iter().copied()).collect();
        self.push(value, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let value = self.value(x)[start..start + len].to_vec();
        self.push(value, Op::Slice { x, start })
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        self.push(vec![value], Op::Dot(a, b))
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let value = softmax(self.value(x));
        self.push(value, Op::Softmax(x))
    }

    /// Σ_i weights[i] · items[i].
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Var {
        let w = self.value(weights);
        debug_assert_eq!(w.len(), items.len());
        let dim = self.value(items[0]).len();
        let mut value = vec![0.0; dim];
        for (wi, item) in w.iter().zip(items) {
            value.iter_mut().zip(self.value(*item)).for_each(|(v, x)| *v += wi * x);
        }
        self.push(value, Op::WeightedSum { weights, items: items.to_vec() })
    }

    /// Elementwise maximum; on exact ties the gradient goes to `a`.
    pub fn max(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x.max(*y)).collect();
        self.push(value, Op::Max(a, b))
    }

    pub fn pick(&mut self, x: Var, index: usize) -> Var {
        let value = vec![self.value(x)[index]];
        self.push(value, Op::Pick { x, index })
    }

    /// Vector `x` times scalar node `s`.
    pub fn scale(&mut self, x: Var, s: Var) -> Var {
        let k = self.scalar(s);
        let value = self.value(x).iter().map(|v| v * k).collect();
        self.push(value, Op::Scale { x, s })
    }

    /// −log softmax(logits)[target].
    pub fn neg_log_softmax(&mut self, logits: Var, target: usize) -> Var {
        let l = self.value(logits);
        let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + l.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        let value = lse - l[target];
        self.push(vec![value], Op::NegLogSoftmax { logits, target })
    }

    pub fn sum(&mut self, parts: &[Var]) -> Var {
        let dim = self.value(parts[0]).len();
        let mut value = vec![0.0; dim];
        for p in parts {
            value.iter_mut().zip(self.value(*p)).for_each(|(v, x)| *v += x);
        }
        self.push(value, Op::Sum(parts.to_vec()))
    }

    /// Back-propagates d(output)/d(·) with output a scalar node, adding
    /// parameter gradients into `grads`.
    pub fn backward(&self, output: Var, grads: &mut [Tensor]) {
        let mut adj: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        adj[output.0][0] = 1.0;
        for idx in (0..=output.0).rev() {
            let g = std::mem::take(&mut adj[idx]);
            if g.iter().all(|x| *x == 0.0) {
                continue;
            }
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::ParamRow { param, row } => {
                    let t = &mut grads[*param];
                    let cols = t.cols;
                    t.data[row * cols..(row + 1) * cols]
                        .iter_mut()
                        .zip(&g)
                        .for_each(|(d, x)| *d += x);
                }
                Op::MatVec { param, x } => {
                    let w = &self.params[*param];
                    let xv = &self.nodes[x.0].value;
                    let gw = &mut grads[*param];
                    let ax = &mut adj[x.0];
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        let wrow = w.row(r);
                        let grow = &mut gw.data[r * w.cols..(r + 1) * w.cols];
                        for c in 0..w.cols {
                            grow[c] += gr * xv[c];
                            ax[c] += gr * wrow[c];
                        }
                    }
                }
                Op::Add(a, b) => {
                    adj[a.0].iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                    adj[b.0].iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    for i in 0..g.len() {
                        adj[a.0][i] += g[i] * bv[i];
                        adj[b.0][i] += g[i] * av[i];
                    }
                }
                Op::Tanh(a) => {
                    for i in 0..g.len() {
                        let y = node.value[i];
                        adj[a.0][i] += g[i] * (1.0 - y * y);
                    }
                }
                Op::Sigmoid(a) => {
                    for i in 0..g.len() {
                        let y = node.value[i];
                        adj[a.0][i] += g[i] * y * (1.0 - y);
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        adj[p.0].iter_mut().zip(&g[offset..offset + n]).for_each(|(d, x)| *d += x);
                        offset += n;
                    }
                }
                Op::Slice { x, start } => {
                    adj[x.0][*start..*start + g.len()]
                        .iter_mut()
                        .zip(&g)
                        .for_each(|(d, v)| *d += v);
                }
                Op::Dot(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    for i in 0..av.len() {
                        adj[a.0][i] += g[0] * bv[i];
                        adj[b.0][i] += g[0] * av[i];
                    }
                }
                Op::Softmax(x) => {
                    let y = &node.value;
                    let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    for i in 0..y.len() {
                        adj[x.0][i] += y[i] * (g[i] - gy);
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let w = &self.nodes[weights.0].value;
                    for (i, item) in items.iter().enumerate() {
                        let iv = &self.nodes[item.0].value;
                        adj[weights.0][i] += g.iter().zip(iv).map(|(a, b)| a * b).sum::<f64>();
                        let wi = w[i];
                        adj[item.0].iter_mut().zip(&g).for_each(|(d, x)| *d += wi * x);
                    }
                }
                Op::Max(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    for i in 0..g.len() {
                        if av[i] >= bv[i] {
                            adj[a.0][i] += g[i];
                        } else {
                            adj[b.0][i] += g[i];
                        }
                    }
                }
                Op::Pick { x, index } => {
                    adj[x.0][*index] += g[0];
                }
                Op::Scale { x, s } => {
                    let k = self.nodes[s.0].value[0];
                    let xv = &self.nodes[x.0].value;
                    adj[s.0][0] += g.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>();
                    adj[x.0].iter_mut().zip(&g).for_each(|(d, v)| *d += k * v);
                }
                Op::NegLogSoftmax { logits, target } => {
                    let p = softmax(&self.nodes[logits.0].value);
                    for (i, pi) in p.iter().enumerate() {
                        let ind = if i == *target { 1.0 } else { 0.0 };
                        adj[logits.0][i] += g[0] * (pi - ind);
                    }
                }
                Op::Sum(parts) => {
                    for p in parts {
                        adj[p.0].iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                    }
                }
            }
        }
    }
}
