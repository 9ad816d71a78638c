//! Word Mover's Distance and the cluster relationship matrix.
//!
//! WMD is solved exactly as a balanced transportation problem with the
//! transportation simplex: a north-west-corner starting basis, MODI
//! (u-v) potentials for optimality, and stepping-stone cycles for pivots.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Token;
use crate::embedding::{euclidean, EmbeddingTable};

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("no token of {0:?} is in the vocabulary")]
    AllOutOfVocabulary(String),
    #[error("word {0:?} has no embedding")]
    OutOfVocabulary(String),
    #[error("supply and demand must be non-empty")]
    EmptyMarginal,
    #[error("negative or non-finite mass in a marginal")]
    BadMass,
    #[error("unbalanced problem: supply {supply} vs demand {demand}")]
    Unbalanced { supply: f64, demand: f64 },
    #[error("cost matrix must be {rows}x{cols}")]
    CostShape { rows: usize, cols: usize },
    #[error("transportation simplex did not converge in {0} pivots")]
    NonConvergence(usize),
    #[error("cluster relationship matrix needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
}

/// Normalized bag of words: each weight is the word's count over the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBow {
    pub vocab: Vec<String>,
    pub weights: Vec<f64>,
}

impl NBow {
    /// Counts the words accepted by `in_vocab`, in first-occurrence order.
    pub fn from_words<'a>(
        words: impl IntoIterator<Item = &'a str>,
        in_vocab: impl Fn(&str) -> bool,
    ) -> Result<Self, TransportError> {
        let mut vocab: Vec<String> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut all = Vec::new();
        for w in words {
            all.push(w);
            if !in_vocab(w) {
                continue;
            }
            match index.get(w) {
                Some(&i) => counts[i] += 1,
                None => {
                    index.insert(w, vocab.len());
                    vocab.push(w.to_string());
                    counts.push(1);
                }
            }
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(TransportError::AllOutOfVocabulary(all.join(" ")));
        }
        Ok(NBow {
            vocab,
            weights: counts.into_iter().map(|c| c as f64 / total as f64).collect(),
        })
    }

    pub fn from_tokens(tokens: &[Token], table: &EmbeddingTable) -> Result<Self, TransportError> {
        Self::from_words(tokens.iter().map(|t| t.lemma.as_str()), |w| table.contains(w))
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }
}

/// Bag of words with the words accepted by `in_vocab`.
pub fn nbow<'a>(
    words: impl IntoIterator<Item = &'a str>,
    in_vocab: impl Fn(&str) -> bool,
) -> Result<NBow, TransportError> {
    NBow::from_words(words, in_vocab)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub rows: usize,
    pub cols: usize,
    pub flows: Vec<Vec<f64>>,
}

impl FlowMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.flows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| self.flows.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Pairwise Euclidean distances between the two vocabularies' embeddings.
pub fn cost_matrix(a: &NBow, b: &NBow, table: &EmbeddingTable) -> Result<Vec<Vec<f64>>, TransportError> {
    let lookup = |w: &String| table.get(w).ok_or_else(|| TransportError::OutOfVocabulary(w.clone()));
    let va = a.vocab.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
    let vb = b.vocab.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
    Ok(va.iter().map(|x| vb.iter().map(|y| euclidean(x, y)).collect()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    pub flow: FlowMatrix,
    pub pivots: usize,
}

pub fn wmd(a: &NBow, b: &NBow, table: &EmbeddingTable) -> Result<(f64, FlowMatrix), TransportError> {
    let cost = cost_matrix(a, b, table)?;
    let plan = transport(&a.weights, &b.weights, &cost)?;
    Ok((plan.cost, plan.flow))
}

/// Convenience for the common "distance only" case.
pub fn wmd_distance(a: &NBow, b: &NBow, table: &EmbeddingTable) -> Result<f64, TransportError> {
    wmd(a, b, table).map(|(d, _)| d)
}

/// Solves `min Σ x_ij c_ij` subject to row sums = `supply`, column sums =
/// `demand`, `x ≥ 0`.
pub fn transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<TransportPlan, TransportError> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(TransportError::EmptyMarginal);
    }
    if supply.iter().chain(demand).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(TransportError::BadMass);
    }
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(TransportError::CostShape { rows: m, cols: n });
    }
    let (s_total, d_total): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (s_total - d_total).abs() > 1e-9 * s_total.max(d_total).max(1.0) {
        return Err(TransportError::Unbalanced {
            supply: s_total,
            demand: d_total,
        });
    }
    Simplex::new(supply, demand, cost).solve()
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [Vec<f64>],
    x: Vec<Vec<f64>>,
    basic: Vec<Vec<bool>>,
}

impl<'a> Simplex<'a> {
    /// North-west-corner basis. Degenerate steps keep a zero-flow basic cell
    /// so the basis is always a spanning tree with m + n − 1 cells.
    fn new(supply: &[f64], demand: &[f64], cost: &'a [Vec<f64>]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut x = vec![vec![0.0; n]; m];
        let mut basic = vec![vec![false; n]; m];
        let (mut i, mut j) = (0, 0);
        loop {
            let q = s[i].min(d[j]).max(0.0);
            x[i][j] = q;
            basic[i][j] = true;
            s[i] -= q;
            d[j] -= q;
            if i == m - 1 && j == n - 1 {
                // the last cell absorbs rounding drift between the marginals
                x[i][j] += s[i].max(d[j]).max(0.0);
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Simplex { m, n, cost, x, basic }
    }

    fn solve(mut self) -> Result<TransportPlan, TransportError> {
        let scale = self.cost.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs()));
        let tol = 1e-12 * scale.max(1.0);
        let max_pivots = 50 * (self.m + self.n) * (self.m + self.n) + 1000;
        let mut degenerate_run = 0usize;
        let mut pivots = 0;
        loop {
            let (u, v) = self.potentials();
            let bland = degenerate_run > 2 * (self.m + self.n);
            let Some((ei, ej)) = self.entering(&u, &v, tol, bland) else { break };
            if pivots >= max_pivots {
                return Err(TransportError::NonConvergence(pivots));
            }
            let theta = self.pivot(ei, ej);
            degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
            pivots += 1;
        }
        let mut cost = 0.0;
        for i in 0..self.m {
            for j in 0..self.n {
                cost += self.x[i][j] * self.cost[i][j];
            }
        }
        Ok(TransportPlan {
            cost,
            flow: FlowMatrix {
                rows: self.m,
                cols: self.n,
                flows: self.x,
            },
            pivots,
        })
    }

    /// Dual potentials with u_0 = 0, propagated over the basis tree.
    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            if node < m {
                let i = node;
                for j in 0..n {
                    if self.basic[i][j] && v[j].is_nan() {
                        v[j] = self.cost[i][j] - u[i];
                        queue.push_back(m + j);
                    }
                }
            } else {
                let j = node - m;
                for i in 0..m {
                    if self.basic[i][j] && u[i].is_nan() {
                        u[i] = self.cost[i][j] - v[j];
                        queue.push_back(i);
                    }
                }
            }
        }
        (u, v)
    }

    /// Most negative reduced cost (Dantzig), or the first negative one
    /// (Bland) once a long run of degenerate pivots has been seen.
    fn entering(&self, u: &[f64], v: &[f64], tol: f64, bland: bool) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic[i][j] {
                    continue;
                }
                let r = self.cost[i][j] - u[i] - v[j];
                if r < -tol {
                    if bland {
                        return Some((i, j));
                    }
                    if best.is_none_or(|b| r < b.2) {
                        best = Some((i, j, r));
                    }
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Tree path between row `i` and column `j`, as the list of basic cells
    /// walked from column `j` back to row `i`.
    fn tree_path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let (m, n) = (self.m, self.n);
        let mut parent = vec![usize::MAX; m + n];
        let start = m + j;
        parent[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            if node < m {
                for c in 0..n {
                    if self.basic[node][c] && parent[m + c] == usize::MAX {
                        parent[m + c] = node;
                        queue.push_back(m + c);
                    }
                }
            } else {
                let c = node - m;
                for r in 0..m {
                    if self.basic[r][c] && parent[r] == usize::MAX {
                        parent[r] = node;
                        queue.push_back(r);
                    }
                }
            }
        }
        // walk back from row i to column j, then reverse
        let mut cells = Vec::new();
        let mut node = i;
        while node != start {
            let p = parent[node];
            let cell = if node < m { (node, p - m) } else { (p, node - m) };
            cells.push(cell);
            node = p;
        }
        cells.reverse();
        cells
    }

    fn pivot(&mut self, ei: usize, ej: usize) -> f64 {
        let path = self.tree_path(ei, ej);
        // path[0] touches column ej and takes the first "−" sign
        let minus: Vec<(usize, usize)> = path.iter().copied().step_by(2).collect();
        let plus: Vec<(usize, usize)> = path.iter().copied().skip(1).step_by(2).collect();
        let (li, lj) = minus
            .iter()
            .copied()
            .min_by(|a, b| self.x[a.0][a.1].total_cmp(&self.x[b.0][b.1]).then(a.cmp(b)))
            .expect("cycle has a decreasing cell");
        let theta = self.x[li][lj];
        for &(r, c) in &minus {
            self.x[r][c] -= theta;
        }
        for &(r, c) in &plus {
            self.x[r][c] += theta;
        }
        self.x[ei][ej] += theta;
        self.x[li][lj] = 0.0;
        self.basic[ei][ej] = true;
        self.basic[li][lj] = false;
        for &(r, c) in &minus {
            if self.x[r][c] < 0.0 {
                self.x[r][c] = 0.0;
            }
        }
        theta
    }
}

// ---------------------------------------------------------------------------
// Cluster relationship matrix
// ---------------------------------------------------------------------------

/// How word-pair distances between two clusters are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrmAggregation {
    /// Sum divided by |i|·|j| (default).
    #[default]
    Mean,
    /// Plain sum over word pairs.
    Sum,
}

/// Symmetric cluster-distance matrix, min-max normalized over its
/// off-diagonal entries. Serialized as `{n, entries}` with row-major entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crm {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl Crm {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Row sums; each is the node score in the cluster graph.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| j != i).map(move |j| self.get(i, j)))
    }

    /// Min-max normalizes a raw symmetric matrix over its off-diagonal
    /// entries; when they are all equal every entry becomes 0.
    pub fn from_raw(raw: &[Vec<f64>]) -> Self {
        let n = raw.len();
        let off: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| raw[i][j])
            .collect();
        let lo = off.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = off.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && span > 0.0 {
                    entries[i * n + j] = ((raw[i][j] - lo) / span).clamp(0.0, 1.0);
                }
            }
        }
        Crm { n, entries }
    }

    /// Drops row and column `idx` without renormalizing.
    pub fn without(&self, idx: usize) -> Self {
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != idx).collect();
        let entries = keep.iter().flat_map(|&i| keep.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Crm {
            n: self.n - 1,
            entries,
        }
    }
}

/// Raw inter-cluster distances. Each word pair contributes the WMD between
/// the two one-word documents, which is the Euclidean distance of the two
/// embeddings (the only feasible flow moves all mass between them).
pub fn crm_raw(
    clusters: &[Vec<String>],
    table: &EmbeddingTable,
    aggregation: CrmAggregation,
) -> Result<Vec<Vec<f64>>, TransportError> {
    if clusters.len() < 2 {
        return Err(TransportError::TooFewClusters(clusters.len()));
    }
    let vectors = clusters
        .iter()
        .enumerate()
        .map(|(c, words)| {
            if words.is_empty() {
                return Err(TransportError::EmptyCluster(c));
            }
            words
                .iter()
                .map(|w| table.get(w).ok_or_else(|| TransportError::OutOfVocabulary(w.clone())))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = clusters.len();
    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut total = 0.0;
            for a in &vectors[i] {
                for b in &vectors[j] {
                    total += euclidean(a, b);
                }
            }
            if aggregation == CrmAggregation::Mean {
                total /= (vectors[i].len() * vectors[j].len()) as f64;
            }
            raw[i][j] = total;
            raw[j][i] = total;
        }
    }
    Ok(raw)
}

pub fn crm(clusters: &[Vec<String>], table: &EmbeddingTable, aggregation: CrmAggregation) -> Result<Crm, TransportError> {
    Ok(Crm::from_raw(&crm_raw(clusters, table, aggregation)?))
}
