//! The four candidate clustering algorithms and BCubed scoring.
//!
//! K-Means (k-means++ seeding, Lloyd iterations), spherical K-Means, Ward
//! agglomerative clustering and a full-covariance Gaussian mixture fitted by
//! EM. All randomness comes from a caller-provided seed.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::squared_euclidean;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("no points to cluster")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the number of points ({n})")]
    TooFewPoints { k: usize, n: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimMismatch { index: usize, expected: usize, found: usize },
    #[error("point {0} is the zero vector; cosine distance is undefined")]
    ZeroVector(usize),
    #[error("full covariance needs more points ({n}) than dimensions ({dim})")]
    Underdetermined { n: usize, dim: usize },
    #[error("covariance of component {0} is singular despite regularization")]
    SingularCovariance(usize),
    #[error("labels has {found} entries, assignment has {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

pub const MAX_ITER: usize = 300;
pub const CENTROID_TOL: f64 = 1e-6;
pub const EM_TOL: f64 = 1e-7;
pub const COVARIANCE_REG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub centroids: Option<Vec<Vec<f64>>>,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster).collect()
    }

    /// True when some cluster id in `0..k` has no member.
    pub fn has_empty_cluster(&self) -> bool {
        self.sizes().contains(&0)
    }
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize, ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::Empty);
    }
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k > points.len() {
        return Err(ClusterError::TooFewPoints { k, n: points.len() });
    }
    let dim = points[0].len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(ClusterError::DimMismatch {
                index,
                expected: dim,
                found: p.len(),
            });
        }
    }
    Ok(dim)
}

// ---------------------------------------------------------------------------
// K-Means / spherical K-Means
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Geometry {
    Euclidean,
    Cosine,
}

impl Geometry {
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Geometry::Euclidean => squared_euclidean(a, b),
            Geometry::Cosine => 1.0 - dot(a, b),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let norm = dot(v, v).sqrt();
    (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect())
}

/// Lloyd-style K-Means. `n_init` restarts are run from independent k-means++
/// seedings and the lowest-objective run is kept (earliest on ties).
#[derive(Debug, Clone)]
pub struct KMeans {
    pub k: usize,
    pub seed: u64,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

/// Result of one K-Means fit. `objective_history[t]` is the objective after
/// iteration `t` (WCSS for Euclidean, Σ(1 − cos) for spherical).
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub objective: f64,
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeans {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            n_init: 10,
            max_iter: MAX_ITER,
            tol: CENTROID_TOL,
        }
    }

    pub fn n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init.max(1);
        self
    }

    pub fn fit(&self, points: &[Vec<f64>]) -> Result<KMeansFit, ClusterError> {
        validate(points, self.k)?;
        self.fit_geometry(points, Geometry::Euclidean)
    }

    pub fn fit_spherical(&self, points: &[Vec<f64>]) -> Result<KMeansFit, ClusterError> {
        validate(points, self.k)?;
        let unit = points
            .iter()
            .enumerate()
            .map(|(i, p)| normalized(p).ok_or(ClusterError::ZeroVector(i)))
            .collect::<Result<Vec<_>, _>>()?;
        self.fit_geometry(&unit, Geometry::Cosine)
    }

    fn fit_geometry(&self, points: &[Vec<f64>], geometry: Geometry) -> Result<KMeansFit, ClusterError> {
        let mut best: Option<KMeansFit> = None;
        for run in 0..self.n_init {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(run as u64);
            let fit = self.lloyd(points, geometry, &mut rng);
            if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
                best = Some(fit);
            }
        }
        Ok(best.expect("n_init >= 1"))
    }

    fn lloyd(&self, points: &[Vec<f64>], geometry: Geometry, rng: &mut ChaCha8Rng) -> KMeansFit {
        let k = self.k;
        let mut centroids = plus_plus_init(points, k, geometry, rng);
        let mut labels = vec![usize::MAX; points.len()];
        let mut history = Vec::new();
        let mut iterations = 0;
        for _ in 0..self.max_iter {
            iterations += 1;
            let mut new_labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids, geometry).0).collect();
            repair_empty(points, &mut new_labels, &centroids, k, geometry);
            let unchanged = new_labels == labels;
            labels = new_labels;
            let new_centroids = update_centroids(points, &labels, &centroids, geometry);
            let shift = centroids
                .iter()
                .zip(&new_centroids)
                .map(|(a, b)| squared_euclidean(a, b).sqrt())
                .fold(0.0, f64::max);
            centroids = new_centroids;
            history.push(objective(points, &labels, &centroids, geometry));
            if unchanged || shift < self.tol {
                break;
            }
        }
        let objective = *history.last().expect("at least one iteration");
        KMeansFit {
            assignment: ClusterAssignment {
                labels,
                k,
                centroids: Some(centroids),
            },
            objective,
            objective_history: history,
            iterations,
        }
    }
}

/// Nearest centroid; ties go to the lower cluster id.
fn nearest(p: &[f64], centroids: &[Vec<f64>], geometry: Geometry) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = geometry.distance(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, geometry: Geometry, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| geometry.distance(p, &centroids[0]).max(0.0)).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total <= 0.0 {
            // every point coincides with a chosen centroid
            (0..n).find(|&i| !centroids.iter().any(|c| c == &points[i])).unwrap_or(0)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if *d <= 0.0 {
                    continue;
                }
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centroids.push(points[pick].clone());
        let last = centroids.last().expect("just pushed");
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(geometry.distance(p, last).max(0.0));
        }
    }
    centroids
}

/// Refills empty clusters with the point farthest from its own centroid.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centroids: &[Vec<f64>], k: usize, geometry: Geometry) {
    loop {
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let far = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .map(|i| (i, geometry.distance(&points[i], &centroids[labels[i]])))
            .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        match far {
            Some((i, _)) => labels[i] = empty,
            None => return,
        }
    }
}

fn update_centroids(points: &[Vec<f64>], labels: &[usize], old: &[Vec<f64>], geometry: Geometry) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let k = old.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((sum, count), prev)| {
            if count == 0 {
                return prev.clone();
            }
            match geometry {
                Geometry::Euclidean => sum.into_iter().map(|s| s / count as f64).collect(),
                Geometry::Cosine => normalized(&sum).unwrap_or_else(|| prev.clone()),
            }
        })
        .collect()
}

fn objective(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>], geometry: Geometry) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| geometry.distance(p, &centroids[l]))
        .sum()
}

/// Within-cluster sum of squares of an arbitrary labelling.
pub fn wcss(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        centroids[l].iter_mut().zip(p).for_each(|(c, x)| *c += x);
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        if n > 0 {
            c.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    objective(points, labels, &centroids, Geometry::Euclidean)
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    Ok(KMeans::new(k, seed).fit(points)?.assignment)
}

/// K-Means under cosine distance; centroids are unit vectors.
pub fn spherical_kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    Ok(KMeans::new(k, seed).fit_spherical(points)?.assignment)
}

// ---------------------------------------------------------------------------
// Ward agglomerative clustering
// ---------------------------------------------------------------------------

/// One agglomeration step. Clusters are named by their lowest point index;
/// `cost` is the Ward increase in within-cluster sum of squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub cost: f64,
}

/// Full Ward merge sequence down to `stop_at` clusters, using the
/// Lance–Williams recurrence on squared Euclidean distances.
pub fn ward_merges(points: &[Vec<f64>], stop_at: usize) -> Result<Vec<Merge>, ClusterError> {
    validate(points, stop_at.max(1))?;
    let n = points.len();
    // d[i][j] holds twice the Ward merge cost between active clusters i and j
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = squared_euclidean(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(stop_at));
    for _ in 0..n.saturating_sub(stop_at) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in (0..n).filter(|&i| active[i]) {
            for j in ((i + 1)..n).filter(|&j| active[j]) {
                if d[i][j] < best.2 {
                    best = (i, j, d[i][j]);
                }
            }
        }
        let (a, b, dab) = best;
        for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
            let (nk, na, nb) = (size[k] as f64, size[a] as f64, size[b] as f64);
            let v = ((nk + na) * d[k][a] + (nk + nb) * d[k][b] - nk * dab) / (nk + na + nb);
            d[k][a] = v;
            d[a][k] = v;
        }
        size[a] += size[b];
        active[b] = false;
        merges.push(Merge {
            left: a,
            right: b,
            cost: dab / 2.0,
        });
    }
    Ok(merges)
}

/// Labels clusters in order of their lowest member index.
pub fn labels_from_merges(n: usize, merges: &[Merge]) -> Vec<usize> {
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while root[r] != r {
            r = root[r];
        }
        root[x] = r;
        r
    }
    for m in merges {
        let (a, b) = (find(&mut root, m.left), find(&mut root, m.right));
        root[b] = a;
    }
    let mut ids: HashMap<usize, usize> = HashMap::new();
    (0..n)
        .map(|i| {
            let r = find(&mut root, i);
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect()
}

pub fn agglomerative_ward(points: &[Vec<f64>], k: usize) -> Result<ClusterAssignment, ClusterError> {
    let merges = ward_merges(points, k)?;
    Ok(ClusterAssignment {
        labels: labels_from_merges(points.len(), &merges),
        k,
        centroids: None,
    })
}

// ---------------------------------------------------------------------------
// Gaussian mixture
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub params: GmmParams,
    pub assignment: ClusterAssignment,
    pub responsibilities: Vec<Vec<f64>>,
    /// Mean per-point log-likelihood of the parameters entering each E-step.
    pub log_likelihood_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Gmm {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub reg: f64,
}

impl Gmm {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: MAX_ITER,
            tol: EM_TOL,
            reg: COVARIANCE_REG,
        }
    }

    /// Initial responsibilities come from a single seeded K-Means run.
    pub fn fit(&self, points: &[Vec<f64>]) -> Result<GmmFit, ClusterError> {
        let dim = validate(points, self.k)?;
        if points.len() <= dim {
            return Err(ClusterError::Underdetermined { n: points.len(), dim });
        }
        let init = KMeans::new(self.k, self.seed).n_init(1).fit(points)?;
        let mut resp: Vec<Vec<f64>> = init
            .assignment
            .labels
            .iter()
            .map(|&l| (0..self.k).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut params = self.m_step(points, &resp);
        let mut history = Vec::new();
        for _ in 0..self.max_iter {
            let (r, ll) = self.e_step(points, &params)?;
            resp = r;
            let converged = history.last().is_some_and(|prev: &f64| (ll - prev).abs() < self.tol);
            history.push(ll);
            if converged {
                break;
            }
            params = self.m_step(points, &resp);
        }
        let labels = resp
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (c, &p)| if p > b.1 { (c, p) } else { b })
                    .0
            })
            .collect();
        Ok(GmmFit {
            assignment: ClusterAssignment {
                labels,
                k: self.k,
                centroids: Some(params.means.clone()),
            },
            params,
            responsibilities: resp,
            log_likelihood_history: history,
        })
    }

    fn m_step(&self, points: &[Vec<f64>], resp: &[Vec<f64>]) -> GmmParams {
        let n = points.len();
        let dim = points[0].len();
        let mut weights = Vec::with_capacity(self.k);
        let mut means = Vec::with_capacity(self.k);
        let mut covariances = Vec::with_capacity(self.k);
        for c in 0..self.k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum::<f64>() + 10.0 * f64::EPSILON;
            let mut mean = vec![0.0; dim];
            for (p, r) in points.iter().zip(resp) {
                mean.iter_mut().zip(p).for_each(|(m, x)| *m += r[c] * x);
            }
            mean.iter_mut().for_each(|m| *m /= nk);
            let mut cov = vec![vec![0.0; dim]; dim];
            for (p, r) in points.iter().zip(resp) {
                let diff: Vec<f64> = p.iter().zip(&mean).map(|(x, m)| x - m).collect();
                for i in 0..dim {
                    for j in i..dim {
                        cov[i][j] += r[c] * diff[i] * diff[j];
                    }
                }
            }
            for i in 0..dim {
                for j in i..dim {
                    let v = cov[i][j] / nk;
                    cov[i][j] = v;
                    cov[j][i] = v;
                }
                cov[i][i] += self.reg;
            }
            weights.push(nk / n as f64);
            means.push(mean);
            covariances.push(cov);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        GmmParams {
            weights,
            means,
            covariances,
        }
    }

    fn e_step(&self, points: &[Vec<f64>], params: &GmmParams) -> Result<(Vec<Vec<f64>>, f64), ClusterError> {
        let log_pdfs = component_log_pdfs(points, params)?;
        let mut resp = Vec::with_capacity(points.len());
        let mut total = 0.0;
        for row in log_pdfs {
            let weighted: Vec<f64> = row.iter().zip(&params.weights).map(|(lp, w)| lp + w.ln()).collect();
            let lse = log_sum_exp(&weighted);
            total += lse;
            resp.push(weighted.iter().map(|x| (x - lse).exp()).collect());
        }
        Ok((resp, total / points.len() as f64))
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `out[i][c]` = log N(points[i] | mean_c, cov_c).
fn component_log_pdfs(points: &[Vec<f64>], params: &GmmParams) -> Result<Vec<Vec<f64>>, ClusterError> {
    let dim = points[0].len();
    let log_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut out = vec![Vec::with_capacity(params.weights.len()); points.len()];
    for (c, (mean, cov)) in params.means.iter().zip(&params.covariances).enumerate() {
        let m = DMatrix::from_fn(dim, dim, |i, j| cov[i][j]);
        let chol = m.cholesky().ok_or(ClusterError::SingularCovariance(c))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * (0..dim).map(|i| l[(i, i)].ln()).sum::<f64>();
        for (i, p) in points.iter().enumerate() {
            let diff = DVector::from_iterator(dim, p.iter().zip(mean).map(|(x, m)| x - m));
            let z = l
                .solve_lower_triangular(&diff)
                .ok_or(ClusterError::SingularCovariance(c))?;
            out[i].push(-0.5 * (dim as f64 * log_2pi + log_det + z.norm_squared()));
        }
    }
    Ok(out)
}

pub fn gmm_em(points: &[Vec<f64>], k: usize, seed: u64) -> Result<(GmmParams, ClusterAssignment), ClusterError> {
    let fit = Gmm::new(k, seed).fit(points)?;
    Ok((fit.params, fit.assignment))
}

// ---------------------------------------------------------------------------
// BCubed
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcubedScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl BcubedScore {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }
}

/// Item-averaged BCubed precision and recall against gold categories.
pub fn bcubed<L: Eq + std::hash::Hash>(assignment: &ClusterAssignment, categories: &[L]) -> Result<BcubedScore, ClusterError> {
    bcubed_labels(&assignment.labels, categories)
}

pub fn bcubed_labels<C, L>(clusters: &[C], categories: &[L]) -> Result<BcubedScore, ClusterError>
where
    C: Eq + std::hash::Hash,
    L: Eq + std::hash::Hash,
{
    if clusters.len() != categories.len() {
        return Err(ClusterError::LengthMismatch {
            expected: clusters.len(),
            found: categories.len(),
        });
    }
    if clusters.is_empty() {
        return Ok(BcubedScore::new(0.0, 0.0));
    }
    let mut joint: HashMap<(&C, &L), usize> = HashMap::new();
    let mut cluster_size: HashMap<&C, usize> = HashMap::new();
    let mut category_size: HashMap<&L, usize> = HashMap::new();
    for (c, l) in clusters.iter().zip(categories) {
        *joint.entry((c, l)).or_default() += 1;
        *cluster_size.entry(c).or_default() += 1;
        *category_size.entry(l).or_default() += 1;
    }
    let (mut p, mut r) = (0.0, 0.0);
    for (c, l) in clusters.iter().zip(categories) {
        let same = joint[&(c, l)] as f64;
        p += same / cluster_size[c] as f64;
        r += same / category_size[l] as f64;
    }
    let n = clusters.len() as f64;
    Ok(BcubedScore::new(p / n, r / n))
}

// ---------------------------------------------------------------------------
// Bake-off
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    KMeans,
    Spherical,
    Ward,
    Gmm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::KMeans, Algorithm::Spherical, Algorithm::Ward, Algorithm::Gmm];

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "KMeans with Euclidean",
            Algorithm::Spherical => "Sphere clustering",
            Algorithm::Ward => "Agglomerative clustering",
            Algorithm::Gmm => "GMM clustering",
        }
    }

    pub fn run(self, points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
        match self {
            Algorithm::KMeans => kmeans(points, k, seed),
            Algorithm::Spherical => spherical_kmeans(points, k, seed),
            Algorithm::Ward => agglomerative_ward(points, k),
            Algorithm::Gmm => gmm_em(points, k, seed).map(|(_, a)| a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BakeoffRow {
    pub algorithm: Algorithm,
    pub name: String,
    pub score: BcubedScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BakeoffReport {
    pub k: usize,
    pub seed: u64,
    pub n_points: usize,
    pub rows: Vec<BakeoffRow>,
}

impl BakeoffReport {
    pub fn score(&self, algorithm: Algorithm) -> Option<BcubedScore> {
        self.rows.iter().find(|r| r.algorithm == algorithm).map(|r| r.score)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(9).max(9);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>6}  {:>7}", "Algorithm", "Precision", "Recall", "F score");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.2}  {:>6.2}  {:>7.2}",
                r.name, r.score.precision, r.score.recall, r.score.f1
            );
        }
        out
    }
}

/// Runs all four algorithms on the same points and scores each with BCubed.
pub fn bakeoff<L: Eq + std::hash::Hash>(points: &[Vec<f64>], labels: &[L], k: usize, seed: u64) -> Result<BakeoffReport, ClusterError> {
    if points.len() != labels.len() {
        return Err(ClusterError::LengthMismatch {
            expected: points.len(),
            found: labels.len(),
        });
    }
    let rows = Algorithm::ALL
        .iter()
        .map(|&alg| {
            let assignment = alg.run(points, k, seed)?;
            Ok(BakeoffRow {
                algorithm: alg,
                name: alg.display_name().to_string(),
                score: bcubed(&assignment, labels)?,
            })
        })
        .collect::<Result<Vec<_>, ClusterError>>()?;
    Ok(BakeoffReport {
        k,
        seed,
        n_points: points.len(),
        rows,
    })
}
