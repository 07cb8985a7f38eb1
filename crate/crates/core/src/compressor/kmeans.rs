//! Lloyd's K-Means over the columns (channels) of a weight matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SwscError};
use crate::linalg::WeightMatrix;

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Column count above which the assignment step is split across threads
/// when parallelism is requested.
const PARALLEL_MIN_COLUMNS: usize = 64;

/// Cluster labels for every column plus one representative per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelClustering {
    k: usize,
    dim: usize,
    labels: Vec<u32>,
    centroids: Vec<f64>,
}

impl ChannelClustering {
    /// Assembles a clustering from raw parts and checks its invariants:
    /// every label below `k`, no empty cluster, `k * dim` centroid values.
    pub fn from_parts(k: usize, dim: usize, labels: Vec<u32>, centroids: Vec<f64>) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(SwscError::param(format!(
                "clustering needs k >= 1 and dim >= 1, got k={k}, dim={dim}"
            )));
        }
        if centroids.len() != k * dim {
            return Err(SwscError::shape(format!(
                "expected {} centroid values for k={k}, dim={dim}, got {}",
                k * dim,
                centroids.len()
            )));
        }
        let mut counts = vec![0usize; k];
        for (j, &l) in labels.iter().enumerate() {
            let l = l as usize;
            if l >= k {
                return Err(SwscError::integrity(format!(
                    "label {l} of channel {j} is not below k={k}"
                )));
            }
            counts[l] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(SwscError::integrity(format!("cluster {empty} has no channels")));
        }
        if let Some(pos) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(SwscError::integrity(format!(
                "centroid value {pos} is not finite"
            )));
        }
        Ok(ChannelClustering {
            k,
            dim,
            labels,
            centroids,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of every centroid (the row count of the clustered matrix).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Centroids laid out one after another.
    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub(crate) fn centroids_mut(&mut self) -> &mut [f64] {
        &mut self.centroids
    }

    /// Sum of squared distances from every column of `w` to its centroid.
    pub fn objective(&self, w: &WeightMatrix) -> Result<f64> {
        check_consistent(self, w.rows(), w.cols())?;
        let columns = w.columns_contiguous();
        Ok(objective(&columns, self.dim, &self.labels, &self.centroids))
    }
}

/// Knobs for a clustering run.
#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Independent k-means++ initializations; the lowest objective wins.
    pub restarts: usize,
    /// Split the assignment step across the rayon pool. Output is identical
    /// to the sequential path.
    pub parallel: bool,
}

impl KMeansOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansOptions {
            k,
            seed,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            restarts: 1,
            parallel: false,
        }
    }
}

/// Result of [`kmeans_channels_with`], including the per-iteration objective.
#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub clustering: ChannelClustering,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every centroid update of the winning restart.
    pub history: Vec<f64>,
}

/// Lloyd's algorithm over the columns of `w`, greedy k-means++ seeded.
pub fn kmeans_channels(
    w: &WeightMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ChannelClustering> {
    let opts = KMeansOptions {
        max_iter,
        tol,
        ..KMeansOptions::new(k, seed)
    };
    Ok(kmeans_channels_with(w, &opts)?.clustering)
}

pub fn kmeans_channels_with(w: &WeightMatrix, opts: &KMeansOptions) -> Result<KMeansOutcome> {
    let n = w.cols();
    if opts.k < 1 || opts.k > n {
        return Err(SwscError::param(format!(
            "cluster count {} out of range 1..={n}",
            opts.k
        )));
    }
    if opts.k > u32::MAX as usize {
        return Err(SwscError::param("cluster count exceeds u32 label range"));
    }
    if opts.max_iter < 1 {
        return Err(SwscError::param("max_iter must be at least 1"));
    }
    if opts.restarts < 1 {
        return Err(SwscError::param("restarts must be at least 1"));
    }
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(SwscError::param(format!(
            "tolerance must be non-negative, got {}",
            opts.tol
        )));
    }

    let data = Columns {
        values: w.columns_contiguous(),
        dim: w.rows(),
        count: n,
    };

    let mut best: Option<KMeansOutcome> = None;
    for restart in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(restart as u64);
        let outcome = lloyd(&data, opts, &mut rng);
        let better = best.as_ref().is_none_or(|b| outcome.objective < b.objective);
        if better {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one restart"))
}

struct Columns {
    values: Vec<f64>,
    dim: usize,
    count: usize,
}

impl Columns {
    fn get(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_plus_plus(data: &Columns, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.count;
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.gen_range(0..n));
    let mut d2: Vec<f64> = (0..n)
        .map(|j| sq_dist(data.get(j), data.get(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // every column coincides with a chosen center; take the next unused index
            let pick = (0..n).find(|j| !chosen.contains(j)).expect("k <= n");
            chosen.push(pick);
            continue;
        }
        // draw several D²-weighted candidates, keep the one that lowers the potential most
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = sample_weighted(&d2, rng.gen::<f64>() * total);
            let next: Vec<f64> = d2
                .iter()
                .enumerate()
                .map(|(j, &d)| d.min(sq_dist(data.get(j), data.get(cand))))
                .collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, cand, next));
            }
        }
        let (_, pick, next) = best.expect("at least two trials");
        chosen.push(pick);
        d2 = next;
    }
    let mut centroids = Vec::with_capacity(k * data.dim);
    for &j in &chosen {
        centroids.extend_from_slice(data.get(j));
    }
    centroids
}

/// Index whose cumulative weight first exceeds `target`; zero weights are never picked.
fn sample_weighted(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut pick = None;
    for (j, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        pick = Some(j);
        if acc > target {
            break;
        }
    }
    pick.expect("positive total implies a positive weight")
}

/// Nearest centroid for column `j`; ties go to the lowest cluster index.
fn nearest(column: &[f64], centroids: &[f64], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(column, centroid);
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best
}

fn assign(data: &Columns, centroids: &[f64], parallel: bool, labels: &mut [u32], dists: &mut [f64]) {
    let dim = data.dim;
    if parallel && data.count >= PARALLEL_MIN_COLUMNS {
        labels
            .par_iter_mut()
            .zip(dists.par_iter_mut())
            .enumerate()
            .for_each(|(j, (l, d))| {
                (*l, *d) = nearest(data.get(j), centroids, dim);
            });
    } else {
        for j in 0..data.count {
            (labels[j], dists[j]) = nearest(data.get(j), centroids, dim);
        }
    }
}

/// Moves the farthest-from-centroid column of a multi-member cluster into
/// each empty cluster, in cluster-index order.
fn repair_empty(k: usize, labels: &mut [u32], dists: &mut [f64]) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l as usize] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for j in 0..labels.len() {
            if counts[labels[j] as usize] < 2 {
                continue;
            }
            if far.is_none_or(|f| dists[j] > dists[f]) {
                far = Some(j);
            }
        }
        let j = far.expect("k <= n leaves a multi-member cluster");
        counts[labels[j] as usize] -= 1;
        labels[j] = c as u32;
        counts[c] = 1;
        dists[j] = f64::NEG_INFINITY;
    }
}

fn means(data: &Columns, k: usize, labels: &[u32]) -> Vec<f64> {
    let dim = data.dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (j, &l) in labels.iter().enumerate() {
        let l = l as usize;
        counts[l] += 1;
        for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(data.get(j)) {
            *s += x;
        }
    }
    for (c, chunk) in sums.chunks_exact_mut(dim).enumerate() {
        let count = counts[c] as f64;
        chunk.iter_mut().for_each(|s| *s /= count);
    }
    sums
}

fn objective(columns: &[f64], dim: usize, labels: &[u32], centroids: &[f64]) -> f64 {
    columns
        .chunks_exact(dim)
        .zip(labels)
        .map(|(col, &l)| sq_dist(col, &centroids[l as usize * dim..(l as usize + 1) * dim]))
        .sum()
}

fn lloyd(data: &Columns, opts: &KMeansOptions, rng: &mut ChaCha8Rng) -> KMeansOutcome {
    let k = opts.k;
    let dim = data.dim;
    let mut centroids = kmeans_plus_plus(data, k, rng);
    let mut labels = vec![0u32; data.count];
    let mut dists = vec![0.0; data.count];
    assign(data, &centroids, opts.parallel, &mut labels, &mut dists);

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut next_labels = labels.clone();
    while iterations < opts.max_iter {
        iterations += 1;
        repair_empty(k, &mut labels, &mut dists);
        let updated = means(data, k, &labels);
        let movement = updated
            .chunks_exact(dim)
            .zip(centroids.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        history.push(objective(&data.values, dim, &labels, &centroids));

        assign(data, &centroids, opts.parallel, &mut next_labels, &mut dists);
        let stable = next_labels == labels;
        std::mem::swap(&mut labels, &mut next_labels);
        if stable || movement < opts.tol {
            break;
        }
    }

    // labels come from the last assignment; make centroids their exact means
    repair_empty(k, &mut labels, &mut dists);
    centroids = means(data, k, &labels);
    let final_objective = objective(&data.values, dim, &labels, &centroids);
    history.push(final_objective);

    KMeansOutcome {
        clustering: ChannelClustering {
            k,
            dim,
            labels,
            centroids,
        },
        objective: final_objective,
        iterations,
        history,
    }
}

pub(crate) fn check_consistent(c: &ChannelClustering, rows: usize, cols: usize) -> Result<()> {
    if c.dim != rows || c.labels.len() != cols {
        return Err(SwscError::shape(format!(
            "clustering with {} labels of {}-dim centroids does not fit a {rows}x{cols} matrix",
            c.labels.len(),
            c.dim
        )));
    }
    Ok(())
}

/// Rebuilds the matrix by substituting every column with its centroid.
pub fn restore_from_clusters(c: &ChannelClustering, rows: usize, cols: usize) -> Result<WeightMatrix> {
    check_consistent(c, rows, cols)?;
    WeightMatrix::from_fn(rows, cols, |i, j| c.centroid(c.labels[j] as usize)[i])
}
