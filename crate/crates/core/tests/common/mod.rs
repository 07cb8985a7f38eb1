//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod fixtures;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swsc::WeightMatrix;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> WeightMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WeightMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

/// All singular values of `a`, descending, from the symmetric eigendecomposition
/// of the Gram matrix `aᵀa` (or `aaᵀ`, whichever is smaller).
pub fn gram_singular_values(a: &WeightMatrix) -> Vec<f64> {
    let m = DMatrix::from_row_slice(a.rows(), a.cols(), a.values());
    let gram = if a.rows() >= a.cols() {
        m.transpose() * &m
    } else {
        &m * m.transpose()
    };
    let eig = gram.symmetric_eigen();
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `sqrt(Σ_{i >= r} σ_i²)` from the Gram oracle.
pub fn discarded_norm(a: &WeightMatrix, r: usize) -> f64 {
    gram_singular_values(a)[r..]
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt()
}

/// Every partition of `0..n` into exactly `k` non-empty groups, as label vectors
/// in restricted-growth form.
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, n: usize, k: usize, used: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            if used as usize == k {
                out.push(cur.clone());
            }
            return;
        }
        // not enough elements left to open the missing groups
        if (k - used as usize) > n - i {
            return;
        }
        for g in 0..used {
            cur.push(g);
            rec(i + 1, n, k, used, cur, out);
            cur.pop();
        }
        if (used as usize) < k {
            cur.push(used);
            rec(i + 1, n, k, used + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// K-Means objective of a labelling with centroids at the group means.
pub fn partition_objective(w: &WeightMatrix, labels: &[u32], k: usize) -> f64 {
    let m = w.rows();
    let mut sums = vec![0.0; k * m];
    let mut counts = vec![0usize; k];
    for (j, &l) in labels.iter().enumerate() {
        counts[l as usize] += 1;
        for i in 0..m {
            sums[l as usize * m + i] += w.get(i, j);
        }
    }
    let mut total = 0.0;
    for (j, &l) in labels.iter().enumerate() {
        for i in 0..m {
            let mean = sums[l as usize * m + i] / counts[l as usize] as f64;
            total += (w.get(i, j) - mean).powi(2);
        }
    }
    total
}

/// Brute-force minimum of the K-Means objective over all partitions.
pub fn brute_force_min(w: &WeightMatrix, k: usize) -> (f64, Vec<u32>) {
    set_partitions(w.cols(), k)
        .into_iter()
        .map(|p| (partition_objective(w, &p, k), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

/// True when two labellings describe the same partition.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Columns drawn from Gaussian blobs whose centres sit `10·σ·√2` apart;
/// column `j` belongs to blob `j % blobs`. Needs `rows >= blobs`.
pub fn separated_blobs(rows: usize, cols: usize, blobs: usize, sigma: f64, seed: u64) -> WeightMatrix {
    assert!(rows >= blobs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..blobs)
        .map(|b| {
            (0..rows)
                .map(|i| if i == b { 10.0 * sigma } else { 0.0 })
                .collect()
        })
        .collect();
    let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
    WeightMatrix::from_fn(rows, cols, |i, j| centres[j % blobs][i] + rng.sample(normal)).unwrap()
}
