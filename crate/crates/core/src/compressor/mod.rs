//! Shared-weight channel clustering with low-rank residual compensation.
//!
//! Compression runs four steps:
//!
//! 1. cluster the columns of `W` with K-Means ([`kmeans_channels`]),
//! 2. rebuild `W'` by substituting every column with its centroid,
//! 3. take the residual `W − W'`,
//! 4. keep its `r` dominant singular triplets as split factors `A·B`.
//!
//! Decompression is `W' + A·B`. Centroids are rounded to the storage width
//! before the residual is formed, so the low-rank term also absorbs the
//! codebook's storage error.

mod kmeans;

pub use kmeans::{
    kmeans_channels, kmeans_channels_with, restore_from_clusters, ChannelClustering, KMeansOptions,
    KMeansOutcome, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

use half::f16;

use crate::error::{Result, SwscError};
use crate::linalg::{matmul_raw, truncated_svd, WeightMatrix, SVD_TOLERANCE};

/// Storage width for centroids and factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoragePrecision {
    F16,
    F32,
}

impl StoragePrecision {
    pub fn bits(self) -> u32 {
        match self {
            StoragePrecision::F16 => 16,
            StoragePrecision::F32 => 32,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            16 => Some(StoragePrecision::F16),
            32 => Some(StoragePrecision::F32),
            _ => None,
        }
    }

    /// Rounds to the nearest representable value (ties to even).
    pub fn round(self, v: f64) -> f64 {
        match self {
            StoragePrecision::F16 => f16::from_f64(v).to_f64(),
            StoragePrecision::F32 => v as f32 as f64,
        }
    }

    fn round_all(self, values: &mut [f64], what: &str) -> Result<()> {
        for (i, v) in values.iter_mut().enumerate() {
            let r = self.round(*v);
            if !r.is_finite() {
                return Err(SwscError::param(format!(
                    "{what} value {} at index {i} overflows {}-bit storage",
                    *v,
                    self.bits()
                )));
            }
            *v = r;
        }
        Ok(())
    }
}

/// Rank-`r` split factors `A = U_r·diag(√σ)` and `B = diag(√σ)·V_rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    rank: usize,
    rows: usize,
    cols: usize,
    a_factor: Vec<f64>,
    b_factor: Vec<f64>,
    singular_values: Vec<f64>,
}

impl LowRankFactors {
    /// Rank-0 factors: no compensation.
    pub fn empty(rows: usize, cols: usize) -> Self {
        LowRankFactors {
            rank: 0,
            rows,
            cols,
            a_factor: Vec::new(),
            b_factor: Vec::new(),
            singular_values: Vec::new(),
        }
    }

    pub fn from_parts(
        rows: usize,
        cols: usize,
        rank: usize,
        a_factor: Vec<f64>,
        b_factor: Vec<f64>,
        singular_values: Vec<f64>,
    ) -> Result<Self> {
        if a_factor.len() != rows * rank || b_factor.len() != rank * cols || singular_values.len() != rank {
            return Err(SwscError::shape(format!(
                "rank-{rank} factors for {rows}x{cols} need {}+{}+{rank} values, got {}+{}+{}",
                rows * rank,
                rank * cols,
                a_factor.len(),
                b_factor.len(),
                singular_values.len()
            )));
        }
        let all = a_factor.iter().chain(&b_factor).chain(&singular_values);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(SwscError::integrity("factor values must be finite"));
        }
        Ok(LowRankFactors {
            rank,
            rows,
            cols,
            a_factor,
            b_factor,
            singular_values,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `rows x rank`, row-major.
    pub fn a_factor(&self) -> &[f64] {
        &self.a_factor
    }

    /// `rank x cols`, row-major.
    pub fn b_factor(&self) -> &[f64] {
        &self.b_factor
    }

    pub fn retained_singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `A · B` as a dense matrix (all zeros when the rank is 0).
    pub fn product(&self) -> WeightMatrix {
        let values = matmul_raw(&self.a_factor, &self.b_factor, self.rows, self.rank, self.cols);
        WeightMatrix::new(self.rows, self.cols, values).expect("finite factors")
    }
}

/// The stored form of one compressed weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedWeight {
    rows: usize,
    cols: usize,
    clustering: ChannelClustering,
    factors: LowRankFactors,
    precision: StoragePrecision,
    seed: u64,
}

impl CompressedWeight {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        clustering: ChannelClustering,
        factors: LowRankFactors,
        precision: StoragePrecision,
        seed: u64,
    ) -> Result<Self> {
        let c = CompressedWeight {
            rows,
            cols,
            clustering,
            factors,
            precision,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks the shape invariants between the parts.
    pub fn validate(&self) -> Result<()> {
        if self.clustering.dim() != self.rows || self.clustering.labels().len() != self.cols {
            return Err(SwscError::integrity(format!(
                "clustering ({} labels, {}-dim centroids) does not match {}x{}",
                self.clustering.labels().len(),
                self.clustering.dim(),
                self.rows,
                self.cols
            )));
        }
        if self.factors.rows != self.rows || self.factors.cols != self.cols {
            return Err(SwscError::integrity(format!(
                "factors built for {}x{} attached to {}x{}",
                self.factors.rows, self.factors.cols, self.rows, self.cols
            )));
        }
        if self.factors.rank > self.rows.min(self.cols) {
            return Err(SwscError::integrity(format!(
                "factor rank {} exceeds min dimension",
                self.factors.rank
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn clustering(&self) -> &ChannelClustering {
        &self.clustering
    }

    pub fn factors(&self) -> &LowRankFactors {
        &self.factors
    }

    pub fn precision(&self) -> StoragePrecision {
        self.precision
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Everything [`compress_with`] needs.
#[derive(Debug, Clone)]
pub struct CompressOptions {
    pub clusters: usize,
    pub rank: usize,
    pub seed: u64,
    pub precision: StoragePrecision,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub parallel: bool,
}

impl CompressOptions {
    pub fn new(clusters: usize, rank: usize, seed: u64, precision: StoragePrecision) -> Self {
        CompressOptions {
            clusters,
            rank,
            seed,
            precision,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            restarts: 1,
            parallel: false,
        }
    }

    fn kmeans(&self) -> KMeansOptions {
        KMeansOptions {
            k: self.clusters,
            seed: self.seed,
            max_iter: self.max_iter,
            tol: self.tol,
            restarts: self.restarts,
            parallel: self.parallel,
        }
    }
}

/// Element-wise `w − restored`.
pub fn residual(w: &WeightMatrix, restored: &WeightMatrix) -> Result<WeightMatrix> {
    w.sub(restored)
}

/// Rank-`r` split factors of `err`. `r = 0` yields empty factors.
pub fn compensate(err: &WeightMatrix, r: usize) -> Result<LowRankFactors> {
    let (m, n) = err.shape();
    if r > m.min(n) {
        return Err(SwscError::param(format!(
            "rank {r} out of range 0..={} for a {m}x{n} residual",
            m.min(n)
        )));
    }
    if r == 0 {
        return Ok(LowRankFactors::empty(m, n));
    }
    let svd = truncated_svd(err, r, SVD_TOLERANCE)?;
    let roots: Vec<f64> = svd.singular_values().iter().map(|s| s.sqrt()).collect();

    let mut a_factor = svd.left_vectors().values().to_vec();
    for row in a_factor.chunks_exact_mut(r) {
        for (v, s) in row.iter_mut().zip(&roots) {
            *v *= s;
        }
    }
    let mut b_factor = svd.right_vectors().values().to_vec();
    for (row, s) in b_factor.chunks_exact_mut(n).zip(&roots) {
        row.iter_mut().for_each(|v| *v *= s);
    }
    LowRankFactors::from_parts(m, n, r, a_factor, b_factor, svd.singular_values().to_vec())
}

/// Compresses with default K-Means settings.
pub fn compress(
    w: &WeightMatrix,
    k: usize,
    r: usize,
    seed: u64,
    precision: StoragePrecision,
) -> Result<CompressedWeight> {
    compress_with(w, &CompressOptions::new(k, r, seed, precision))
}

pub fn compress_with(w: &WeightMatrix, opts: &CompressOptions) -> Result<CompressedWeight> {
    let (m, n) = w.shape();
    if opts.rank > m.min(n) {
        return Err(SwscError::param(format!(
            "rank {} out of range 0..={} for a {m}x{n} matrix",
            opts.rank,
            m.min(n)
        )));
    }
    let mut clustering = kmeans_channels_with(w, &opts.kmeans())?.clustering;
    opts.precision.round_all(clustering.centroids_mut(), "centroid")?;

    let restored = restore_from_clusters(&clustering, m, n)?;
    let err = residual(w, &restored)?;
    let factors = compensate(&err, opts.rank)?;
    let LowRankFactors {
        rank,
        mut a_factor,
        mut b_factor,
        mut singular_values,
        ..
    } = factors;
    opts.precision.round_all(&mut a_factor, "factor")?;
    opts.precision.round_all(&mut b_factor, "factor")?;
    // singular values are always stored at 32 bits
    StoragePrecision::F32.round_all(&mut singular_values, "singular")?;
    let factors = LowRankFactors::from_parts(m, n, rank, a_factor, b_factor, singular_values)?;

    CompressedWeight::from_parts(m, n, clustering, factors, opts.precision, opts.seed)
}

/// `W' + A·B`.
pub fn decompress(c: &CompressedWeight) -> Result<WeightMatrix> {
    c.validate()?;
    let restored = restore_from_clusters(&c.clustering, c.rows, c.cols)
        .map_err(|e| SwscError::integrity(e.to_string()))?;
    if c.factors.rank == 0 {
        return Ok(restored);
    }
    let correction = c.factors.product();
    restored
        .add(&correction)
        .map_err(|e| SwscError::integrity(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, relative_frobenius_error};

    fn pseudo_random(rows: usize, cols: usize, salt: u64) -> WeightMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(salt);
        WeightMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn residual_cases() {
        let w = WeightMatrix::from_rows(&[[2.0, 2.0], [2.0, 2.0]]).unwrap();
        let ones = WeightMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(residual(&w, &w).unwrap(), WeightMatrix::zeros(2, 2).unwrap());
        assert_eq!(residual(&w, &WeightMatrix::zeros(2, 2).unwrap()).unwrap(), w);
        assert_eq!(residual(&w, &ones).unwrap(), ones);
        assert!(matches!(
            residual(&w, &WeightMatrix::zeros(2, 3).unwrap()),
            Err(SwscError::Shape(_))
        ));
    }

    #[test]
    fn compensate_zero_residual() {
        let z = WeightMatrix::zeros(5, 4).unwrap();
        for r in 0..=4 {
            let f = compensate(&z, r).unwrap();
            assert_eq!(f.rank(), r);
            assert!(f.retained_singular_values().iter().all(|&s| s == 0.0));
            assert_eq!(f.product(), z);
        }
        assert!(matches!(compensate(&z, 5), Err(SwscError::Parameter(_))));
    }

    #[test]
    fn compensate_rank_one() {
        let u = [2.0, -1.0, 0.5];
        let v = [1.0, 3.0, -2.0, 0.25];
        let err = WeightMatrix::from_fn(3, 4, |i, j| u[i] * v[j]).unwrap();
        let f = compensate(&err, 1).unwrap();
        assert!(relative_frobenius_error(&err, &f.product()).unwrap() < 1e-5);
    }

    #[test]
    fn duplicated_columns_round_trip_exactly() {
        let protos = [[1.5f32, -2.0, 0.75], [3.0, 0.5, -1.25]];
        let columns: Vec<Vec<f64>> = [0, 1, 0, 0, 1]
            .iter()
            .map(|&p: &usize| protos[p].iter().map(|&x| x as f64).collect())
            .collect();
        let w = WeightMatrix::from_columns(&columns).unwrap();
        for precision in [StoragePrecision::F32, StoragePrecision::F16] {
            let c = compress(&w, 2, 0, 9, precision).unwrap();
            assert_eq!(decompress(&c).unwrap(), w);
            assert_eq!(
                decompress(&c).unwrap(),
                restore_from_clusters(c.clustering(), 3, 5).unwrap()
            );
        }
    }

    #[test]
    fn full_rank_cancels_clustering_error() {
        let w = pseudo_random(12, 10, 4);
        let c = compress(&w, 1, 10, 0, StoragePrecision::F32).unwrap();
        assert!(relative_frobenius_error(&w, &decompress(&c).unwrap()).unwrap() < 1e-4);
    }

    #[test]
    fn f16_storage_rounds_centroids_and_factors() {
        let w = pseudo_random(8, 8, 2);
        let c = compress(&w, 3, 2, 1, StoragePrecision::F16).unwrap();
        let all = c
            .clustering()
            .centroids()
            .iter()
            .chain(c.factors().a_factor())
            .chain(c.factors().b_factor());
        for &v in all {
            assert_eq!(f16::from_f64(v).to_f64(), v);
        }
        for &s in c.factors().retained_singular_values() {
            assert_eq!(s as f32 as f64, s);
        }
    }

    #[test]
    fn f16_overflow_is_reported() {
        let w = WeightMatrix::from_rows(&[[1.0e6, 1.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(
            compress(&w, 1, 0, 0, StoragePrecision::F16),
            Err(SwscError::Parameter(_))
        ));
    }

    #[test]
    fn rank_out_of_range_rejected() {
        let w = pseudo_random(4, 6, 1);
        assert!(matches!(
            compress(&w, 2, 5, 0, StoragePrecision::F32),
            Err(SwscError::Parameter(_))
        ));
    }

    #[test]
    fn decompress_detects_inconsistent_parts() {
        let w = pseudo_random(4, 4, 3);
        let good = compress(&w, 2, 1, 0, StoragePrecision::F32).unwrap();
        let bad = CompressedWeight {
            factors: LowRankFactors::empty(3, 4),
            ..good.clone()
        };
        assert!(matches!(decompress(&bad), Err(SwscError::Integrity(_))));
        assert!(frobenius_norm(&decompress(&good).unwrap()) > 0.0);
    }
}
