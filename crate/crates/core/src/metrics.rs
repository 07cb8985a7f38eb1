//! Bit-budget accounting, error metrics, SWSC-vs-RTN comparison and the
//! synthetic clustered-matrix generator.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::baseline::{rtn_quantize_dequantize, Granularity, RtnConfig};
use crate::compressor::{compress_with, decompress, CompressOptions, CompressedWeight, StoragePrecision};
use crate::error::{Result, SwscError};
use crate::linalg::{relative_frobenius_error, WeightMatrix};

/// Storage cost of one compressed matrix.
///
/// `avg_bits_paper` counts codebook and factor values only, at `value_bits`
/// per value. `avg_bits_total` adds the label stream at `ceil(log2 k)` bits
/// per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageReport {
    pub rows: u64,
    pub cols: u64,
    pub clusters: u64,
    pub rank: u64,
    pub value_bits: u32,
    pub codebook_bits: u64,
    pub factor_bits: u64,
    pub label_bits: u64,
    pub total_bits: u64,
    pub avg_bits_paper: f64,
    pub avg_bits_total: f64,
    pub compression_ratio: f64,
}

fn ceil_log2(k: u64) -> u64 {
    if k <= 1 {
        0
    } else {
        (64 - (k - 1).leading_zeros()) as u64
    }
}

/// Bit budget of an `m x n` matrix stored as `k` centroids plus rank-`r`
/// factors at `value_bits` per value.
///
/// With `include_labels` unset the label stream is left out of every field
/// (`label_bits = 0`), so `avg_bits_total == avg_bits_paper`.
pub fn avg_bits(
    m: u64,
    n: u64,
    k: u64,
    r: u64,
    value_bits: u32,
    include_labels: bool,
) -> Result<StorageReport> {
    if m == 0 || n == 0 {
        return Err(SwscError::param(format!(
            "matrix dimensions must be positive, got {m}x{n}"
        )));
    }
    if k < 1 {
        return Err(SwscError::param("cluster count must be at least 1"));
    }
    if value_bits != 16 && value_bits != 32 {
        return Err(SwscError::param(format!(
            "value_bits must be 16 or 32, got {value_bits}"
        )));
    }
    let vb = value_bits as u64;
    let overflow = || SwscError::param("bit budget overflows u64");
    let elements = m.checked_mul(n).ok_or_else(overflow)?;
    let codebook_values = k.checked_mul(m).ok_or_else(overflow)?;
    let factor_values = (m + n).checked_mul(r).ok_or_else(overflow)?;
    let codebook_bits = codebook_values.checked_mul(vb).ok_or_else(overflow)?;
    let factor_bits = factor_values.checked_mul(vb).ok_or_else(overflow)?;
    let label_bits = if include_labels { n * ceil_log2(k) } else { 0 };
    let total_bits = codebook_bits + factor_bits + label_bits;

    let denom = elements as f64;
    // the label vector counts as one more length-n row of values
    let stored_values = codebook_values + n + factor_values;
    Ok(StorageReport {
        rows: m,
        cols: n,
        clusters: k,
        rank: r,
        value_bits,
        codebook_bits,
        factor_bits,
        label_bits,
        total_bits,
        avg_bits_paper: (codebook_bits + factor_bits) as f64 / denom,
        avg_bits_total: total_bits as f64 / denom,
        compression_ratio: stored_values as f64 / denom,
    })
}

impl StorageReport {
    pub fn for_compressed(c: &CompressedWeight, include_labels: bool) -> Result<StorageReport> {
        avg_bits(
            c.rows() as u64,
            c.cols() as u64,
            c.clustering().k() as u64,
            c.factors().rank() as u64,
            c.precision().bits(),
            include_labels,
        )
    }

    fn elements(&self) -> f64 {
        (self.rows * self.cols) as f64
    }

    pub fn codebook_avg_bits(&self) -> f64 {
        self.codebook_bits as f64 / self.elements()
    }

    pub fn factor_avg_bits(&self) -> f64 {
        self.factor_bits as f64 / self.elements()
    }

    pub fn label_avg_bits(&self) -> f64 {
        self.label_bits as f64 / self.elements()
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rows={}", self.rows);
        let _ = writeln!(s, "cols={}", self.cols);
        let _ = writeln!(s, "clusters={}", self.clusters);
        let _ = writeln!(s, "rank={}", self.rank);
        let _ = writeln!(s, "value_bits={}", self.value_bits);
        let _ = writeln!(s, "codebook_bits={}", self.codebook_bits);
        let _ = writeln!(s, "factor_bits={}", self.factor_bits);
        let _ = writeln!(s, "label_bits={}", self.label_bits);
        let _ = writeln!(s, "total_bits={}", self.total_bits);
        let _ = writeln!(s, "avg_bits_paper={}", self.avg_bits_paper);
        let _ = writeln!(s, "avg_bits_total={}", self.avg_bits_total);
        let _ = writeln!(s, "compression_ratio={}", self.compression_ratio);
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "storage report: {}x{} matrix, k={} clusters, rank={}, {}-bit values",
            self.rows, self.cols, self.clusters, self.rank, self.value_bits
        );
        let _ = writeln!(s, "  {:<22} {:>14} {:>10}", "component", "bits", "avg bits");
        let rows = [
            ("codebook", self.codebook_bits, self.codebook_avg_bits()),
            ("low-rank factors", self.factor_bits, self.factor_avg_bits()),
            ("labels", self.label_bits, self.label_avg_bits()),
        ];
        for (name, bits, avg) in rows {
            let _ = writeln!(s, "  {name:<22} {bits:>14} {avg:>10.4}");
        }
        let _ = writeln!(
            s,
            "  {:<22} {:>14} {:>10.4}",
            "total", self.total_bits, self.avg_bits_total
        );
        let _ = writeln!(s, "  avg bits (values only)  {:.4}", self.avg_bits_paper);
        let _ = writeln!(s, "  avg bits (with labels)  {:.4}", self.avg_bits_total);
        let _ = writeln!(s, "  compression ratio       {:.4}", self.compression_ratio);
        s
    }
}

/// Mean squared element-wise difference.
pub fn mse(a: &WeightMatrix, b: &WeightMatrix) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(diff.values().iter().map(|v| v * v).sum::<f64>() / diff.values().len() as f64)
}

/// Clustered test matrix: `k_true` standard-normal centre columns, column `j`
/// copies centre `j % k_true`, plus i.i.d. Gaussian noise of std `noise_sigma`.
pub fn gen_synthetic(m: usize, n: usize, k_true: usize, noise_sigma: f64, seed: u64) -> Result<WeightMatrix> {
    if m == 0 || n == 0 {
        return Err(SwscError::param(format!(
            "dimensions must be positive, got {m}x{n}"
        )));
    }
    if k_true < 1 || k_true > n {
        return Err(SwscError::param(format!(
            "true cluster count {k_true} out of range 1..={n}"
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(SwscError::param(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<f64> = (0..k_true * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut values = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let noise: f64 = StandardNormal.sample(&mut rng);
            values.push(centers[(j % k_true) * m + i] + noise_sigma * noise);
        }
    }
    WeightMatrix::new(m, n, values)
}

/// Generating partition of [`gen_synthetic`].
pub fn synthetic_labels(n: usize, k_true: usize) -> Vec<u32> {
    (0..n).map(|j| (j % k_true) as u32).collect()
}

/// The `(k, r)` grid point whose values-only average bits is nearest a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedBudget {
    pub clusters: u64,
    pub rank: u64,
    pub avg_bits_paper: f64,
    /// `avg_bits_paper − target`.
    pub gap: f64,
}

/// Searches `k ∈ {1, 2, 4, …} ≤ n` and `r ∈ {0, 1, 2, 4, …} ≤ min(m, n)`.
/// Ties favour the smaller rank, then the smaller `k`.
pub fn matched_budget(m: u64, n: u64, target_bits: f64, value_bits: u32) -> Result<MatchedBudget> {
    let powers = |limit: u64| {
        std::iter::successors(Some(1u64), |&p| p.checked_mul(2)).take_while(move |&p| p <= limit)
    };
    let ranks: Vec<u64> = std::iter::once(0).chain(powers(m.min(n))).collect();
    let mut best: Option<MatchedBudget> = None;
    for &r in &ranks {
        for k in powers(n) {
            let report = avg_bits(m, n, k, r, value_bits, false)?;
            let gap = report.avg_bits_paper - target_bits;
            if best.is_none_or(|b| gap.abs() < b.gap.abs()) {
                best = Some(MatchedBudget {
                    clusters: k,
                    rank: r,
                    avg_bits_paper: report.avg_bits_paper,
                    gap,
                });
            }
        }
    }
    best.ok_or_else(|| SwscError::param("empty search grid"))
}

#[derive(Debug, Clone)]
pub struct CompareParams {
    pub clusters: usize,
    pub rank: usize,
    pub seed: u64,
    pub rtn_bits: u32,
    pub granularity: Granularity,
    pub precision: StoragePrecision,
    pub restarts: usize,
    pub parallel: bool,
}

impl CompareParams {
    pub fn new(clusters: usize, rank: usize, seed: u64, rtn_bits: u32, granularity: Granularity) -> Self {
        CompareParams {
            clusters,
            rank,
            seed,
            rtn_bits,
            granularity,
            precision: StoragePrecision::F16,
            restarts: 1,
            parallel: false,
        }
    }
}

/// Reconstruction error of both methods on one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub swsc_mse: f64,
    pub rtn_mse: f64,
    pub swsc_frobenius_rel: f64,
    pub rtn_frobenius_rel: f64,
    pub swsc_avg_bits: f64,
    pub rtn_avg_bits: f64,
    pub k: usize,
    pub r: usize,
    pub seed: u64,
    pub bits: u32,
    pub granularity: Granularity,
    pub value_bits: u32,
    pub matched_k: u64,
    pub matched_r: u64,
    pub matched_avg_bits: f64,
    pub budget_gap: f64,
}

/// Runs SWSC and RTN on `w` and reports both errors side by side.
pub fn compare(w: &WeightMatrix, params: &CompareParams) -> Result<ComparisonReport> {
    let mut opts = CompressOptions::new(params.clusters, params.rank, params.seed, params.precision);
    opts.restarts = params.restarts;
    opts.parallel = params.parallel;
    let compressed = compress_with(w, &opts)?;
    let swsc = decompress(&compressed)?;
    let storage = StorageReport::for_compressed(&compressed, false)?;

    let cfg = RtnConfig::new(params.rtn_bits, params.granularity)?;
    let rtn = rtn_quantize_dequantize(w, &cfg);

    let (m, n) = (w.rows() as u64, w.cols() as u64);
    let matched = matched_budget(m, n, params.rtn_bits as f64, params.precision.bits())?;

    Ok(ComparisonReport {
        swsc_mse: mse(w, &swsc)?,
        rtn_mse: mse(w, &rtn)?,
        swsc_frobenius_rel: relative_frobenius_error(w, &swsc)?,
        rtn_frobenius_rel: relative_frobenius_error(w, &rtn)?,
        swsc_avg_bits: storage.avg_bits_paper,
        rtn_avg_bits: params.rtn_bits as f64,
        k: params.clusters,
        r: params.rank,
        seed: params.seed,
        bits: params.rtn_bits,
        granularity: params.granularity,
        value_bits: params.precision.bits(),
        matched_k: matched.clusters,
        matched_r: matched.rank,
        matched_avg_bits: matched.avg_bits_paper,
        budget_gap: matched.gap,
    })
}

impl ComparisonReport {
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "swsc_mse={}", self.swsc_mse);
        let _ = writeln!(s, "rtn_mse={}", self.rtn_mse);
        let _ = writeln!(s, "swsc_frobenius_rel={}", self.swsc_frobenius_rel);
        let _ = writeln!(s, "rtn_frobenius_rel={}", self.rtn_frobenius_rel);
        let _ = writeln!(s, "swsc_avg_bits={}", self.swsc_avg_bits);
        let _ = writeln!(s, "rtn_avg_bits={}", self.rtn_avg_bits);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "r={}", self.r);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "bits={}", self.bits);
        let _ = writeln!(s, "granularity={}", self.granularity);
        let _ = writeln!(s, "value_bits={}", self.value_bits);
        let _ = writeln!(s, "matched_k={}", self.matched_k);
        let _ = writeln!(s, "matched_r={}", self.matched_r);
        let _ = writeln!(s, "matched_avg_bits={}", self.matched_avg_bits);
        let _ = writeln!(s, "budget_gap={}", self.budget_gap);
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "comparison: k={} r={} seed={} ({}-bit values) vs rtn {}-bit {}",
            self.k, self.r, self.seed, self.value_bits, self.bits, self.granularity
        );
        let _ = writeln!(
            s,
            "  {:<8} {:>10} {:>14} {:>14}",
            "method", "avg bits", "mse", "rel frob"
        );
        let _ = writeln!(
            s,
            "  {:<8} {:>10.4} {:>14.6e} {:>14.6e}",
            "swsc", self.swsc_avg_bits, self.swsc_mse, self.swsc_frobenius_rel
        );
        let _ = writeln!(
            s,
            "  {:<8} {:>10.4} {:>14.6e} {:>14.6e}",
            "rtn", self.rtn_avg_bits, self.rtn_mse, self.rtn_frobenius_rel
        );
        let _ = writeln!(
            s,
            "  nearest budget match for {} bits: k={} r={} ({:.4} avg bits, gap {:+.4})",
            self.bits, self.matched_k, self.matched_r, self.matched_avg_bits, self.budget_gap
        );
        s
    }
}
