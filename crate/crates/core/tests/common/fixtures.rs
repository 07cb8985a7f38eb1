//! Hand-built values for the golden-file layouts. Every value is a multiple of
//! 1/64 below 32 in magnitude, so it is exact at both f16 and f32.

use swsc::{ChannelClustering, CompressedWeight, LowRankFactors, StoragePrecision, WeightMatrix};

pub const GOLDEN_SEED: u64 = 0x5357_5343_0000_0001;

pub fn golden_weight() -> WeightMatrix {
    WeightMatrix::from_fn(64, 64, |i, j| ((i * 64 + j) % 2047) as f64 / 64.0 - 16.0).unwrap()
}

pub fn golden_compressed(precision: StoragePrecision) -> CompressedWeight {
    let (rows, cols, k, r) = (64usize, 64usize, 8usize, 4usize);
    let labels: Vec<u32> = (0..cols).map(|j| ((j * 5) % k) as u32).collect();
    let centroids: Vec<f64> = (0..k * rows).map(|x| (x % 1024) as f64 / 64.0 - 8.0).collect();
    let a: Vec<f64> = (0..rows * r)
        .map(|x| ((x * 7) % 256) as f64 / 64.0 - 2.0)
        .collect();
    let b: Vec<f64> = (0..r * cols)
        .map(|x| ((x * 3) % 128) as f64 / 64.0 - 1.0)
        .collect();
    let sigma = vec![4.0, 3.0, 2.0, 1.0];
    let clustering = ChannelClustering::from_parts(k, rows, labels, centroids).unwrap();
    let factors = LowRankFactors::from_parts(rows, cols, r, a, b, sigma).unwrap();
    CompressedWeight::from_parts(rows, cols, clustering, factors, precision, GOLDEN_SEED).unwrap()
}
