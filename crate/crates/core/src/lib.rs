//! Weight-matrix compression by shared channel representatives.
//!
//! Columns ("channels") of a dense weight matrix are clustered with K-Means
//! and replaced by their cluster mean. The resulting residual is compressed
//! with a truncated SVD and added back on load. Round-to-nearest quantization
//! is provided as a matched-budget baseline.
//!
//! ```
//! use swsc::{compress, decompress, gen_synthetic, StoragePrecision};
//!
//! let w = gen_synthetic(32, 32, 4, 0.01, 7).unwrap();
//! let c = compress(&w, 4, 2, 7, StoragePrecision::F32).unwrap();
//! let restored = decompress(&c).unwrap();
//! assert_eq!(restored.shape(), (32, 32));
//! ```

pub mod archive;
pub mod baseline;
pub mod cli;
pub mod compressor;
pub mod error;
pub mod linalg;
pub mod metrics;

pub use archive::{read_archive, read_weight, write_archive, write_weight, Dtype};
pub use baseline::{rtn_quantize_dequantize, Granularity, RtnConfig};
pub use compressor::{
    compensate, compress, compress_with, decompress, kmeans_channels, residual, restore_from_clusters,
    ChannelClustering, CompressOptions, CompressedWeight, LowRankFactors, StoragePrecision,
};
pub use error::{Result, SwscError};
pub use linalg::{frobenius_norm, matmul, truncated_svd, SvdResult, WeightMatrix};
pub use metrics::{avg_bits, compare, gen_synthetic, mse, ComparisonReport, StorageReport};
