//! Dense matrix type and the few kernels the compression pipeline needs.

mod matrix;
mod svd;

pub use matrix::WeightMatrix;
pub use svd::{svd_reconstruct, truncated_svd, SvdResult, SVD_MAX_SWEEPS, SVD_TOLERANCE};

use crate::error::{Result, SwscError};

/// Standard matrix product `a · b`.
pub fn matmul(a: &WeightMatrix, b: &WeightMatrix) -> Result<WeightMatrix> {
    if a.cols() != b.rows() {
        return Err(SwscError::shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let values = matmul_raw(a.values(), b.values(), a.rows(), a.cols(), b.cols());
    WeightMatrix::new(a.rows(), b.cols(), values)
}

/// Row-major product of an `m x inner` block and an `inner x n` block.
/// `inner` may be zero, in which case the result is all zeros.
pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, inner: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * inner);
    debug_assert_eq!(b.len(), inner * n);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..inner {
            let aip = a[i * inner + p];
            if aip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
    out
}

pub fn frobenius_norm(a: &WeightMatrix) -> f64 {
    a.values().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖a − b‖_F / ‖a‖_F`; zero when both are zero.
pub fn relative_frobenius_error(reference: &WeightMatrix, approx: &WeightMatrix) -> Result<f64> {
    let diff = reference.sub(approx)?;
    let num = frobenius_norm(&diff);
    let den = frobenius_norm(reference);
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / den)
}
