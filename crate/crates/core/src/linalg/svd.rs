//! Truncated SVD via one-sided (Hestenes) Jacobi rotations.
//!
//! The working matrix is always tall: wide inputs are transposed first and the
//! roles of the singular vectors swapped back at the end. Every reduction runs
//! in a fixed sequential order, so results are bitwise reproducible.

use crate::error::{Result, SwscError};

use super::{matmul_raw, WeightMatrix};

/// Sweep cap for the Jacobi iteration.
pub const SVD_MAX_SWEEPS: usize = 1000;

/// Default convergence threshold on the normalized column inner products.
pub const SVD_TOLERANCE: f64 = 1e-10;

/// The `r` dominant singular triplets of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    left: WeightMatrix,
    singular_values: Vec<f64>,
    right: WeightMatrix,
}

impl SvdResult {
    /// `m x r`, orthonormal columns.
    pub fn left_vectors(&self) -> &WeightMatrix {
        &self.left
    }

    /// Non-increasing, non-negative.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `r x n`, orthonormal rows.
    pub fn right_vectors(&self) -> &WeightMatrix {
        &self.right
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// `left · diag(σ) · right`.
pub fn svd_reconstruct(svd: &SvdResult) -> WeightMatrix {
    let (m, r) = svd.left.shape();
    let n = svd.right.cols();
    let mut scaled = svd.left.values().to_vec();
    for row in scaled.chunks_exact_mut(r) {
        for (v, s) in row.iter_mut().zip(&svd.singular_values) {
            *v *= s;
        }
    }
    let values = matmul_raw(&scaled, svd.right.values(), m, r, n);
    WeightMatrix::new(m, n, values).expect("product of finite factors is finite")
}

/// Computes the `rank` dominant singular triplets of `a`.
///
/// Signs are canonical: the largest-magnitude entry of every left singular
/// vector is positive (first such entry on ties), with the matching right
/// vector flipped along with it.
pub fn truncated_svd(a: &WeightMatrix, rank: usize, tol: f64) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let max_rank = m.min(n);
    if rank == 0 || rank > max_rank {
        return Err(SwscError::param(format!(
            "rank {rank} out of range 1..={max_rank} for a {m}x{n} matrix"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SwscError::param(format!(
            "svd tolerance must be positive, got {tol}"
        )));
    }

    let transposed = m < n;
    let work = if transposed { a.transpose() } else { a.clone() };
    let thin = jacobi_thin(&work, rank, tol)?;

    // thin.u: columns of length work.rows(); thin.v: columns of length work.cols()
    let (mut left_cols, mut right_rows) = if transposed {
        (thin.v, thin.u)
    } else {
        (thin.u, thin.v)
    };

    for (u, v) in left_cols.iter_mut().zip(right_rows.iter_mut()) {
        let mut pivot = 0;
        for (i, x) in u.iter().enumerate() {
            if x.abs() > u[pivot].abs() {
                pivot = i;
            }
        }
        if u[pivot] < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let left = WeightMatrix::from_columns(&left_cols)?;
    let right = WeightMatrix::from_rows(&right_rows)?;
    Ok(SvdResult {
        left,
        singular_values: thin.sigma,
        right,
    })
}

struct ThinSvd {
    u: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    v: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (p, q) = (*xi, *yi);
        *xi = c * p - s * q;
        *yi = s * p + c * q;
    }
}

/// One-sided Jacobi on a tall matrix (`rows >= cols`).
fn jacobi_thin(a: &WeightMatrix, rank: usize, tol: f64) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    let mut sweeps = 0;
    let mut off = 0.0f64;
    while sweeps < SVD_MAX_SWEEPS {
        sweeps += 1;
        off = 0.0;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                let ratio = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                off = off.max(ratio);
                if ratio <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                let (head, tail) = cols.split_at_mut(q);
                rotate(&mut head[p], &mut tail[0], c, s);
                let (head, tail) = v.split_at_mut(q);
                rotate(&mut head[p], &mut tail[0], c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SwscError::Numerical {
            message: format!("jacobi svd did not converge on a {m}x{n} matrix"),
            sweeps,
            off_diagonal: off,
        });
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    order.truncate(rank);

    let sigma_max = norms[order[0]];
    let negligible = sigma_max * (m.max(n) as f64) * f64::EPSILON;

    let mut u: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            let s = norms[j];
            (s > negligible).then(|| cols[j].iter().map(|x| x / s).collect())
        })
        .collect();
    complete_orthonormal(&mut u, m);

    Ok(ThinSvd {
        u: u.into_iter().map(|c| c.expect("completed")).collect(),
        sigma: order.iter().map(|&j| norms[j]).collect(),
        v: order.iter().map(|&j| v[j].clone()).collect(),
    })
}

/// Fills `None` slots with unit vectors orthogonal to every filled slot,
/// drawn deterministically from the standard basis.
fn complete_orthonormal(basis: &mut [Option<Vec<f64>>], dim: usize) {
    let mut candidate = 0;
    for slot in 0..basis.len() {
        if basis[slot].is_some() {
            continue;
        }
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for b in basis.iter().flatten() {
                    let proj = dot(b, &e);
                    for (x, y) in e.iter_mut().zip(b) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                e.iter_mut().for_each(|x| *x /= norm);
                basis[slot] = Some(e);
                break;
            }
        }
    }
}
