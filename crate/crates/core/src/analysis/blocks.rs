use nalgebra::DVector;
use serde::Serialize;

use super::{check_dense, linalg};
use crate::error::{Error, Result};
use crate::system::SaddleSystem;

/// Residual norms split along the SVD of `B`.
#[derive(Debug, Clone, Serialize)]
pub struct SvdBlockReport {
    pub s: usize,
    /// `‖r̃ᵃ_k‖`: the first `n + s` entries of `blockdiag(U, V)ᵀ r_k`.
    pub residual_range_component: Vec<f64>,
    /// `‖r̃ᵇ_k‖`: the last `m − s` entries, the part no iteration can remove.
    pub residual_null_component: Vec<f64>,
    /// A singular value sits close to the rank threshold.
    pub rank_gap_ambiguous: bool,
}

/// Projects each residual `r_k` (length `n + m`) onto `blockdiag(U, V)` where
/// `B = U[Σ 0]Vᵀ`.
pub fn residual_block_decomposition(
    sys: &SaddleSystem,
    residuals: &[Vec<f64>],
) -> Result<SvdBlockReport> {
    check_dense(sys)?;
    let (n, m) = (sys.n(), sys.m());
    let b = linalg::sparse_to_na(sys.b_matrix());
    let split = linalg::range_null_split(&b)?;
    let s = split.rank();
    let u = split.u_full();
    let mut range = Vec::with_capacity(residuals.len());
    let mut null = Vec::with_capacity(residuals.len());
    for r in residuals {
        Error::check_len("residual vector", n + m, r.len())?;
        let rx = DVector::from_column_slice(&r[..n]);
        let ux = u.transpose() * rx;
        let (va, vb) = if m > 0 {
            let ry = DVector::from_column_slice(&r[n..]);
            let vy = split.v.transpose() * ry;
            let a: f64 = vy.rows(0, s).norm_squared();
            let bnorm = vy.rows(s, m - s).norm();
            (a, bnorm)
        } else {
            (0.0, 0.0)
        };
        range.push((ux.norm_squared() + va).sqrt());
        null.push(vb);
    }
    Ok(SvdBlockReport {
        s,
        residual_range_component: range,
        residual_null_component: null,
        rank_gap_ambiguous: split.ambiguous_gap,
    })
}
