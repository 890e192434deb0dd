use nalgebra::{DMatrix, DVector};

use super::eta::symmetric_part;
use super::{check_dense, linalg};
use crate::error::{Error, Result};
use crate::system::{AlConfig, SaddleSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmNormReport {
    /// `‖P_β^{1/2} N M⁻¹ P_β^{−1/2}‖₂`.
    pub value: f64,
    /// The same quantity as `ρ(T̃T̃ᵀ)^{1/2}` from the Schur-complement blocks.
    pub cross_check: f64,
    /// True when `B` is rank deficient and the norm was taken on the reduced
    /// system `[UᵀGU Σ; −Σᵀ ωQ₁]` built from the SVD of `B`.
    pub reduced: bool,
    pub q_structure_verified: bool,
    pub rank_gap_ambiguous: bool,
}

pub fn nm_norm(sys: &SaddleSystem, cfg: &AlConfig) -> Result<f64> {
    Ok(nm_norm_detail(sys, cfg)?.value)
}

/// `‖NM⁻¹‖_{P_β}` for `cfg.omega`, `cfg.beta` and `cfg.q_mode`.
///
/// For rank-deficient `B` the full operator has `‖NM⁻¹‖ ≥ 1` (it is the
/// identity on the `Null(B)` multiplier directions), and the quantity that
/// governs the residual is the norm of the reduced problem obtained from
/// `B = U[Σ 0]Vᵀ`, with `Q₁` the leading s×s block of `VᵀQV`.
pub fn nm_norm_detail(sys: &SaddleSystem, cfg: &AlConfig) -> Result<NmNormReport> {
    check_dense(sys)?;
    cfg.validate(sys.m())?;
    let (n, m) = (sys.n(), sys.m());
    let mut report = NmNormReport {
        value: 0.0,
        cross_check: 0.0,
        reduced: false,
        q_structure_verified: true,
        rank_gap_ambiguous: false,
    };
    if m == 0 {
        return Ok(report);
    }
    let g = linalg::sparse_to_na(sys.g_matrix());
    let b = linalg::sparse_to_na(sys.b_matrix());
    let q = DMatrix::from_diagonal(&DVector::from_fn(m, |i, _| cfg.q_mode.entry(i)));
    let split = linalg::range_null_split(&b)?;
    report.rank_gap_ambiguous = split.ambiguous_gap;
    let s = split.rank();
    let (value, cross) = if s == m {
        nm_dense(&g, &b, &q, cfg.omega, cfg.beta)?
    } else {
        report.reduced = true;
        report.q_structure_verified = cfg.q_mode.is_identity();
        if s == 0 {
            (0.0, 0.0)
        } else {
            let u = split.u_full();
            let gt = u.transpose() * &g * &u;
            let mut sigma = DMatrix::zeros(n, s);
            for (j, sj) in split.sigma.iter().enumerate() {
                sigma[(j, j)] = *sj;
            }
            let vqv = split.v.transpose() * &q * &split.v;
            let q1 = symmetric_part(&vqv.view((0, 0), (s, s)).into_owned());
            nm_dense(&gt, &sigma, &q1, cfg.omega, cfg.beta)?
        }
    };
    report.value = value;
    report.cross_check = cross;
    Ok(report)
}

/// Spectral norm of `P^{1/2} N M⁻¹ P^{−1/2}` for dense blocks with SPD `q`,
/// and its Schur-complement cross-check.
fn nm_dense(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    omega: f64,
    beta: f64,
) -> Result<(f64, f64)> {
    let (n, m) = (b.nrows(), b.ncols());
    let d = n + m;
    let mut mm = DMatrix::zeros(d, d);
    mm.view_mut((0, 0), (n, n)).copy_from(g);
    mm.view_mut((0, n), (n, m)).copy_from(b);
    mm.view_mut((n, 0), (m, n)).copy_from(&(-b.transpose()));
    mm.view_mut((n, n), (m, m)).copy_from(&(q * omega));
    let minv = mm.try_inverse().ok_or(Error::Singular {
        pivot: 0,
        magnitude: 0.0,
    })?;
    let (q_half, q_ihalf) = linalg::spd_sqrt_pair(q)?;

    // only the last m rows of N M⁻¹ are nonzero
    let nm_rows = q * omega * minv.rows(n, m);
    let mut scaled = DMatrix::zeros(m, d);
    let left = &q_ihalf * beta.sqrt() * nm_rows;
    scaled.columns_mut(0, n).copy_from(&left.columns(0, n));
    let right = left.columns(n, m) * &q_half / beta.sqrt();
    scaled.columns_mut(n, m).copy_from(&right);
    let value = linalg::spectral_norm(&scaled)?;

    // S_Q = G + ω⁻¹BQ⁻¹Bᵀ; E = ω⁻¹Q^{-1/2}BᵀS_Q⁻¹BQ^{-1/2}
    let qinv = linalg::inverse(q)?;
    let sq = g + b * &qinv * b.transpose() / omega;
    let sq_inv = linalg::inverse(&sq)?;
    let bt_sinv = b.transpose() * &sq_inv;
    let e = &q_ihalf * &bt_sinv * b * &q_ihalf / omega;
    let ime = DMatrix::identity(m, m) - e;
    let x = &q_ihalf * bt_sinv * beta.sqrt();
    let k = &ime * ime.transpose() + &x * x.transpose();
    let cross = linalg::lambda_max(&k).max(0.0).sqrt();
    Ok((value, cross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;
    use crate::system::QMode;

    fn toy() -> SaddleSystem {
        SaddleSystem::new(
            SparseMatrix::identity(2),
            SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]).unwrap(),
            vec![0.0; 2],
            vec![0.0],
            None,
        )
        .unwrap()
    }

    #[test]
    fn toy_value() {
        let rep = nm_norm_detail(&toy(), &AlConfig::default()).unwrap();
        assert!((rep.value - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((rep.cross_check - rep.value).abs() < 1e-12);
        assert!(!rep.reduced);
    }

    #[test]
    fn no_multipliers_gives_zero() {
        let sys = SaddleSystem::new(
            SparseMatrix::identity(2),
            SparseMatrix::zeros(2, 0),
            vec![0.0; 2],
            vec![],
            None,
        )
        .unwrap();
        assert_eq!(nm_norm(&sys, &AlConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_q_cross_check() {
        let sys = SaddleSystem::new(
            SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, 0.5), (1, 0, -0.5), (1, 1, 1.0), (2, 2, 3.0)])
                .unwrap(),
            SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, 0.3)]).unwrap(),
            vec![0.0; 3],
            vec![0.0; 2],
            None,
        )
        .unwrap();
        let mut cfg = AlConfig::default().with_omega(0.7).with_beta(0.4);
        cfg.q_mode = QMode::Diagonal(vec![0.5, 2.0]);
        let rep = nm_norm_detail(&sys, &cfg).unwrap();
        assert!((rep.value - rep.cross_check).abs() < 1e-10);
    }
}
