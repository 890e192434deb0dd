use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use super::eta::symmetric_part;
use super::{check_dense, linalg, ser_complex_list};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::system::{AlConfig, SaddleSystem};

/// Convergence check for BB2 on a UPD matrix `Â`.
#[derive(Debug, Clone, Serialize)]
pub struct Bb2ConditionReport {
    #[serde(serialize_with = "ser_complex_list")]
    pub eigenvalues: Vec<Complex<f64>>,
    /// Extremes of `W = Â_h⁻¹ÂᵀÂ`; every BB2 (and MG) stepsize lies in `[1/w_max, 1/w_min]`.
    pub w_min: f64,
    pub w_max: f64,
    /// Per-eigenvalue bound on `|1 − αλ_j|²` over the admissible stepsizes.
    pub theta: Vec<f64>,
    /// `max_j |λ_j|²/u_j`.
    pub max_ratio: f64,
    /// `max_j |λ_j|²/u_j < 2 w_min`.
    pub condition_holds: bool,
    /// `λ_max(Â⁻¹ + Â⁻ᵀ) < 2 λ_min(Â⁻¹ + Â⁻ᵀ)`, which implies `condition_holds`.
    pub strict_variant_holds: bool,
}

fn require_upd(h: &DMatrix<f64>, what: &'static str) -> Result<()> {
    let lmin = linalg::lambda_min(h);
    if lmin > 0.0 {
        Ok(())
    } else {
        Err(Error::Assumption {
            what,
            lambda_min: lmin,
        })
    }
}

fn max_ratio(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter()
        .map(|l| l.norm_sqr() / l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn bb2_condition(a_hat: &DenseMatrix) -> Result<Bb2ConditionReport> {
    if a_hat.rows() != a_hat.cols() {
        return Err(Error::Dimension {
            context: "bb2_condition (square matrix)",
            expected: a_hat.rows(),
            got: a_hat.cols(),
        });
    }
    let a = a_hat.to_nalgebra();
    let h = symmetric_part(&a);
    require_upd(&h, "matrix is not unsymmetric positive definite")?;
    let eigenvalues = linalg::complex_eigenvalues(&a)?;
    let (_, h_ihalf) = linalg::spd_sqrt_pair(&h)?;
    let w_sym = &h_ihalf * a.transpose() * &a * &h_ihalf;
    let (wv, _) = linalg::sym_eigen(&w_sym);
    let w_min = wv[0];
    let w_max = wv[wv.len() - 1];
    let theta = eigenvalues
        .iter()
        .map(|l| {
            let t = |w: f64| 1.0 - 2.0 * l.re / w + l.norm_sqr() / (w * w);
            t(w_min).max(t(w_max))
        })
        .collect();
    let ratio = max_ratio(&eigenvalues);
    let inv = linalg::inverse(&a)?;
    let (sv, _) = linalg::sym_eigen(&(&inv + inv.transpose()));
    Ok(Bb2ConditionReport {
        eigenvalues,
        w_min,
        w_max,
        theta,
        max_ratio: ratio,
        condition_holds: ratio < 2.0 * w_min,
        strict_variant_holds: sv[sv.len() - 1] < 2.0 * sv[0],
    })
}

/// Sufficient condition for the outer/inner BB iteration on the shifted matrix `M`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpalbbConditionReport {
    /// `max_j |λ_j(M)|²/u_j`.
    pub max_ratio: f64,
    /// `4 / λ_max(M⁻¹ + M⁻ᵀ)`.
    pub bound: f64,
    pub holds: bool,
    /// `λ_max(M⁻¹ + M⁻ᵀ) ≤ 2 λ_min(M⁻¹ + M⁻ᵀ)`, a stronger sufficient form.
    pub reinforced_holds: bool,
}

pub fn spalbb_condition(sys: &SaddleSystem, cfg: &AlConfig) -> Result<SpalbbConditionReport> {
    check_dense(sys)?;
    cfg.validate(sys.m())?;
    let g = linalg::sparse_to_na(sys.g_matrix());
    require_upd(&symmetric_part(&g), "G is not unsymmetric positive definite")?;
    let m = sys.dense_m(cfg.omega, &cfg.q_mode).to_nalgebra();
    let eigs = linalg::complex_eigenvalues(&m)?;
    let inv = super::spectrum::m_inverse(sys, cfg.omega, &cfg.q_mode)?;
    let (sv, _) = linalg::sym_eigen(&(&inv + inv.transpose()));
    let lmax = sv[sv.len() - 1];
    let ratio = max_ratio(&eigs);
    let bound = 4.0 / lmax;
    Ok(SpalbbConditionReport {
        max_ratio: ratio,
        bound,
        holds: ratio < bound,
        reinforced_holds: lmax <= 2.0 * sv[0],
    })
}
