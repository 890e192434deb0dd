//! Dense spectral diagnostics for desk-scale saddle-point systems.
//!
//! Everything here forms dense matrices, so every entry point refuses systems
//! with `n + m` above [`dense_cap`] (2000 unless `ALSP_DENSE_CAP` says
//! otherwise).

pub mod linalg;

mod bb;
mod blocks;
mod eta;
mod nmnorm;
mod spectrum;

pub use bb::{bb2_condition, spalbb_condition, Bb2ConditionReport, SpalbbConditionReport};
pub use blocks::{residual_block_decomposition, SvdBlockReport};
pub use eta::{compute_eta, lambda1};
pub use nmnorm::{nm_norm, nm_norm_detail, NmNormReport};
pub use spectrum::{
    index_check, index_check_matrix, iteration_matrix, iteration_matrix_spectrum, match_spectra,
    mu_list, SpectrumReport, UNIT_EIGENVALUE_TOL,
};

use nalgebra::Complex;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::system::{AlConfig, SaddleSystem};

pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Largest `n + m` the dense routines accept.
pub fn dense_cap() -> usize {
    std::env::var("ALSP_DENSE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

pub fn check_dense(sys: &SaddleSystem) -> Result<()> {
    let cap = dense_cap();
    if sys.dim() > cap {
        Err(Error::TooLarge {
            size: sys.dim(),
            cap,
        })
    } else {
        Ok(())
    }
}

/// `1/(−2η)_+` with `1/0 = +∞`.
pub fn omega_max_exact(eta: f64) -> f64 {
    let neg = (-2.0 * eta).max(0.0);
    if neg == 0.0 {
        f64::INFINITY
    } else {
        1.0 / neg
    }
}

/// Everything the convergence theory needs for one `(ω, δ, β, Q)` choice.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub n: usize,
    pub m: usize,
    pub omega: f64,
    pub delta: f64,
    pub beta: f64,
    #[serde(serialize_with = "ser_real")]
    pub eta: f64,
    pub lambda1: f64,
    #[serde(serialize_with = "ser_complex_list")]
    pub mu_list: Vec<Complex<f64>>,
    pub rho_t: f64,
    pub v_t: f64,
    pub index_le_1: bool,
    /// Largest distance between observed and predicted `T` eigenvalues.
    pub spectrum_match_error: f64,
    pub nm_norm: f64,
    #[serde(serialize_with = "ser_real")]
    pub omega_max_exact: f64,
    /// Upper end of the admissible ω range for the inexact iteration.
    #[serde(serialize_with = "ser_real")]
    pub omega_max_inexact: f64,
    pub delta_max_inexact: f64,
    pub s_rank: usize,
    /// ω lies in the exact-iteration range.
    pub exact_condition_holds: bool,
    /// The exact iteration converges (or semi-converges) according to the spectrum.
    pub exact_spectrally_convergent: bool,
    /// Both ω and δ lie in the inexact-iteration ranges.
    pub inexact_condition_holds: bool,
    /// False when `Q` is not the identity, so the block structure needed by the
    /// rank-deficient theory was not checked.
    pub q_structure_verified: bool,
    pub rank_gap_ambiguous: bool,
}

/// Fills a [`SpectralReport`] for `cfg.omega`, `cfg.delta`, `cfg.beta`, `cfg.q_mode`.
pub fn theorem_conditions(sys: &SaddleSystem, cfg: &AlConfig) -> Result<SpectralReport> {
    check_dense(sys)?;
    cfg.validate(sys.m())?;
    let eta = compute_eta(sys, &cfg.q_mode)?;
    let lam1 = lambda1(sys, cfg.omega, &cfg.q_mode)?;
    let spec = iteration_matrix_spectrum(sys, cfg)?;
    let t = iteration_matrix(sys, cfg.omega, &cfg.q_mode)?;
    let index_ok = index_check_matrix(&t)?;
    let nm = nm_norm_detail(sys, cfg)?;
    let w_exact = omega_max_exact(eta);
    let w_inexact = w_exact.min((lam1 / cfg.beta).sqrt());
    let delta_max = (lam1 / (cfg.omega * cfg.omega)).min((1.0 - nm.value) / 2.0);
    let full_rank = spec.s_rank == sys.m();
    let exact_spectral = if full_rank {
        spec.rho_t < 1.0
    } else {
        index_ok && spec.v_t < 1.0
    };
    Ok(SpectralReport {
        n: sys.n(),
        m: sys.m(),
        omega: cfg.omega,
        delta: cfg.delta,
        beta: cfg.beta,
        eta,
        lambda1: lam1,
        mu_list: spec.mu.clone(),
        rho_t: spec.rho_t,
        v_t: spec.v_t,
        index_le_1: index_ok,
        spectrum_match_error: spec.match_error,
        nm_norm: nm.value,
        omega_max_exact: w_exact,
        omega_max_inexact: w_inexact,
        delta_max_inexact: delta_max,
        s_rank: spec.s_rank,
        exact_condition_holds: cfg.omega < w_exact,
        exact_spectrally_convergent: exact_spectral,
        inexact_condition_holds: cfg.omega < w_inexact && cfg.delta <= (1.0 - nm.value) / 2.0,
        q_structure_verified: nm.q_structure_verified,
        rank_gap_ambiguous: nm.rank_gap_ambiguous,
    })
}

/// Writes non-finite reals as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn ser_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn ser_complex_list<S: Serializer>(
    v: &[Complex<f64>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for c in v {
        seq.serialize_element(&[c.re, c.im])?;
    }
    seq.end()
}
