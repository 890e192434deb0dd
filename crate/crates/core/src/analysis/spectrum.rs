use nalgebra::{Complex, DMatrix};

use super::{check_dense, compute_eta, linalg, omega_max_exact};
use crate::dense::dense_lu;
use crate::error::{Error, Result};
use crate::system::{AlConfig, QMode, SaddleSystem};

/// Eigenvalues closer than this to 1 are excluded from `v(T)`.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-8;

/// Observed and predicted spectra of `T = M⁻¹N`.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Dense eigenvalues of `T`.
    pub eigenvalues: Vec<Complex<f64>>,
    /// `{0 × n, 1 × (m − s), ωμ/(1 + ωμ)}`.
    pub predicted: Vec<Complex<f64>>,
    pub mu: Vec<Complex<f64>>,
    pub s_rank: usize,
    /// Largest pairing distance between `eigenvalues` and `predicted`.
    pub match_error: f64,
    pub rho_t: f64,
    pub v_t: f64,
}

/// Dense `M` after an LU check, reporting the admissible ω range on failure.
fn factor_m(sys: &SaddleSystem, omega: f64, q: &QMode) -> Result<crate::dense::LuFactorization> {
    dense_lu(&sys.dense_m(omega, q)).map_err(|e| match e {
        Error::Singular { pivot, .. } => Error::SingularShifted {
            pivot,
            omega_max_exact: compute_eta(sys, q).ok().map(omega_max_exact),
        },
        other => other,
    })
}

/// `M⁻¹` as a dense matrix.
pub(crate) fn m_inverse(sys: &SaddleSystem, omega: f64, q: &QMode) -> Result<DMatrix<f64>> {
    let lu = factor_m(sys, omega, q)?;
    let d = sys.dim();
    let mut inv = DMatrix::zeros(d, d);
    let mut e = vec![0.0; d];
    for j in 0..d {
        e.fill(0.0);
        e[j] = 1.0;
        lu.solve_in_place(&mut e)?;
        for (i, v) in e.iter().enumerate() {
            inv[(i, j)] = *v;
        }
    }
    Ok(inv)
}

/// `T = M⁻¹N`, formed column by column from the m nonzero columns of `N`.
pub fn iteration_matrix(sys: &SaddleSystem, omega: f64, q: &QMode) -> Result<DMatrix<f64>> {
    check_dense(sys)?;
    q.validate(sys.m())?;
    let lu = factor_m(sys, omega, q)?;
    let (n, d) = (sys.n(), sys.dim());
    let mut t = DMatrix::zeros(d, d);
    let mut col = vec![0.0; d];
    for j in 0..sys.m() {
        col.fill(0.0);
        col[n + j] = omega * q.entry(j);
        lu.solve_in_place(&mut col)?;
        for (i, v) in col.iter().enumerate() {
            t[(i, n + j)] = *v;
        }
    }
    Ok(t)
}

/// Generalized eigenvalues `μ` of `G x = μ BQ⁻¹Bᵀ x` with `x ∉ Null(Bᵀ)`.
///
/// Computed without reference to ω: with `x = U_r a + U_n b`, the `Null(Bᵀ)`
/// rows of the pencil force `b = −Ĝ_nn⁻¹Ĝ_nr a`, leaving the s×s problem
/// `(Ĝ_rr − Ĝ_rn Ĝ_nn⁻¹ Ĝ_nr) a = μ U_rᵀBQ⁻¹BᵀU_r a`.
pub fn mu_list(sys: &SaddleSystem, q: &QMode) -> Result<Vec<Complex<f64>>> {
    check_dense(sys)?;
    q.validate(sys.m())?;
    let g = linalg::sparse_to_na(sys.g_matrix());
    let b = linalg::sparse_to_na(sys.b_matrix());
    let split = linalg::range_null_split(&b)?;
    if split.rank() == 0 {
        return Ok(Vec::new());
    }
    let (ur, un) = (&split.u_range, &split.u_null);
    let mut s_g = ur.transpose() * &g * ur;
    if un.ncols() > 0 {
        let g_nn = un.transpose() * &g * un;
        let g_nr = un.transpose() * &g * ur;
        let g_rn = ur.transpose() * &g * un;
        let lu = g_nn.lu();
        let sol = lu
            .solve(&g_nr)
            .ok_or_else(|| Error::Eigen("G is singular on Null(Bᵀ)".into()))?;
        s_g -= g_rn * sol;
    }
    let w_rr = ur.transpose() * super::eta::weighted_gram(&b, q) * ur;
    let w_inv = linalg::inverse(&w_rr)?;
    linalg::complex_eigenvalues(&(w_inv * s_g))
}

/// Greedy nearest-neighbour pairing: repeatedly match the closest unpaired
/// couple. Returns the largest matched distance (`∞` if the lengths differ).
pub fn match_spectra(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

pub(crate) fn radii(eigs: &[Complex<f64>]) -> (f64, f64) {
    let rho = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let v = eigs
        .iter()
        .filter(|l| (*l - Complex::new(1.0, 0.0)).norm() > UNIT_EIGENVALUE_TOL)
        .map(|l| l.norm())
        .fold(0.0, f64::max);
    (rho, v)
}

/// Dense spectrum of `T` checked against `{0 × n, 1 × (m − s), ωμ/(1 + ωμ)}`.
pub fn iteration_matrix_spectrum(sys: &SaddleSystem, cfg: &AlConfig) -> Result<SpectrumReport> {
    let t = iteration_matrix(sys, cfg.omega, &cfg.q_mode)?;
    let eigenvalues = linalg::complex_eigenvalues(&t)?;
    let mu = mu_list(sys, &cfg.q_mode)?;
    let s = mu.len();
    let w = cfg.omega;
    let mut predicted = vec![Complex::new(0.0, 0.0); sys.n()];
    predicted.extend(std::iter::repeat(Complex::new(1.0, 0.0)).take(sys.m() - s));
    predicted.extend(mu.iter().map(|m| (m * w) / (m * w + 1.0)));
    let match_error = match_spectra(&eigenvalues, &predicted);
    let (rho_t, v_t) = radii(&eigenvalues);
    Ok(SpectrumReport {
        eigenvalues,
        predicted,
        mu,
        s_rank: s,
        match_error,
        rho_t,
        v_t,
    })
}

/// `rank(I − T) = rank((I − T)²)`, i.e. `index(I − T) ≤ 1`.
pub fn index_check(sys: &SaddleSystem, cfg: &AlConfig) -> Result<bool> {
    index_check_matrix(&iteration_matrix(sys, cfg.omega, &cfg.q_mode)?)
}

pub fn index_check_matrix(t: &DMatrix<f64>) -> Result<bool> {
    let d = t.nrows();
    let imt = DMatrix::identity(d, d) - t;
    let sq = &imt * &imt;
    Ok(linalg::numerical_rank(&imt)? == linalg::numerical_rank(&sq)?)
}
