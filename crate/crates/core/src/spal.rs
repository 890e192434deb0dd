//! The exact augmented Lagrangian iteration and its inexact variant.
//!
//! Both iterate `z_{k+1} = z_k − Ψ(r_k)` with `r_k = A z_k − ℓ`. The exact
//! method takes `Ψ(r) = M⁻¹r` from one dense factorization of `M`, which is
//! the same as solving `M z_{k+1} = (f, ωQy_k + g)`. The inexact method asks
//! an [`InnerSolver`] for any `Ψ` with `‖r − MΨ‖_* ≤ δ‖r‖_*`.

use std::time::Instant;

use crate::analysis;
use crate::dense::{dense_lu, LuFactorization};
use crate::error::{Error, Result};
use crate::krylov::{self, KrylovConfig};
use crate::report::{is_diverging, relative, SolveOutcome, SolveReport, Status};
use crate::system::{AlConfig, LinearOperator, SaddleSystem, ShiftedOperator, WeightedNorm};
use crate::vecops::{self, norm2};

/// An inner solve is accepted if it misses its target by at most this
/// fraction of `‖r‖_*`; it absorbs roundoff when `δ = 0`.
pub const CONTRACT_SLACK: f64 = 1e-10;

/// Which step an inner BB iteration took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    MinimalGradient,
    Bb2,
}

/// Per-iteration data kept alongside a solve.
#[derive(Debug, Clone, Default)]
pub struct AlTrace {
    /// `r_k` for every outer pass (only with `record_residuals`).
    pub residuals: Vec<Vec<f64>>,
    /// `z_k` for every outer pass, starting with `z_0` (only with `record_residuals`).
    pub iterates: Vec<Vec<f64>>,
    /// Inner iterations spent in each outer pass.
    pub inner_iters: Vec<usize>,
    /// `‖r_{k+1}‖_{P_β} / ‖r_k‖_{P_β}` for each completed outer pass.
    pub pbeta_ratios: Vec<f64>,
    /// `nm + δ_k(1 + nm)` per outer pass when an `‖NM⁻¹‖_{P_β}` value is attached.
    pub contraction_bounds: Vec<f64>,
    /// Inner stepsizes, in order (BB iterations only).
    pub stepsizes: Vec<f64>,
    pub step_kinds: Vec<StepKind>,
    /// `‖M z_j − ℓ_k‖` after every inner BB step.
    pub inner_residuals: Vec<f64>,
}

/// Report, final iterate and trace of an augmented Lagrangian solve.
#[derive(Debug, Clone)]
pub struct AlOutcome {
    pub report: SolveReport,
    pub z: Vec<f64>,
    pub trace: AlTrace,
}

impl AlOutcome {
    pub fn x(&self, n: usize) -> &[f64] {
        &self.z[..n]
    }

    pub fn y(&self, n: usize) -> &[f64] {
        &self.z[n..]
    }

    pub fn into_outcome(self) -> SolveOutcome {
        SolveOutcome {
            report: self.report,
            z: self.z,
        }
    }
}

/// One request `M Δz ≈ r` of the inexact iteration.
pub struct InnerSolveRequest<'a> {
    pub operator: &'a ShiftedOperator<'a>,
    /// The outer residual `r_k`.
    pub rhs: &'a [f64],
    /// The previous correction; solvers may ignore it.
    pub warm_start: &'a [f64],
    /// `δ‖r_k‖_*`.
    pub target: f64,
    pub norm: &'a WeightedNorm,
    /// Iterations the solver may spend before giving up.
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct InnerSolveResult {
    pub delta_z: Vec<f64>,
    pub inner_iters: usize,
    /// `‖rhs − M delta_z‖_*`, recomputed.
    pub achieved_residual: f64,
}

/// Something that approximately applies `M⁻¹`.
pub trait InnerSolver {
    fn solve(&mut self, req: &InnerSolveRequest<'_>) -> Result<InnerSolveResult>;
}

fn contract_residual(op: &ShiftedOperator<'_>, rhs: &[f64], dz: &[f64], norm: &WeightedNorm) -> f64 {
    let mdz = op.apply_vec(dz);
    norm.norm(&vecops::sub(rhs, &mdz))
}

fn factor_shifted(sys: &SaddleSystem, cfg: &AlConfig) -> Result<LuFactorization> {
    analysis::check_dense(sys)?;
    dense_lu(&sys.dense_m(cfg.omega, &cfg.q_mode)).map_err(|e| match e {
        Error::Singular { pivot, .. } => Error::SingularShifted {
            pivot,
            omega_max_exact: analysis::compute_eta(sys, &cfg.q_mode)
                .ok()
                .map(analysis::omega_max_exact),
        },
        other => other,
    })
}

/// Exact solves with a dense LU factorization of `M`, computed once.
pub struct DenseLuInner {
    lu: LuFactorization,
}

impl DenseLuInner {
    pub fn new(sys: &SaddleSystem, cfg: &AlConfig) -> Result<Self> {
        cfg.validate(sys.m())?;
        Ok(Self {
            lu: factor_shifted(sys, cfg)?,
        })
    }
}

impl InnerSolver for DenseLuInner {
    fn solve(&mut self, req: &InnerSolveRequest<'_>) -> Result<InnerSolveResult> {
        let mut dz = req.rhs.to_vec();
        self.lu.solve_in_place(&mut dz)?;
        let achieved_residual = contract_residual(req.operator, req.rhs, &dz, req.norm);
        Ok(InnerSolveResult {
            delta_z: dz,
            inner_iters: 1,
            achieved_residual,
        })
    }
}

/// Restarted GMRES on `M Δz = r`.
///
/// GMRES stops on the Euclidean residual; when the contract norm is a
/// weighted one the Euclidean tolerance is tightened and the solve repeated
/// until the weighted target is met.
pub struct GmresInner {
    pub restart: usize,
    /// Attempts at tightening before reporting failure.
    pub max_rounds: usize,
}

impl GmresInner {
    pub fn new(restart: usize) -> Self {
        Self {
            restart,
            max_rounds: 12,
        }
    }
}

impl InnerSolver for GmresInner {
    fn solve(&mut self, req: &InnerSolveRequest<'_>) -> Result<InnerSolveResult> {
        let d = req.rhs.len();
        let rnorm = norm2(req.rhs);
        let zero = vec![0.0; d];
        if rnorm == 0.0 {
            return Ok(InnerSolveResult {
                delta_z: zero,
                inner_iters: 0,
                achieved_residual: 0.0,
            });
        }
        let weighted_rnorm = req.norm.norm(req.rhs);
        let mut tol = (req.target / weighted_rnorm).max(1e-14);
        let mut total = 0usize;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..self.max_rounds {
            let budget = req.max_iters.saturating_sub(total).max(1);
            let cfg = KrylovConfig::gmres(self.restart, tol, budget);
            let out = krylov::gmres_restarted(req.operator, req.rhs, &zero, &cfg)?;
            total += out.report.total_iters as usize;
            let achieved = contract_residual(req.operator, req.rhs, &out.z, req.norm);
            let better = best.as_ref().map_or(true, |(_, a)| achieved < *a);
            if better {
                best = Some((out.z, achieved));
            }
            if achieved <= req.target || total >= req.max_iters {
                break;
            }
            tol = (tol * 0.5 * req.target / achieved).max(1e-15);
        }
        let (delta_z, achieved_residual) = best.expect("at least one round");
        Ok(InnerSolveResult {
            delta_z,
            inner_iters: total,
            achieved_residual,
        })
    }
}

/// Bookkeeping shared by the outer loops.
pub(crate) struct OuterLoop<'a> {
    cfg: &'a AlConfig,
    pbeta: WeightedNorm,
    pub(crate) r0norm: f64,
    pub(crate) history: Vec<f64>,
    pub(crate) trace: AlTrace,
    start: Instant,
}

impl<'a> OuterLoop<'a> {
    pub(crate) fn new(sys: &'a SaddleSystem, cfg: &'a AlConfig, z0: &[f64], r0: &[f64]) -> Self {
        let r0norm = norm2(r0);
        let mut s = Self {
            cfg,
            pbeta: cfg.p_beta_norm(sys.n()),
            r0norm,
            history: vec![relative(r0norm, r0norm)],
            trace: AlTrace::default(),
            start: Instant::now(),
        };
        if cfg.record_residuals {
            s.trace.residuals.push(r0.to_vec());
            s.trace.iterates.push(z0.to_vec());
        }
        s
    }

    /// Records a new outer residual; returns its relative norm.
    pub(crate) fn push(&mut self, z: &[f64], r_prev: &[f64], r: &[f64]) -> f64 {
        let rel = relative(norm2(r), self.r0norm);
        self.history.push(rel);
        let prev = self.pbeta.norm(r_prev);
        self.trace
            .pbeta_ratios
            .push(if prev == 0.0 { 0.0 } else { self.pbeta.norm(r) / prev });
        if self.cfg.record_residuals {
            self.trace.residuals.push(r.to_vec());
            self.trace.iterates.push(z.to_vec());
        }
        rel
    }

    pub(crate) fn finish(self, status: Status, outer: usize, total: f64, z: Vec<f64>) -> AlOutcome {
        AlOutcome {
            report: SolveReport {
                status,
                outer_iters: outer,
                total_iters: total,
                final_relres: *self.history.last().expect("history starts nonempty"),
                residual_history: self.history,
                wall_seconds: self.start.elapsed().as_secs_f64(),
            },
            z,
            trace: self.trace,
        }
    }
}

fn initial_iterate(sys: &SaddleSystem, y0: &[f64]) -> Result<Vec<f64>> {
    Error::check_len("y0", sys.m(), y0.len())?;
    let mut z = vec![0.0; sys.n()];
    z.extend_from_slice(y0);
    Ok(z)
}

/// Exact SPAL from `z₀ = (0, y₀)`: `M z_{k+1} = (f, ωQy_k + g)`.
///
/// Stops when `‖r_k‖/‖r₀‖ ≤ tol` (Euclidean), on divergence, or after
/// `maxit` iterations. Needs `n + m` within the dense analysis cap.
pub fn spal_exact(sys: &SaddleSystem, cfg: &AlConfig, y0: &[f64]) -> Result<AlOutcome> {
    cfg.validate(sys.m())?;
    let mut z = initial_iterate(sys, y0)?;
    let lu = factor_shifted(sys, cfg)?;
    let op = ShiftedOperator::new(sys, cfg.omega, &cfg.q_mode)?;
    let n = sys.n();
    let mut r = sys.residual(&z)?;
    let mut lp = OuterLoop::new(sys, cfg, &z, &r);
    if lp.r0norm == 0.0 {
        return Ok(lp.finish(Status::Converged, 0, 0.0, z));
    }
    let mut k = 0usize;
    let status = loop {
        if k >= cfg.maxit {
            break Status::MaxIt;
        }
        let mut next = op.shifted_rhs(&z[n..]);
        lu.solve_in_place(&mut next)?;
        z = next;
        k += 1;
        let r_new = sys.residual(&z)?;
        let rel = lp.push(&z, &r, &r_new);
        r = r_new;
        lp.trace.inner_iters.push(1);
        if rel <= cfg.tol {
            break Status::Converged;
        }
        if is_diverging(rel) {
            break Status::Diverged;
        }
    };
    Ok(lp.finish(status, k, k as f64, z))
}

/// Inexact SPAL: `z_{k+1} = z_k − Ψ(r_k)` with `Ψ` from `inner`.
///
/// Every inner result is re-verified against `δ_k‖r_k‖_*`; a miss ends the
/// run with [`Status::InnerFailure`]. `total_iters` sums inner iterations.
pub fn spal_inexact(
    sys: &SaddleSystem,
    cfg: &AlConfig,
    inner: &mut dyn InnerSolver,
    z0: &[f64],
) -> Result<AlOutcome> {
    run_inexact(sys, cfg, inner, z0, None)
}

/// [`spal_inexact`] that also logs the contraction bound
/// `‖NM⁻¹‖_{P_β} + δ_k(1 + ‖NM⁻¹‖_{P_β})` for every outer pass.
pub fn spal_inexact_with_bound(
    sys: &SaddleSystem,
    cfg: &AlConfig,
    inner: &mut dyn InnerSolver,
    z0: &[f64],
    nm_norm: f64,
) -> Result<AlOutcome> {
    run_inexact(sys, cfg, inner, z0, Some(nm_norm))
}

fn run_inexact(
    sys: &SaddleSystem,
    cfg: &AlConfig,
    inner: &mut dyn InnerSolver,
    z0: &[f64],
    nm_norm: Option<f64>,
) -> Result<AlOutcome> {
    cfg.validate(sys.m())?;
    Error::check_len("z0", sys.dim(), z0.len())?;
    let op = ShiftedOperator::new(sys, cfg.omega, &cfg.q_mode)?;
    let norm = cfg.contract_norm(sys.n());
    let mut z = z0.to_vec();
    let mut r = sys.residual(&z)?;
    let mut lp = OuterLoop::new(sys, cfg, &z, &r);
    if lp.r0norm == 0.0 {
        return Ok(lp.finish(Status::Converged, 0, 0.0, z));
    }
    let mut delta = cfg.delta;
    let mut prev_dz = vec![0.0; sys.dim()];
    let mut k = 0usize;
    let mut total = 0usize;
    let status = loop {
        if total >= cfg.maxit {
            break Status::MaxIt;
        }
        let rnorm = norm.norm(&r);
        let target = delta * rnorm;
        let req = InnerSolveRequest {
            operator: &op,
            rhs: &r,
            warm_start: &prev_dz,
            target,
            norm: &norm,
            max_iters: cfg.maxit - total,
        };
        let res = inner.solve(&req)?;
        total += res.inner_iters;
        lp.trace.inner_iters.push(res.inner_iters);
        let achieved = contract_residual(&op, &r, &res.delta_z, &norm);
        if achieved > target + CONTRACT_SLACK * rnorm {
            break Status::InnerFailure { outer: k };
        }
        if let Some(nm) = nm_norm {
            lp.trace.contraction_bounds.push(nm + delta * (1.0 + nm));
        }
        vecops::axpy(-1.0, &res.delta_z, &mut z);
        prev_dz = res.delta_z;
        k += 1;
        let r_new = sys.residual(&z)?;
        let rel = lp.push(&z, &r, &r_new);
        r = r_new;
        if rel <= cfg.tol {
            break Status::Converged;
        }
        if is_diverging(rel) {
            break Status::Diverged;
        }
        if let Some(f) = cfg.delta_decay {
            delta *= f;
        }
    };
    Ok(lp.finish(status, k, total as f64, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    fn toy() -> SaddleSystem {
        SaddleSystem::new(
            SparseMatrix::identity(2),
            SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]).unwrap(),
            vec![1.0, 0.0],
            vec![-1.0],
            Some(1),
        )
        .unwrap()
    }

    #[test]
    fn toy_converges_with_ratio_one_half() {
        let sys = toy();
        let cfg = AlConfig::default().with_tol(1e-12);
        let out = spal_exact(&sys, &cfg, &[1.0]).unwrap();
        assert_eq!(out.report.status, Status::Converged);
        let h = &out.report.residual_history;
        for w in h.windows(2).skip(1) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-9);
        }
        assert!((out.z[0] - 1.0).abs() < 1e-11 && out.z[1].abs() < 1e-11 && out.z[2].abs() < 1e-11);
    }

    #[test]
    fn exact_start_converges_in_one_step() {
        let sys = toy();
        let out = spal_exact(&sys, &AlConfig::default(), &[0.0]).unwrap();
        assert_eq!(out.report.status, Status::Converged);
        assert!(out.report.outer_iters <= 1);
    }

    #[test]
    fn zero_delta_reproduces_exact() {
        let sys = toy();
        let cfg = AlConfig::default().with_delta(0.0).with_tol(1e-10);
        let exact = spal_exact(&sys, &AlConfig { record_residuals: true, ..cfg.clone() }, &[1.0]).unwrap();
        let mut inner = DenseLuInner::new(&sys, &cfg).unwrap();
        let cfg_r = AlConfig {
            record_residuals: true,
            ..cfg
        };
        let inexact = spal_inexact(&sys, &cfg_r, &mut inner, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(exact.trace.iterates.len(), inexact.trace.iterates.len());
        for (a, b) in exact.trace.iterates.iter().zip(&inexact.trace.iterates) {
            assert!(vecops::max_abs_diff(a, b) <= 1e-10);
        }
    }

    #[test]
    fn gmres_inner_meets_contract() {
        let sys = toy();
        let cfg = AlConfig::default().with_delta(0.4);
        let mut inner = GmresInner::new(5);
        let out = spal_inexact(&sys, &cfg, &mut inner, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(out.report.status, Status::Converged);
    }
}
