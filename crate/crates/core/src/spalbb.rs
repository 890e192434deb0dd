//! Barzilai-Borwein steps on the shifted system, and the outer loop that
//! uses them as the inner solver.
//!
//! For a linear residual `ρ(z) = M z − ℓ` the stepsizes are
//!
//! ```text
//! BB1 = sᵀs / sᵀd,   BB2 = sᵀd / dᵀd,   MG = ρᵀMρ / ‖Mρ‖²
//! ```
//!
//! with `s = z_j − z_{j−1}` and `d = M s`. MG is the delay-free version of
//! BB2 and is used whenever no usable `s` exists.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::report::{is_diverging, relative, SolveReport, Status};
use crate::spal::{AlOutcome, InnerSolveResult, OuterLoop, StepKind};
use crate::system::{AlConfig, LinearOperator, SaddleSystem, ShiftedOperator};
use crate::vecops::{self, dot, norm2};

/// Steps with `‖s‖` at or below this are treated as missing.
pub const MIN_STEP_NORM: f64 = 1e-300;

/// The three classical stepsizes at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBStepsizes {
    pub bb1: f64,
    pub bb2: f64,
    pub mg: f64,
}

impl BBStepsizes {
    /// `s`, `d = M s`, `ρ` and `Mρ`.
    pub fn compute(s: &[f64], d: &[f64], rho: &[f64], m_rho: &[f64]) -> Self {
        let sd = dot(s, d);
        Self {
            bb1: dot(s, s) / sd,
            bb2: sd / dot(d, d),
            mg: dot(rho, m_rho) / dot(m_rho, m_rho),
        }
    }
}

/// Iterate history of a BB run. It survives across outer passes, so the
/// first inner step of a pass can use the last step of the previous one.
#[derive(Debug, Clone)]
pub struct BBState {
    pub z_prev: Option<Vec<f64>>,
    pub z_cur: Vec<f64>,
    /// `M z_cur − ℓ` for the current right-hand side.
    pub r_cur: Vec<f64>,
    pub alpha: f64,
    pub step_kind: StepKind,
}

impl BBState {
    pub fn new(z0: Vec<f64>, z_minus1: Option<Vec<f64>>) -> Self {
        let d = z0.len();
        Self {
            z_prev: z_minus1,
            z_cur: z0,
            r_cur: vec![0.0; d],
            alpha: 0.0,
            step_kind: StepKind::MinimalGradient,
        }
    }
}

/// How an inner run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStop {
    Reached,
    /// The iteration budget ran out first.
    Budget,
    /// A stepsize or residual stopped being finite.
    Breakdown,
}

/// Per-step log of a BB run.
#[derive(Debug, Clone, Default)]
pub struct StepLog {
    pub stepsizes: Vec<f64>,
    pub kinds: Vec<StepKind>,
    /// `‖ρ_j‖` after each step.
    pub residuals: Vec<f64>,
}

/// BB2 (with MG fallback) on `op z = ell`, continuing from `state`, until
/// `‖op z − ell‖ ≤ target` or `budget` steps.
///
/// Returns the result in inexact-solver form, with `delta_z = z_start − z_end`
/// so that the outer update `z ← z − Δz` lands on the inner iterate.
pub fn bb2_inner_solve(
    op: &dyn LinearOperator,
    ell: &[f64],
    state: &mut BBState,
    target: f64,
    budget: usize,
    log: &mut StepLog,
) -> Result<(InnerSolveResult, InnerStop)> {
    Error::check_len("BB right-hand side", op.dim(), ell.len())?;
    Error::check_len("BB iterate", op.dim(), state.z_cur.len())?;
    let z_start = state.z_cur.clone();
    state.r_cur = residual(op, &state.z_cur, ell);
    let mut rnorm = norm2(&state.r_cur);
    let mut iters = 0usize;
    let stop = loop {
        if !rnorm.is_finite() {
            break InnerStop::Breakdown;
        }
        if rnorm <= target {
            break InnerStop::Reached;
        }
        if iters >= budget {
            break InnerStop::Budget;
        }
        let (alpha, kind) = bb2_step(op, state);
        if !(alpha.is_finite() && alpha > 0.0) {
            break InnerStop::Breakdown;
        }
        let mut next = state.z_cur.clone();
        vecops::axpy(-alpha, &state.r_cur, &mut next);
        state.z_prev = Some(std::mem::replace(&mut state.z_cur, next));
        state.r_cur = residual(op, &state.z_cur, ell);
        state.alpha = alpha;
        state.step_kind = kind;
        rnorm = norm2(&state.r_cur);
        iters += 1;
        log.stepsizes.push(alpha);
        log.kinds.push(kind);
        log.residuals.push(rnorm);
    };
    Ok((
        InnerSolveResult {
            delta_z: vecops::sub(&z_start, &state.z_cur),
            inner_iters: iters,
            achieved_residual: rnorm,
        },
        stop,
    ))
}

fn residual(op: &dyn LinearOperator, z: &[f64], ell: &[f64]) -> Vec<f64> {
    let mut r = op.apply_vec(z);
    for (ri, li) in r.iter_mut().zip(ell) {
        *ri -= li;
    }
    r
}

fn mg_step(op: &dyn LinearOperator, rho: &[f64]) -> f64 {
    let mr = op.apply_vec(rho);
    dot(rho, &mr) / dot(&mr, &mr)
}

/// BB2 from the stored previous iterate, or MG when the step is missing,
/// negligible or has `sᵀMs ≤ 0`.
fn bb2_step(op: &dyn LinearOperator, state: &BBState) -> (f64, StepKind) {
    if let Some(prev) = &state.z_prev {
        let s = vecops::sub(&state.z_cur, prev);
        if norm2(&s) > MIN_STEP_NORM {
            let d = op.apply_vec(&s);
            let sd = dot(&s, &d);
            if sd > 0.0 {
                return (sd / dot(&d, &d), StepKind::Bb2);
            }
        }
    }
    (mg_step(op, &state.r_cur), StepKind::MinimalGradient)
}

/// Outer augmented Lagrangian loop with BB2 inner iterations.
///
/// Each outer pass computes `r_k = A z_k − ℓ`, stops if `‖r_k‖/‖r₀‖ ≤ tol`,
/// then runs BB2 on `M z = (f, ωQy_k + g)` from `z_k` until
/// `‖M z − ℓ_k‖ ≤ δ_k‖r_k‖`. `total_iters` counts inner steps and is capped
/// by `maxit`. Without `z_minus1` the first step is an MG step.
pub fn spalbb(
    sys: &SaddleSystem,
    cfg: &AlConfig,
    z0: &[f64],
    z_minus1: Option<&[f64]>,
) -> Result<AlOutcome> {
    cfg.validate(sys.m())?;
    Error::check_len("z0", sys.dim(), z0.len())?;
    if let Some(zm) = z_minus1 {
        Error::check_len("z_minus1", sys.dim(), zm.len())?;
    }
    let op = ShiftedOperator::new(sys, cfg.omega, &cfg.q_mode)?;
    let n = sys.n();
    let mut state = BBState::new(z0.to_vec(), z_minus1.map(|z| z.to_vec()));
    let mut r = sys.residual(z0)?;
    let mut lp = OuterLoop::new(sys, cfg, z0, &r);
    if lp.r0norm == 0.0 {
        return Ok(lp.finish(Status::Converged, 0, 0.0, z0.to_vec()));
    }
    let mut delta = cfg.delta;
    let mut log = StepLog::default();
    let mut k = 0usize;
    let mut total = 0usize;
    let status = loop {
        if total >= cfg.maxit {
            break Status::MaxIt;
        }
        let ell_k = op.shifted_rhs(&state.z_cur[n..]);
        let target = delta * norm2(&r);
        let (res, stop) =
            bb2_inner_solve(&op, &ell_k, &mut state, target, cfg.maxit - total, &mut log)?;
        total += res.inner_iters;
        lp.trace.inner_iters.push(res.inner_iters);
        k += 1;
        let r_new = sys.residual(&state.z_cur)?;
        let rel = lp.push(&state.z_cur, &r, &r_new);
        r = r_new;
        if rel <= cfg.tol {
            break Status::Converged;
        }
        match stop {
            InnerStop::Breakdown => break Status::Breakdown,
            InnerStop::Budget => break Status::MaxIt,
            InnerStop::Reached => {}
        }
        if is_diverging(rel) {
            break Status::Diverged;
        }
        if let Some(f) = cfg.delta_decay {
            delta *= f;
        }
    };
    lp.trace.stepsizes = log.stepsizes;
    lp.trace.step_kinds = log.kinds;
    lp.trace.inner_residuals = log.residuals;
    Ok(lp.finish(status, k, total as f64, state.z_cur))
}

/// Stepsize rule of the standalone gradient solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbRule {
    Bb1,
    Bb2,
    MinimalGradient,
}

/// Result of [`gradient_solve`].
#[derive(Debug, Clone)]
pub struct GradientRun {
    pub report: SolveReport,
    pub z: Vec<f64>,
    pub log: StepLog,
}

/// `z_{j+1} = z_j − α_j ρ_j` on `op z = ell` with the given stepsize rule,
/// until `‖ρ_j‖ ≤ tol‖ρ_0‖` or `maxit` steps. BB rules fall back to MG when
/// no usable previous step exists.
pub fn gradient_solve(
    op: &dyn LinearOperator,
    ell: &[f64],
    z0: &[f64],
    rule: BbRule,
    tol: f64,
    maxit: usize,
) -> Result<GradientRun> {
    Error::check_len("gradient right-hand side", op.dim(), ell.len())?;
    Error::check_len("gradient initial guess", op.dim(), z0.len())?;
    let start = Instant::now();
    let mut z = z0.to_vec();
    let mut prev: Option<Vec<f64>> = None;
    let mut rho = residual(op, &z, ell);
    let r0 = norm2(&rho);
    let mut history = vec![relative(r0, r0)];
    let mut log = StepLog::default();
    let mut it = 0usize;
    let status = loop {
        let rel = *history.last().unwrap();
        if rel <= tol {
            break Status::Converged;
        }
        if is_diverging(rel) {
            break Status::Diverged;
        }
        if it >= maxit {
            break Status::MaxIt;
        }
        let usable = prev.as_ref().and_then(|p| {
            let s = vecops::sub(&z, p);
            if norm2(&s) <= MIN_STEP_NORM {
                return None;
            }
            let d = op.apply_vec(&s);
            let sd = dot(&s, &d);
            (sd > 0.0).then_some((s, d, sd))
        });
        let (alpha, kind) = match (rule, usable) {
            (BbRule::Bb1, Some((s, _, sd))) => (dot(&s, &s) / sd, StepKind::Bb2),
            (BbRule::Bb2, Some((_, d, sd))) => (sd / dot(&d, &d), StepKind::Bb2),
            _ => (mg_step(op, &rho), StepKind::MinimalGradient),
        };
        if !(alpha.is_finite() && alpha > 0.0) {
            break Status::Breakdown;
        }
        let mut next = z.clone();
        vecops::axpy(-alpha, &rho, &mut next);
        prev = Some(std::mem::replace(&mut z, next));
        rho = residual(op, &z, ell);
        let rn = norm2(&rho);
        it += 1;
        log.stepsizes.push(alpha);
        log.kinds.push(kind);
        log.residuals.push(rn);
        history.push(relative(rn, r0));
    };
    Ok(GradientRun {
        report: SolveReport {
            status,
            outer_iters: it,
            total_iters: it as f64,
            final_relres: *history.last().unwrap(),
            residual_history: history,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        z,
        log,
    })
}

/// Squared-norm growth factor per BB1 step that the literature states for the
/// rotation counterexample.
pub const BB1_STATED_SQUARED_FACTOR: f64 = 8.0;

/// Trajectory of BB1 on `[[1, 2], [−2, 1]] z = 0`.
#[derive(Debug, Clone)]
pub struct Bb1Demo {
    pub trajectory: Vec<[f64; 2]>,
    pub stepsizes: Vec<f64>,
    /// `‖z_{k+1}‖ / ‖z_k‖`.
    pub norm_ratios: Vec<f64>,
    /// Squared ratio observed on the trajectory (4 for every nonzero start).
    pub observed_squared_factor: f64,
    pub stated_squared_factor: f64,
    /// Explanation when observed and stated factors differ.
    pub discrepancy: Option<String>,
}

/// Runs `steps` BB1 iterations from `z0`.
///
/// The stepsize is `sᵀs / sᵀÂs` with `s` the previous step; before the first
/// step `s` is taken along `r₀`. Because the symmetric part of `Â` is the
/// identity, every stepsize equals 1 and each step maps `(x, y)` to
/// `(−2y, 2x)`.
pub fn bb1_divergence_demo(z0: [f64; 2], steps: usize) -> Bb1Demo {
    let a = |z: &[f64; 2]| [z[0] + 2.0 * z[1], -2.0 * z[0] + z[1]];
    let mut z = z0;
    let mut trajectory = vec![z];
    let mut stepsizes = Vec::new();
    let mut norm_ratios = Vec::new();
    let mut s = a(&z);
    for _ in 0..steps {
        let r = a(&z);
        if r == [0.0, 0.0] {
            break;
        }
        let as_ = a(&s);
        let alpha = (s[0] * s[0] + s[1] * s[1]) / (s[0] * as_[0] + s[1] * as_[1]);
        let next = [z[0] - alpha * r[0], z[1] - alpha * r[1]];
        s = [next[0] - z[0], next[1] - z[1]];
        norm_ratios.push(next[0].hypot(next[1]) / z[0].hypot(z[1]));
        stepsizes.push(alpha);
        z = next;
        trajectory.push(z);
    }
    let observed = norm_ratios.first().map_or(f64::NAN, |r| r * r);
    let discrepancy = (observed.is_finite() && observed != BB1_STATED_SQUARED_FACTOR).then(|| {
        format!(
            "the recurrence (x, y) -> (-2y, 2x) gives ||z_(k+1)||^2 = {observed} ||z_k||^2, \
             not the stated factor {BB1_STATED_SQUARED_FACTOR}; the iteration diverges either way"
        )
    });
    Bb1Demo {
        trajectory,
        stepsizes,
        norm_ratios,
        observed_squared_factor: observed,
        stated_squared_factor: BB1_STATED_SQUARED_FACTOR,
        discrepancy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    #[test]
    fn identity_takes_one_mg_step() {
        let op = DenseMatrix::identity(3);
        let ell = [1.0, -2.0, 3.0];
        let mut st = BBState::new(vec![0.0; 3], None);
        let mut log = StepLog::default();
        let (res, stop) = bb2_inner_solve(&op, &ell, &mut st, 1e-14, 10, &mut log).unwrap();
        assert_eq!(stop, InnerStop::Reached);
        assert_eq!(res.inner_iters, 1);
        assert_eq!(log.stepsizes, vec![1.0]);
        assert_eq!(st.z_cur, ell.to_vec());
    }

    #[test]
    fn diagonal_stepsizes_in_bounds() {
        let op = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let run = gradient_solve(&op, &[1.0, 2.0], &[0.0, 0.0], BbRule::Bb2, 1e-12, 200).unwrap();
        assert_eq!(run.report.status, Status::Converged);
        assert!((run.z[0] - 1.0).abs() < 1e-10 && (run.z[1] - 1.0).abs() < 1e-10);
        assert!(run.log.stepsizes.iter().all(|a| (0.5..=1.0).contains(a)));
    }

    #[test]
    fn bb1_trajectory() {
        let demo = bb1_divergence_demo([1.0, 0.0], 3);
        assert_eq!(demo.trajectory, vec![[1.0, 0.0], [0.0, 2.0], [-4.0, 0.0], [0.0, -8.0]]);
        assert_eq!(demo.norm_ratios, vec![2.0, 2.0, 2.0]);
        assert_eq!(demo.stepsizes, vec![1.0, 1.0, 1.0]);
        assert_eq!(demo.observed_squared_factor, 4.0);
        assert!(demo.discrepancy.is_some());
    }

    #[test]
    fn bb1_zero_start_is_fixed() {
        let demo = bb1_divergence_demo([0.0, 0.0], 5);
        assert_eq!(demo.trajectory, vec![[0.0, 0.0]]);
        assert!(demo.norm_ratios.is_empty());
    }

    #[test]
    fn stepsize_formulas() {
        let st = BBStepsizes::compute(&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0], &[0.0, 4.0]);
        assert_eq!(st.bb1, 0.5);
        assert_eq!(st.bb2, 0.5);
        assert_eq!(st.mg, 0.25);
    }
}
