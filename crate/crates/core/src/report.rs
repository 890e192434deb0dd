use std::fmt;

use serde::Serialize;

/// How an iterative solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// The total-iteration cap was reached first.
    MaxIt,
    /// A recurrence scalar vanished.
    Breakdown,
    /// The residual became non-finite or grew past [`DIVERGENCE_FACTOR`].
    Diverged,
    /// The inner solver missed its target at the given outer index.
    InnerFailure { outer: usize },
}

/// `‖r_k‖ / ‖r_0‖` above this marks a run as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

impl Status {
    pub fn is_converged(&self) -> bool {
        matches!(self, Status::Converged)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => f.write_str("converged"),
            Status::MaxIt => f.write_str("maxit"),
            Status::Breakdown => f.write_str("breakdown"),
            Status::Diverged => f.write_str("diverged"),
            Status::InnerFailure { outer } => write!(f, "inner_failure@{outer}"),
        }
    }
}

/// Iteration counts and residual trace of one solve.
///
/// `residual_history` holds `‖r_k‖/‖r_0‖`, starting at 1. `total_iters` is a
/// real number because BiCGSTAB counts half steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: Status,
    pub outer_iters: usize,
    pub total_iters: f64,
    pub final_relres: f64,
    pub residual_history: Vec<f64>,
    pub wall_seconds: f64,
}

/// A report together with the final iterate `z = (x, y)`.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub z: Vec<f64>,
}

impl SolveOutcome {
    pub fn x(&self, n: usize) -> &[f64] {
        &self.z[..n]
    }

    pub fn y(&self, n: usize) -> &[f64] {
        &self.z[n..]
    }
}

/// Relative residual with the convention `0 / 0 = 0`.
pub(crate) fn relative(rnorm: f64, r0norm: f64) -> f64 {
    if r0norm == 0.0 {
        if rnorm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        rnorm / r0norm
    }
}

pub(crate) fn is_diverging(relres: f64) -> bool {
    !relres.is_finite() || relres > DIVERGENCE_FACTOR
}
