mod common;

use alsp::analysis::{self, residual_block_decomposition, theorem_conditions};
use alsp::spal::{
    spal_exact, spal_inexact, spal_inexact_with_bound, DenseLuInner, GmresInner, InnerSolveRequest,
    InnerSolveResult, InnerSolver,
};
use alsp::{AlConfig, InnerNorm, Result, Status};
use common::*;
use nalgebra::DVector;

fn recording(cfg: AlConfig) -> AlConfig {
    AlConfig {
        record_residuals: true,
        ..cfg
    }
}

#[test]
fn toy_y_error_halves_every_step() {
    let sys = toy();
    let cfg = AlConfig::default().with_tol(1e-15).with_maxit(30);
    let out = spal_exact(&sys, &recording(cfg), &[1.0]).unwrap();
    let ys: Vec<f64> = out.trace.iterates.iter().map(|z| z[2]).collect();
    for w in ys.windows(2).skip(1) {
        if w[0].abs() > 1e-300 {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-12, "{} / {}", w[1], w[0]);
        }
    }
    let oracle = dense_solve(&assemble_a(&sys), &rhs(&sys));
    assert!(diff_norm(&out.z, &oracle) < 1e-8);
}

#[test]
fn exact_start_takes_one_iteration() {
    let sys = toy();
    let out = spal_exact(&sys, &AlConfig::default(), &[0.0]).unwrap();
    assert_eq!(out.report.status, Status::Converged);
    assert!(out.report.outer_iters <= 1);
}

/// The iterates also satisfy the Schur-complement form of the update:
/// `(G + ω⁻¹BBᵀ)x_{k+1} + By_k = f − ω⁻¹Bg`, `y_{k+1} = y_k + ω⁻¹(Bᵀx_{k+1} + g)`.
#[test]
fn iterates_satisfy_schur_form() {
    for (sys, omega) in [
        (random_problem(8, 4, 4, 0.5, 3), 0.7),
        (random_problem(10, 5, 3, 1.0, 5), 2.0),
        (stokes(4), 0.1),
    ] {
        let n = sys.n();
        let cfg = recording(AlConfig::default().with_omega(omega).with_maxit(15).with_tol(1e-14));
        let out = spal_exact(&sys, &cfg, &vec![0.3; sys.m()]).unwrap();
        let g = to_na(sys.g_matrix());
        let b = to_na(sys.b_matrix());
        let s = &g + &b * b.transpose() / omega;
        let gv = DVector::from_column_slice(sys.g());
        let fv = DVector::from_column_slice(sys.f());
        let rhs_x = &fv - &b * &gv / omega;
        for w in out.trace.iterates.windows(2) {
            let (xk1, yk) = (DVector::from_column_slice(&w[1][..n]), DVector::from_column_slice(&w[0][n..]));
            let yk1 = DVector::from_column_slice(&w[1][n..]);
            let lhs = &s * &xk1 + &b * &yk;
            assert!((&lhs - &rhs_x).norm() <= 1e-9 * rhs_x.norm().max(lhs.norm()));
            let ypred = &yk + (b.transpose() * &xk1 + &gv) / omega;
            assert!((&ypred - &yk1).norm() <= 1e-9 * yk1.norm().max(1.0));
        }
    }
}

#[test]
fn zero_delta_with_lu_inner_reproduces_exact() {
    let sys = random_problem(10, 4, 4, 0.3, 11);
    let cfg = recording(AlConfig::default().with_delta(0.0).with_omega(0.5).with_tol(1e-10));
    let y0 = vec![0.2; sys.m()];
    let exact = spal_exact(&sys, &cfg, &y0).unwrap();
    let mut z0 = vec![0.0; sys.n()];
    z0.extend_from_slice(&y0);
    let mut inner = DenseLuInner::new(&sys, &cfg).unwrap();
    let inexact = spal_inexact(&sys, &cfg, &mut inner, &z0).unwrap();
    assert_eq!(exact.report.outer_iters, inexact.report.outer_iters);
    for (a, b) in exact.trace.iterates.iter().zip(&inexact.trace.iterates) {
        assert!(diff_norm(a, b) <= 1e-10 * norm(a).max(1.0));
    }
}

#[test]
fn gmres_inner_on_toy_respects_contraction_bound() {
    let sys = toy();
    let cfg = AlConfig {
        inner_norm: InnerNorm::PBeta,
        ..AlConfig::default().with_delta(0.4).with_tol(1e-10)
    };
    let nm = analysis::nm_norm(&sys, &cfg).unwrap();
    assert!((nm - 0.5f64.sqrt()).abs() < 1e-10);
    let mut inner = GmresInner::new(5);
    let out = spal_inexact_with_bound(&sys, &cfg, &mut inner, &[0.0; 3], nm).unwrap();
    assert_eq!(out.report.status, Status::Converged);
    let bound = nm + 0.4 * (1.0 + nm) + 1e-10;
    assert!(!out.trace.pbeta_ratios.is_empty());
    for q in &out.trace.pbeta_ratios {
        assert!(*q <= bound, "{q} > {bound}");
    }
}

#[test]
fn stokes_semi_convergence() {
    let sys = stokes(4);
    let cfg = recording(AlConfig::default().with_omega(0.1));
    let out = spal_exact(&sys, &cfg, &vec![0.0; sys.m()]).unwrap();
    assert_eq!(out.report.status, Status::Converged);
    assert!(relative_residual(&sys, &out.z) <= 1e-5);

    let rep = theorem_conditions(&sys, &cfg).unwrap();
    assert!(rep.exact_spectrally_convergent);
    let icfg = cfg.clone().with_delta(0.9 * rep.delta_max_inexact);
    let mut inner = GmresInner::new(20);
    let z0 = vec![0.0; sys.dim()];
    let inexact = spal_inexact(&sys, &icfg, &mut inner, &z0).unwrap();
    assert_eq!(inexact.report.status, Status::Converged);
    assert!(relative_residual(&sys, &inexact.z) <= 1e-5);
    let blocks = residual_block_decomposition(&sys, &inexact.trace.residuals).unwrap();
    let r0 = norm(&inexact.trace.residuals[0]);
    for b in &blocks.residual_null_component[1..] {
        assert!(*b <= 1e-10 * r0);
    }
}

#[test]
fn singular_system_from_two_starts() {
    let sys = stokes(4);
    let cfg = AlConfig::default().with_omega(0.1).with_tol(1e-8);
    let ell_norm = norm(&rhs(&sys));
    let mut r = rng(2);
    let outs = [
        spal_exact(&sys, &cfg, &vec![0.0; sys.m()]).unwrap(),
        spal_exact(&sys, &cfg, &random_vec(&mut r, sys.m())).unwrap(),
    ];
    for o in &outs {
        assert_eq!(o.report.status, Status::Converged);
        assert!(relative_residual(&sys, &o.z) * ell_norm <= 10.0 * cfg.tol * ell_norm);
    }
    // the pressures may differ by a constant, the velocities may not
    let n = sys.n();
    assert!(diff_norm(&outs[0].z[..n], &outs[1].z[..n]) <= 1e-6 * norm(&outs[0].z[..n]));
}

/// Geometric-mean residual ratio over a window of iterations.
fn observed_rate(history: &[f64], from: usize, to: usize) -> f64 {
    (history[to] / history[from]).powf(1.0 / (to - from) as f64)
}

#[test]
fn exact_rate_matches_pseudo_spectral_radius() {
    let sys = stokes(4);
    let cfg = AlConfig::default().with_omega(1.0).with_tol(1e-13).with_maxit(60);
    let v = analysis::iteration_matrix_spectrum(&sys, &cfg).unwrap().v_t;
    let out = spal_exact(&sys, &cfg, &vec![0.0; sys.m()]).unwrap();
    let h = &out.report.residual_history;
    let to = h.len() - 1;
    let rate = observed_rate(h, to.saturating_sub(30).max(10), to);
    assert!((rate - v).abs() <= 0.05 * v, "rate {rate} vs v(T) {v}");
}

#[test]
fn indefinite_instance_beyond_admissible_range_fails() {
    let sys = indefinite_toy();
    let eta = analysis::compute_eta(&sys, &alsp::QMode::Identity).unwrap();
    assert!((eta + 1.0).abs() < 1e-10);
    // inside the range the iteration converges
    let ok = spal_exact(&sys, &AlConfig::default().with_omega(0.25), &[0.0]).unwrap();
    assert_eq!(ok.report.status, Status::Converged);
    for omega in [2.0, 10.0] {
        let cfg = AlConfig::default().with_omega(omega).with_maxit(500);
        let rho = analysis::iteration_matrix_spectrum(&sys, &cfg).unwrap().rho_t;
        assert!(rho > 1.0);
        let out = spal_exact(&sys, &cfg, &[0.0]).unwrap();
        assert!(matches!(out.report.status, Status::Diverged | Status::MaxIt), "{:?}", out.report.status);
    }
}

struct Lazy;

impl InnerSolver for Lazy {
    fn solve(&mut self, req: &InnerSolveRequest<'_>) -> Result<InnerSolveResult> {
        Ok(InnerSolveResult {
            delta_z: vec![0.0; req.rhs.len()],
            inner_iters: 1,
            achieved_residual: 0.0,
        })
    }
}

#[test]
fn contract_violation_reports_failing_outer_index() {
    let sys = toy();
    let out = spal_inexact(&sys, &AlConfig::default(), &mut Lazy, &[0.0; 3]).unwrap();
    assert_eq!(out.report.status, Status::InnerFailure { outer: 0 });
}

#[test]
fn exact_solves_agree_with_dense_oracle() {
    for seed in 0..4 {
        let sys = random_problem(12, 5, 5, 0.5, seed);
        let out = spal_exact(&sys, &AlConfig::default().with_tol(1e-12), &vec![0.0; 5]).unwrap();
        assert_eq!(out.report.status, Status::Converged);
        let oracle = dense_solve(&assemble_a(&sys), &rhs(&sys));
        assert!(diff_norm(&out.z, &oracle) <= 1e-8 * norm(&oracle));
    }
}

#[test]
fn psd_instances_converge_for_every_omega() {
    let sys = stokes(4);
    for omega in [1e-3, 1e-1, 1.0, 10.0] {
        let cfg = AlConfig::default().with_omega(omega).with_maxit(5000);
        let out = spal_exact(&sys, &cfg, &vec![0.0; sys.m()]).unwrap();
        assert_eq!(out.report.status, Status::Converged, "ω = {omega}");
    }
}
