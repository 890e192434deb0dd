//! Exact augmented Lagrangian iteration on a small Stokes problem, with the
//! observed rate compared against the pseudo-spectral radius of T.

use alsp::analysis::iteration_matrix_spectrum;
use alsp::problems::{self, ProblemSpec};
use alsp::spal::spal_exact;
use alsp::AlConfig;

fn main() -> alsp::Result<()> {
    let sys = problems::generate(&ProblemSpec::stokes(4, 1.0))?.system;
    for omega in [1.0, 0.1, 0.01] {
        let cfg = AlConfig::default().with_omega(omega).with_tol(1e-12);
        let out = spal_exact(&sys, &cfg, &vec![0.0; sys.m()])?;
        let h = &out.report.residual_history;
        let k = h.len() - 1;
        let j = k.saturating_sub(5);
        let rate = (h[k] / h[j]).powf(1.0 / (k - j).max(1) as f64);
        let v = iteration_matrix_spectrum(&sys, &cfg)?.v_t;
        println!(
            "ω = {omega:<5} {} after {:2} iterations, observed rate {rate:.3e}, v(T) = {v:.3e}",
            out.report.status, out.report.outer_iters
        );
    }
    Ok(())
}
