//! Inexact iteration with restarted GMRES as the inner solver, at the
//! largest relative tolerance the contraction analysis allows.

use alsp::analysis::theorem_conditions;
use alsp::problems::{self, ProblemSpec};
use alsp::spal::{spal_inexact, GmresInner};
use alsp::AlConfig;

fn main() -> alsp::Result<()> {
    let sys = problems::generate(&ProblemSpec::stokes(8, 1.0))?.system;
    let cfg = AlConfig::default().with_omega(0.1);
    let rep = theorem_conditions(&sys, &cfg)?;
    println!("‖N M⁻¹‖ = {:.4}, admissible δ ≤ {:.4}", rep.nm_norm, rep.delta_max_inexact);

    for delta in [0.01, 0.5 * rep.delta_max_inexact, rep.delta_max_inexact] {
        let cfg = cfg.clone().with_delta(delta);
        let out = spal_inexact(&sys, &cfg, &mut GmresInner::new(20), &vec![0.0; sys.dim()])?;
        println!(
            "δ = {delta:.4}: {} with {} outer / {} inner iterations, relres {:.2e}",
            out.report.status, out.report.outer_iters, out.report.total_iters, out.report.final_relres
        );
    }
    Ok(())
}
