//! Restarted GMRES and BiCGSTAB on the full saddle-point operator.

use alsp::krylov::{self, KrylovConfig};
use alsp::problems::{self, ProblemSpec};

fn main() -> alsp::Result<()> {
    let sys = problems::generate(&ProblemSpec::oseen(8, 0.01, [1.0, 0.0]))?.system;
    let z0 = vec![0.0; sys.dim()];
    for cfg in [
        KrylovConfig::gmres(10, 1e-6, 100_000),
        KrylovConfig::gmres(20, 1e-6, 100_000),
        KrylovConfig::gmres(50, 1e-6, 100_000),
        KrylovConfig::bicgstab(1e-6, 100_000),
    ] {
        let out = krylov::solve(&sys.operator(), &sys.rhs(), &z0, &cfg)?;
        println!(
            "{:<12} {} after {} iterations, relres {:.2e}",
            format!("{:?}", cfg.method),
            out.report.status,
            out.report.total_iters,
            out.report.final_relres
        );
    }
    Ok(())
}
