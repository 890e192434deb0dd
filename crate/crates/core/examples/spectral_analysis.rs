//! Dense diagnostics: η, admissible ranges, and the spectrum of T against its closed form.

use alsp::analysis::{iteration_matrix_spectrum, theorem_conditions};
use alsp::problems::{self, ProblemSpec};
use alsp::AlConfig;

fn main() -> alsp::Result<()> {
    let specs = [
        ProblemSpec::stokes(4, 1.0),
        ProblemSpec::random(20, 8, 5, 0.3).with_seed(4),
        // H indefinite on the null space of Bᵀ: the analysis refuses it
        ProblemSpec::random(20, 8, 5, -0.2).with_seed(4),
    ];
    for spec in specs {
        let sys = problems::generate(&spec)?.system;
        let cfg = AlConfig::default().with_omega(0.2);
        println!("{}", spec.id());
        let rep = match theorem_conditions(&sys, &cfg) {
            Ok(r) => r,
            Err(e) => {
                println!("  not analysable: {e}");
                continue;
            }
        };
        let spec_rep = iteration_matrix_spectrum(&sys, &cfg)?;
        println!("  η = {:.4}, ω_max = {}, δ_max = {:.4}", rep.eta, rep.omega_max_exact, rep.delta_max_inexact);
        println!("  rank(B) = {}, ρ(T) = {:.4}, v(T) = {:.4}", spec_rep.s_rank, spec_rep.rho_t, spec_rep.v_t);
        println!("  eigenvalues match the closed form to {:.1e}", spec_rep.match_error);
    }
    Ok(())
}
