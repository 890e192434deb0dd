//! Generates the three problem families and writes one to disk in Matrix Market form.

use alsp::problems::{self, ProblemSpec};

fn main() -> alsp::Result<()> {
    let specs = [
        ProblemSpec::stokes(8, 1.0),
        ProblemSpec::oseen(8, 0.01, [1.0, 0.0]),
        ProblemSpec::random(30, 10, 7, 0.5).with_seed(3),
    ];
    for spec in &specs {
        let p = problems::generate(spec)?;
        let sys = &p.system;
        println!("{:<40} n = {:4}  m = {:4}  nnz(G) = {}", spec.id(), sys.n(), sys.m(), sys.g_matrix().nnz());
        if let Some(props) = &p.properties {
            println!("    rank(B) = {}, G upd: {}, λmin(H) = {:.3e}", props.b_rank, props.g_is_upd, props.h_min_eig);
        }
    }
    let dir = std::env::temp_dir().join("alsp-example-stokes");
    problems::save(&problems::generate(&specs[0])?, &dir)?;
    let back = problems::load(&dir)?;
    println!("round trip through {}: n = {}, m = {}", dir.display(), back.system.n(), back.system.m());
    Ok(())
}
