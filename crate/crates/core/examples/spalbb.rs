//! SPALBB on the Oseen problem: inner solves by BB2 gradient steps.

use alsp::problems::{self, ProblemSpec};
use alsp::spalbb::spalbb;
use alsp::AlConfig;

fn main() -> alsp::Result<()> {
    let sys = problems::generate(&ProblemSpec::oseen(8, 0.01, [1.0, 0.0]))?.system;
    let cfg = AlConfig::default().with_omega(1e-3).with_delta(0.5);
    let out = spalbb(&sys, &cfg, &vec![0.0; sys.dim()], None)?;
    let r = &out.report;
    println!("{} after {} outer and {} gradient steps, relres {:.2e}", r.status, r.outer_iters, r.total_iters, r.final_relres);
    let (lo, hi) = out
        .trace
        .stepsizes
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), a| (lo.min(*a), hi.max(*a)));
    println!("stepsizes in [{lo:.3e}, {hi:.3e}]");
    for (k, n) in out.trace.inner_iters.iter().enumerate().take(10) {
        println!("  outer {k:2}: {n} inner steps");
    }
    Ok(())
}
