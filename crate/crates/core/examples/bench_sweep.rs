//! A small benchmark grid run through the same code path as `alsp bench`.

use alsp::cli::{parse_bench_str, run_bench, CSV_HEADER};

const CONFIG: &str = "\
problem=stokes-mac,grid=8,nu=1
problem=oseen-mac,grid=8,nu=0.01,wind=1:0
method=spalbb
method=gmres(20)
method=bicgstab
omega=1e-1,1e-3
delta=0.5
";

fn main() -> alsp::Result<()> {
    let cfg = parse_bench_str(CONFIG, "bench_sweep")?;
    println!("{CSV_HEADER}");
    for row in run_bench(&cfg)? {
        println!("{}", row.to_csv());
    }
    Ok(())
}
