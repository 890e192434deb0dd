//! Command-line front end: `gen`, `solve`, `analyze` and `bench`.
//!
//! Exit codes: 0 when a run completed (whatever its convergence status),
//! 1 when a computation could not be carried out, 2 for usage errors, 3 for
//! I/O and format errors.

mod bench;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

pub use bench::{parse_bench_config, parse_bench_str, run_bench, BenchConfig};

use crate::analysis;
use crate::error::{Error, Result};
use crate::krylov::{self, KrylovConfig};
use crate::problems::{self, GeneratedProblem, ProblemKind, ProblemSpec};
use crate::report::SolveReport;
use crate::spal::{self, DenseLuInner, GmresInner, InnerSolver};
use crate::spalbb;
use crate::system::{AlConfig, SaddleSystem};

/// Geometric factor applied to δ after each outer pass with `--delta-decay`.
pub const DELTA_DECAY_FACTOR: f64 = 0.9;

pub const CSV_HEADER: &str = "problem,method,omega,delta,oiter,titer,cpu_seconds,final_relres,status";

#[derive(Debug, Parser)]
#[command(name = "alsp", version, about = "Augmented Lagrangian solvers for saddle-point systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a test problem and write it to a directory.
    Gen(GenArgs),
    /// Run one solver on a problem directory.
    Solve(SolveArgs),
    /// Dense spectral analysis of a small problem, as JSON.
    Analyze(AnalyzeArgs),
    /// Run a (problem x method x omega) sweep from a config file.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// stokes-mac, oseen-mac, random or bb1.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Constant wind `wx,wy` for oseen-mac.
    #[arg(long, default_value = "1,0")]
    wind: String,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Rank of B for random problems (defaults to m).
    #[arg(long)]
    rank: Option<usize>,
    /// Diagonal shift of G for random problems.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    shift: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (defaults to the problem id).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem directory written by `gen`.
    #[arg(long)]
    problem: PathBuf,
    /// spal-exact, spal-inexact, spalbb, gmres or bicgstab.
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// GMRES restart length (also used by the spal-inexact inner solver).
    #[arg(long, default_value_t = 20)]
    restart: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    maxit: usize,
    /// Multiply δ by 0.9 after every outer pass.
    #[arg(long)]
    delta_decay: bool,
    /// Result CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the relative-residual history as `iteration,relres`.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// JSON report (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `threads` from the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Result CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A solver choice for `solve` and `bench`.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    SpalExact,
    /// Inexact SPAL with GMRES(restart) inner solves, or dense LU when `None`.
    SpalInexact { restart: Option<usize> },
    Spalbb,
    Gmres { restart: usize },
    Bicgstab,
}

impl Method {
    /// Accepts `spal-exact`, `spal-inexact`, `spal-inexact(lu)`,
    /// `spal-inexact(gmres(k))`, `spalbb`, `gmres`, `gmres(k)` and `bicgstab`.
    /// Underscores may stand in for hyphens.
    pub fn parse(s: &str, default_restart: usize) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        let restart_of = |inner: &str| -> Result<usize> {
            inner
                .parse::<usize>()
                .ok()
                .filter(|k| *k > 0)
                .ok_or_else(|| Error::InvalidParameter(format!("bad restart length in `{s}`")))
        };
        let m = match t.as_str() {
            "spal-exact" | "spal" => Method::SpalExact,
            "spal-inexact" => Method::SpalInexact {
                restart: Some(default_restart),
            },
            "spal-inexact(lu)" => Method::SpalInexact { restart: None },
            "spalbb" => Method::Spalbb,
            "gmres" => Method::Gmres {
                restart: default_restart,
            },
            "bicgstab" => Method::Bicgstab,
            _ => {
                if let Some(k) = t
                    .strip_prefix("spal-inexact(gmres(")
                    .and_then(|r| r.strip_suffix("))"))
                {
                    Method::SpalInexact {
                        restart: Some(restart_of(k)?),
                    }
                } else if let Some(k) = t.strip_prefix("gmres(").and_then(|r| r.strip_suffix(')')) {
                    Method::Gmres {
                        restart: restart_of(k)?,
                    }
                } else {
                    return Err(Error::InvalidParameter(format!("unknown method `{s}`")));
                }
            }
        };
        Ok(m)
    }

    pub fn name(&self) -> String {
        match self {
            Method::SpalExact => "spal-exact".into(),
            Method::SpalInexact { restart: None } => "spal-inexact(lu)".into(),
            Method::SpalInexact { restart: Some(k) } => format!("spal-inexact(gmres({k}))"),
            Method::Spalbb => "spalbb".into(),
            Method::Gmres { restart } => format!("gmres({restart})"),
            Method::Bicgstab => "bicgstab".into(),
        }
    }
}

/// Parameters of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub omega: f64,
    pub delta: f64,
    pub tol: f64,
    pub maxit: usize,
    pub delta_decay: Option<f64>,
}

/// One line of a result table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub problem: String,
    pub method: String,
    pub omega: f64,
    pub delta: f64,
    pub oiter: usize,
    pub titer: f64,
    pub cpu_seconds: f64,
    pub final_relres: f64,
    pub status: String,
}

/// Commas would shift columns; ids come from directory names and messages.
fn csv_field(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.6e},{}",
            csv_field(&self.problem),
            self.method,
            self.omega,
            self.delta,
            self.oiter,
            self.titer,
            self.cpu_seconds,
            self.final_relres,
            csv_field(&self.status)
        )
    }
}

/// Runs `method` on `sys` from the zero initial guess.
///
/// Solver errors (a singular `M`, a problem too large for a dense
/// factorization) are not propagated; they become an `error:` status so a
/// sweep can continue.
pub fn run_method(
    problem_id: &str,
    sys: &SaddleSystem,
    method: &Method,
    p: &RunParams,
) -> (ResultRow, Option<(SolveReport, Vec<f64>)>) {
    let start = Instant::now();
    let result = solve_with(sys, method, p);
    let cpu_seconds = start.elapsed().as_secs_f64();
    let mut row = ResultRow {
        problem: problem_id.to_string(),
        method: method.name(),
        omega: p.omega,
        delta: p.delta,
        oiter: 0,
        titer: 0.0,
        cpu_seconds,
        final_relres: f64::NAN,
        status: String::new(),
    };
    match result {
        Ok((report, z)) => {
            row.oiter = report.outer_iters;
            row.titer = report.total_iters;
            row.final_relres = report.final_relres;
            row.status = report.status.to_string();
            (row, Some((report, z)))
        }
        Err(e) => {
            row.status = format!("error: {e}");
            (row, None)
        }
    }
}

fn solve_with(sys: &SaddleSystem, method: &Method, p: &RunParams) -> Result<(SolveReport, Vec<f64>)> {
    let cfg = AlConfig {
        omega: p.omega,
        delta: p.delta,
        tol: p.tol,
        maxit: p.maxit,
        delta_decay: p.delta_decay,
        ..AlConfig::default()
    };
    let z0 = vec![0.0; sys.dim()];
    let out = match method {
        Method::SpalExact => spal::spal_exact(sys, &cfg, &z0[sys.n()..])?,
        Method::SpalInexact { restart } => {
            let mut inner: Box<dyn InnerSolver> = match restart {
                Some(k) => Box::new(GmresInner::new(*k)),
                None => Box::new(DenseLuInner::new(sys, &cfg)?),
            };
            spal::spal_inexact(sys, &cfg, inner.as_mut(), &z0)?
        }
        Method::Spalbb => spalbb::spalbb(sys, &cfg, &z0, None)?,
        Method::Gmres { restart } => {
            let kc = KrylovConfig::gmres(*restart, p.tol, p.maxit);
            kc.validate()?;
            let o = krylov::solve(&sys.operator(), &sys.rhs(), &z0, &kc)?;
            return Ok((o.report, o.z));
        }
        Method::Bicgstab => {
            let kc = KrylovConfig::bicgstab(p.tol, p.maxit);
            kc.validate()?;
            let o = krylov::solve(&sys.operator(), &sys.rhs(), &z0, &kc)?;
            return Ok((o.report, o.z));
        }
    };
    Ok((out.report, out.z))
}

/// `iteration,relres` lines for a residual history.
pub fn history_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,relres\n");
    for (k, r) in history.iter().enumerate() {
        let _ = writeln!(s, "{k},{r:.6e}");
    }
    s
}

/// Parses and runs a command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::MissingFile(_) | Error::Parse { .. } | Error::Structure(_) => 3,
        Error::InvalidParameter(_) | Error::TooLarge { .. } | Error::Dimension { .. } => 2,
        _ => 1,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(p, text).map_err(|e| Error::io(p, e))
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

pub(crate) fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split([',', ':']).map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(x), Ok(y)) => Ok([x, y]),
            _ => Err(Error::InvalidParameter(format!("bad pair `{s}`"))),
        },
        _ => Err(Error::InvalidParameter(format!(
            "expected two components, got `{s}`"
        ))),
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let kind = match a.problem.to_ascii_lowercase().replace('_', "-").as_str() {
        "stokes-mac" | "stokes" => ProblemKind::StokesMac {
            grid: a.grid,
            nu: a.nu,
        },
        "oseen-mac" | "oseen" => ProblemKind::OseenMac {
            grid: a.grid,
            nu: a.nu,
            wind: parse_pair(&a.wind)?,
        },
        "random" => ProblemKind::Random {
            n: a.n,
            m: a.m,
            rank: a.rank.unwrap_or(a.m),
            shift: a.shift,
        },
        "bb1" => ProblemKind::Bb1Counterexample,
        other => {
            return Err(Error::InvalidParameter(format!("unknown problem `{other}`")));
        }
    };
    let spec = ProblemSpec::new(kind, a.seed);
    let problem = problems::generate(&spec)?;
    let out = a.out.unwrap_or_else(|| PathBuf::from(spec.id()));
    problems::save(&problem, &out)?;
    let sys = &problem.system;
    println!(
        "n={} m={} b_rank={} dir={}",
        sys.n(),
        sys.m(),
        sys.b_rank().map_or("unknown".into(), |s| s.to_string()),
        out.display()
    );
    Ok(())
}

/// Name used for a problem directory in result rows.
pub fn problem_id(dir: &Path, problem: &GeneratedProblem) -> String {
    let labels = &problem.system.labels;
    match (labels.get("kind"), labels.get("grid")) {
        (Some(k), Some(g)) => {
            let nu = labels.get("nu").map_or(String::new(), |v| format!("_nu{v}"));
            format!("{k}_N{g}{nu}")
        }
        _ => dir
            .file_name()
            .map_or_else(|| dir.display().to_string(), |f| f.to_string_lossy().into_owned()),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let method = Method::parse(&a.method, a.restart)?;
    let problem = problems::load(&a.problem)?;
    let id = problem_id(&a.problem, &problem);
    let params = RunParams {
        omega: a.omega,
        delta: a.delta,
        tol: a.tol,
        maxit: a.maxit,
        delta_decay: a.delta_decay.then_some(DELTA_DECAY_FACTOR),
    };
    if let Some(e) = invalid_params(&problem.system, &method, &params) {
        return Err(e);
    }
    let (row, run) = run_method(&id, &problem.system, &method, &params);
    emit(a.out.as_deref(), &format!("{CSV_HEADER}\n{}\n", row.to_csv()))?;
    if let Some(h) = &a.history {
        let hist = run.as_ref().map_or(&[][..], |(r, _)| &r.residual_history[..]);
        emit(Some(h), &history_csv(hist))?;
    }
    Ok(())
}

/// Parameter errors are usage errors, not per-run statuses.
fn invalid_params(sys: &SaddleSystem, method: &Method, p: &RunParams) -> Option<Error> {
    let res = match method {
        Method::Gmres { restart } => KrylovConfig::gmres(*restart, p.tol, p.maxit).validate(),
        Method::Bicgstab => KrylovConfig::bicgstab(p.tol, p.maxit).validate(),
        _ => AlConfig {
            omega: p.omega,
            delta: p.delta,
            tol: p.tol,
            maxit: p.maxit,
            delta_decay: p.delta_decay,
            ..AlConfig::default()
        }
        .validate(sys.m()),
    };
    res.err()
}

/// Replaces non-finite numbers by the strings `"inf"`, `"-inf"`, `"nan"`.
fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn section<T: serde::Serialize>(r: Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or_else(|e| json!({ "error": e.to_string() })),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// The JSON document written by `analyze`.
pub fn analysis_report(id: &str, sys: &SaddleSystem, cfg: &AlConfig) -> Result<Value> {
    analysis::check_dense(sys)?;
    let spectral = analysis::theorem_conditions(sys, cfg)?;
    let ranges = json!({
        "omega_exact": [0.0, finite_or_string(spectral.omega_max_exact)],
        "omega_inexact": [0.0, finite_or_string(spectral.omega_max_inexact)],
        "delta_inexact": [0.0, finite_or_string(spectral.delta_max_inexact)],
    });
    let m = sys.dense_m(cfg.omega, &cfg.q_mode);
    Ok(json!({
        "problem": id,
        "dense_cap": analysis::dense_cap(),
        "spectral": serde_json::to_value(&spectral).map_err(|e| Error::InvalidParameter(e.to_string()))?,
        "admissible": ranges,
        "bb2_condition_shifted": section(analysis::bb2_condition(&m)),
        "spalbb_condition": section(analysis::spalbb_condition(sys, cfg)),
    }))
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let problem = problems::load(&a.problem)?;
    let id = problem_id(&a.problem, &problem);
    let cfg = AlConfig::default()
        .with_omega(a.omega)
        .with_delta(a.delta)
        .with_beta(a.beta);
    let report = analysis_report(&id, &problem.system, &cfg)?;
    let mut text = serde_json::to_string_pretty(&report).expect("JSON values serialize");
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut cfg = parse_bench_config(&a.config)?;
    if let Some(t) = a.threads {
        if t == 0 {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        cfg.threads = t;
    }
    let rows = run_bench(&cfg)?;
    let mut text = format!("{CSV_HEADER}\n");
    for r in &rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}
