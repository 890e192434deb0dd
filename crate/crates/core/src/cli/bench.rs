//! Benchmark sweeps over a (problem x method x omega) grid.
//!
//! Config files are flat `key=value` lines; `#` starts a comment and
//! repeated keys form lists:
//!
//! ```text
//! problem=stokes-mac,grid=8,nu=1
//! problem=oseen-mac,grid=8,nu=0.01,wind=1:0
//! method=spalbb
//! method=gmres(20)
//! omega=1e-1
//! omega=1e-3
//! delta=0.5
//! tol=1e-6
//! maxit=100000
//! seed=1
//! threads=4
//! ```
//!
//! `omega` also accepts a comma-separated list on one line.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{parse_pair, problem_id, run_method, Method, ResultRow, RunParams};
use crate::error::{Error, Result};
use crate::problems::{self, GeneratedProblem, ProblemKind, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Generated specs; `ProblemKind::Import` entries read a directory.
    pub problems: Vec<ProblemSpec>,
    pub methods: Vec<Method>,
    pub omegas: Vec<f64>,
    pub delta: f64,
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub threads: usize,
    pub delta_decay: Option<f64>,
}

impl BenchConfig {
    pub fn cells(&self) -> usize {
        self.problems.len() * self.methods.len() * self.omegas.len()
    }
}

const DEFAULT_RESTART: usize = 20;

/// Reads a config file; errors carry the offending line number.
pub fn parse_bench_config(path: &Path) -> Result<BenchConfig> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_bench_str(&text, &path.display().to_string())
}

/// [`parse_bench_config`] on text; `origin` names the source in errors.
pub fn parse_bench_str(text: &str, origin: &str) -> Result<BenchConfig> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut cfg = BenchConfig {
        problems: Vec::new(),
        methods: Vec::new(),
        omegas: Vec::new(),
        delta: 0.5,
        tol: 1e-6,
        maxit: 100_000,
        seed: 1,
        threads: 1,
        delta_decay: None,
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(lineno, format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| err(lineno, format!("`{key}` expects a number, got `{v}`")))
        };
        let count = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| err(lineno, format!("`{key}` expects a count, got `{v}`")))
        };
        match key {
            "problem" => cfg
                .problems
                .push(parse_problem(value).map_err(|e| err(lineno, e.to_string()))?),
            "method" => cfg.methods.push(
                Method::parse(value, DEFAULT_RESTART).map_err(|e| err(lineno, e.to_string()))?,
            ),
            "omega" => {
                for v in value.split(',') {
                    let w = num(v.trim())?;
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(err(lineno, format!("omega must be positive, got {w}")));
                    }
                    cfg.omegas.push(w);
                }
            }
            "delta" => cfg.delta = num(value)?,
            "tol" => cfg.tol = num(value)?,
            "maxit" => cfg.maxit = count(value)?,
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| err(lineno, format!("bad seed `{value}`")))?
            }
            "threads" => cfg.threads = count(value)?,
            "delta_decay" => cfg.delta_decay = Some(num(value)?),
            other => return Err(err(lineno, format!("unknown key `{other}`"))),
        }
    }
    let whole = |msg: &str| err(0, msg.to_string());
    if cfg.problems.is_empty() {
        return Err(whole("no `problem` entries"));
    }
    if cfg.methods.is_empty() {
        return Err(whole("no `method` entries"));
    }
    if cfg.omegas.is_empty() {
        return Err(whole("no `omega` entries"));
    }
    if !(cfg.tol > 0.0) {
        return Err(whole("tol must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.delta) {
        return Err(whole("delta must lie in [0, 1)"));
    }
    if cfg.threads == 0 {
        return Err(whole("threads must be >= 1"));
    }
    Ok(cfg)
}

/// `kind,key=value,...` with kind one of stokes-mac, oseen-mac, random, bb1
/// or import (`import,dir=path`, or just `dir=path`).
fn parse_problem(s: &str) -> Result<ProblemSpec> {
    let mut parts = s.split(',').map(str::trim);
    let first = parts.next().unwrap_or("");
    let mut kind = first.to_ascii_lowercase().replace('_', "-");
    let mut kv: Vec<(String, String)> = Vec::new();
    if let Some((k, v)) = first.split_once('=') {
        kind = "import".into();
        kv.push((k.trim().into(), v.trim().into()));
    }
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value in problem, got `{p}`")))?;
        kv.push((k.trim().into(), v.trim().into()));
    }
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let num = |key: &str, default: f64| -> Result<f64> {
        get(key).map_or(Ok(default), |v| {
            v.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad {key} `{v}`")))
        })
    };
    let count = |key: &str, default: usize| -> Result<usize> {
        get(key).map_or(Ok(default), |v| {
            v.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad {key} `{v}`")))
        })
    };
    let kind = match kind.as_str() {
        "stokes-mac" | "stokes" => ProblemKind::StokesMac {
            grid: count("grid", 8)?,
            nu: num("nu", 1.0)?,
        },
        "oseen-mac" | "oseen" => ProblemKind::OseenMac {
            grid: count("grid", 8)?,
            nu: num("nu", 1.0)?,
            wind: get("wind").map_or(Ok([1.0, 0.0]), parse_pair)?,
        },
        "random" => {
            let m = count("m", 8)?;
            ProblemKind::Random {
                n: count("n", 20)?,
                m,
                rank: count("rank", m)?,
                shift: num("shift", 1.0)?,
            }
        }
        "bb1" => ProblemKind::Bb1Counterexample,
        "import" => ProblemKind::Import(PathBuf::from(
            get("dir").ok_or_else(|| Error::InvalidParameter("import needs dir=path".into()))?,
        )),
        other => return Err(Error::InvalidParameter(format!("unknown problem `{other}`"))),
    };
    let spec = ProblemSpec::new(kind, 1);
    spec.validate()?;
    Ok(spec)
}

fn bench_id(spec: &ProblemSpec, problem: &GeneratedProblem) -> String {
    match &spec.kind {
        ProblemKind::Import(dir) => problem_id(dir, problem),
        _ => spec.id(),
    }
}

/// Runs every cell of the grid, in parallel on `cfg.threads` workers.
///
/// Rows come back in grid order (problem, then method, then ω) whatever the
/// scheduling. A problem that fails to build marks all of its cells with an
/// `error:` status instead of aborting the sweep.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<ResultRow>> {
    let built: Vec<(String, std::result::Result<GeneratedProblem, String>)> = cfg
        .problems
        .iter()
        .map(|spec| {
            let spec = spec.clone().with_seed(cfg.seed);
            match problems::generate(&spec) {
                Ok(p) => (bench_id(&spec, &p), Ok(p)),
                Err(e) => (spec.id(), Err(e.to_string())),
            }
        })
        .collect();
    let mut cells = Vec::with_capacity(cfg.cells());
    for (pi, _) in built.iter().enumerate() {
        for method in &cfg.methods {
            for &omega in &cfg.omegas {
                cells.push((pi, method, omega));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&(pi, method, omega)| {
                let (id, problem) = &built[pi];
                let params = RunParams {
                    omega,
                    delta: cfg.delta,
                    tol: cfg.tol,
                    maxit: cfg.maxit,
                    delta_decay: cfg.delta_decay,
                };
                match problem {
                    Ok(p) => run_method(id, &p.system, method, &params).0,
                    Err(msg) => ResultRow {
                        problem: id.clone(),
                        method: method.name(),
                        omega,
                        delta: cfg.delta,
                        oiter: 0,
                        titer: 0.0,
                        cpu_seconds: 0.0,
                        final_relres: f64::NAN,
                        status: format!("error: {msg}"),
                    },
                }
            })
            .collect()
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_defaults() {
        let cfg = parse_bench_str(
            "# sweep\nproblem=stokes-mac,grid=4,nu=1\nmethod=spalbb\nmethod=gmres(20)\nomega=1e-1,1e-2\nomega=1e-3\n",
            "t",
        )
        .unwrap();
        assert_eq!(cfg.problems.len(), 1);
        assert_eq!(cfg.methods, vec![Method::Spalbb, Method::Gmres { restart: 20 }]);
        assert_eq!(cfg.omegas, vec![0.1, 0.01, 0.001]);
        assert_eq!((cfg.tol, cfg.maxit, cfg.threads), (1e-6, 100_000, 1));
        assert_eq!(cfg.cells(), 6);
    }

    #[test]
    fn empty_method_list_is_an_error() {
        let e = parse_bench_str("problem=stokes-mac,grid=4\nomega=1\n", "t").unwrap_err();
        assert!(e.to_string().contains("method"));
    }

    #[test]
    fn error_names_line() {
        let e = parse_bench_str("problem=stokes-mac\nmethod=spalbb\nomega=abc\n", "cfg.txt").unwrap_err();
        assert!(e.to_string().starts_with("cfg.txt:3:"), "{e}");
    }

    #[test]
    fn wind_and_import() {
        let p = parse_problem("oseen-mac,grid=4,nu=0.01,wind=1:0.5").unwrap();
        assert_eq!(p.kind, ProblemKind::OseenMac { grid: 4, nu: 0.01, wind: [1.0, 0.5] });
        let q = parse_problem("dir=some/where").unwrap();
        assert_eq!(q.kind, ProblemKind::Import(PathBuf::from("some/where")));
    }
}
