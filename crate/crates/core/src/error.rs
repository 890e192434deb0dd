use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid matrix structure: {0}")]
    Structure(String),

    #[error("matrix is singular to working tolerance (pivot {pivot}, |pivot| = {magnitude:e})")]
    Singular { pivot: usize, magnitude: f64 },

    #[error("shifted matrix M is singular at pivot {pivot}{}", admissible_hint(*.omega_max_exact))]
    SingularShifted {
        pivot: usize,
        omega_max_exact: Option<f64>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("problem size n+m = {size} exceeds the dense analysis cap of {cap} (set ALSP_DENSE_CAP to override)")]
    TooLarge { size: usize, cap: usize },

    #[error("eigendecomposition did not converge: {0}")]
    Eigen(String),

    #[error("standing assumption violated: {what} (smallest eigenvalue {lambda_min:e})")]
    Assumption { what: &'static str, lambda_min: f64 },
}

fn admissible_hint(omega_max: Option<f64>) -> String {
    match omega_max {
        Some(w) if w.is_infinite() => "; every omega > 0 is admissible for this system".into(),
        Some(w) => format!("; admissible range is 0 < omega < {w:e}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension {
                context,
                expected,
                got,
            })
        }
    }
}
