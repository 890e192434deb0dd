//! Matrix Market (coordinate, real, general) and plain-text vector files.
//!
//! Values are written with 17 significant digits so that a write/read cycle
//! reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })
}

pub fn format_matrix_market(a: &SparseMatrix) -> String {
    let mut out = String::with_capacity(32 * (a.nnz() + 2));
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{} {} {}", a.rows(), a.cols(), a.nnz());
    for (r, c, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v);
    }
    out
}

pub fn parse_matrix_market(text: &str, path: &Path) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(path, 1, format!("malformed header `{header}`")));
    }
    if fields[2] != "coordinate" || fields[3] != "real" || fields[4] != "general" {
        return Err(parse_err(
            path,
            1,
            format!(
                "unsupported format `{} {} {}`; expected `coordinate real general`",
                fields[2], fields[3], fields[4]
            ),
        ));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(parse_err(path, lineno, "size line needs `rows cols nnz`"));
                }
                let p = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(path, lineno, format!("bad integer `{s}`")))
                };
                size = Some((p(toks[0])?, p(toks[1])?, p(toks[2])?));
                triplets.reserve(size.unwrap().2);
            }
            Some((rows, cols, _)) => {
                if toks.len() != 3 {
                    return Err(parse_err(path, lineno, "entry line needs `row col value`"));
                }
                let i: usize = toks[0]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, format!("bad row index `{}`", toks[0])))?;
                let j: usize = toks[1]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, format!("bad column index `{}`", toks[1])))?;
                let v: f64 = toks[2]
                    .parse()
                    .map_err(|_| parse_err(path, lineno, format!("bad value `{}`", toks[2])))?;
                if i == 0 || i > rows || j == 0 || j > cols {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("index ({i}, {j}) out of range for a {rows}x{cols} matrix"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(parse_err(
            path,
            0,
            format!("declared {nnz} entries but found {}", triplets.len()),
        ));
    }
    SparseMatrix::from_triplets(rows, cols, &triplets).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    parse_matrix_market(&read_text(path)?, path)
}

pub fn write_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_market(a)).map_err(|e| Error::io(path, e))
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(24 * (v.len() + 1));
    let _ = writeln!(out, "{}", v.len());
    for x in v {
        let _ = writeln!(out, "{x:.16e}");
    }
    out
}

pub fn parse_vector(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty vector file"))?;
    let len: usize = first
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad length `{}`", first.trim())))?;
    let mut v = Vec::with_capacity(len);
    for (idx, line) in lines {
        let x: f64 = line
            .trim()
            .parse()
            .map_err(|_| parse_err(path, idx + 1, format!("bad value `{}`", line.trim())))?;
        v.push(x);
    }
    if v.len() != len {
        return Err(parse_err(
            path,
            0,
            format!("declared length {len} but found {} values", v.len()),
        ));
    }
    Ok(v)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_vector(&read_text(path)?, path)
}

pub fn write_vector(v: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_vector(v)).map_err(|e| Error::io(path, e))
}
