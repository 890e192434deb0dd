//! Compressed-row sparse matrices.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// A real sparse matrix in compressed-row layout.
///
/// Column indices inside a row are strictly increasing, so a stored entry is
/// never duplicated. Stored values may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 {
            return Err(Error::Structure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                rows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::Structure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Structure(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for r in 0..rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::Structure(format!("row_offsets decreases at row {r}")));
            }
            let cols_in_row = &col_indices[lo..hi];
            for (k, &c) in cols_in_row.iter().enumerate() {
                if c >= cols {
                    return Err(Error::Structure(format!(
                        "column index {c} out of range in row {r} (cols = {cols})"
                    )));
                }
                if k > 0 && cols_in_row[k - 1] >= c {
                    return Err(Error::Structure(format!(
                        "column indices not strictly increasing in row {r}"
                    )));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicate positions are rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Self::assemble(rows, cols, triplets, false)
    }

    /// Like [`from_triplets`](Self::from_triplets) but sums entries that share a position,
    /// which is what finite-difference assembly wants.
    pub fn from_triplets_summed(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        Self::assemble(rows, cols, triplets, true)
    }

    fn assemble(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
        sum_duplicates: bool,
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::Structure(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // stable sort keeps the summation order of duplicates deterministic
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                if !sum_duplicates {
                    return Err(Error::Structure(format!("duplicate entry at ({r}, {c})")));
                }
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::from_csr(rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Stores every nonzero of a dense matrix.
    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &triplets).expect("dense entries are unique")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_offsets[r]..self.row_offsets[r + 1])
                .map(move |k| (r, self.col_indices[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        match self.col_indices[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] = v;
        }
        d
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &t).expect("transpose keeps positions unique")
    }

    /// `y = A x`, overwriting `y`.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        Error::check_len("spmv input", self.cols, x.len())?;
        Error::check_len("spmv output", self.rows, y.len())?;
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yr = acc;
        }
        Ok(())
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = Aᵀ x` by scattering rows, overwriting `y`. No transpose is formed.
    pub fn spmv_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        Error::check_len("spmv_transpose input", self.rows, x.len())?;
        Error::check_len("spmv_transpose output", self.cols, y.len())?;
        y.fill(0.0);
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                y[self.col_indices[k]] += self.values[k] * xr;
            }
        }
        Ok(())
    }

    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.cols];
        self.spmv_transpose_into(x, &mut y)?;
        Ok(y)
    }

    /// Largest absolute difference between `A` and `Aᵀ`; zero for exactly symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}
