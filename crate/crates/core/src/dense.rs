//! Row-major dense matrices and LU factorization with partial pivoting.
//!
//! These are for desk-scale work only: exact inner solves in exact-mode
//! SPAL and the spectral diagnostics in [`crate::analysis`].

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Error::check_len("dense matrix values", rows * cols, values.len())?;
        Ok(Self { rows, cols, values })
    }

    /// Panics on ragged input; intended for literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            values.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("dense matvec", self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| crate::vecops::dot(self.row(i), x))
            .collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut d = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                d[(i, j)] = m[(i, j)];
            }
        }
        d
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.values[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.values[i * self.cols + j]
    }
}

/// Relative pivot threshold: a pivot below `PIVOT_TOL * ‖A‖∞` marks the matrix singular.
pub const PIVOT_TOL: f64 = 1e-13;

/// `P A = L U` with unit lower-triangular `L` packed below the diagonal of `lu`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    permutation: Vec<usize>,
    lu: DenseMatrix,
}

impl LuFactorization {
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.dim();
        Error::check_len("lu_solve right-hand side", n, b.len())?;
        let mut x: Vec<f64> = self.permutation.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        b.copy_from_slice(&x);
        Ok(())
    }
}

pub fn dense_lu(a: &DenseMatrix) -> Result<LuFactorization> {
    if a.rows != a.cols {
        return Err(Error::Dimension {
            context: "dense_lu (square matrix required)",
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    let threshold = PIVOT_TOL * a.inf_norm();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= threshold || pmax == 0.0 {
            return Err(Error::Singular {
                pivot: k,
                magnitude: pmax,
            });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                lu.values.swap(p * n + j, k * n + j);
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor != 0.0 {
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= factor * v;
                }
            }
        }
    }
    Ok(LuFactorization {
        permutation: perm,
        lu,
    })
}

pub fn lu_solve(f: &LuFactorization, b: &[f64]) -> Result<Vec<f64>> {
    let mut x = b.to_vec();
    f.solve_in_place(&mut x)?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual_ok(a: &DenseMatrix, x: &[f64], b: &[f64]) -> bool {
        let ax = a.matvec(x).unwrap();
        let r = crate::vecops::norm2(&crate::vecops::sub(&ax, b));
        r <= 1e-10 * (a.inf_norm() * crate::vecops::norm2(x) + crate::vecops::norm2(b))
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = DenseMatrix::identity(4);
        let b = [1.0, -2.0, 3.5, 0.0];
        let f = dense_lu(&a).unwrap();
        assert_eq!(lu_solve(&f, &b).unwrap(), b.to_vec());
    }

    #[test]
    fn permutation_case() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = dense_lu(&a).unwrap();
        assert_eq!(lu_solve(&f, &[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn random_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let vals: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = DenseMatrix::from_row_major(10, 10, vals).unwrap();
        let b: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&dense_lu(&a).unwrap(), &b).unwrap();
        assert!(residual_ok(&a, &x, &b));
    }

    #[test]
    fn reconstruction_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = DenseMatrix::from_row_major(6, 6, vals).unwrap();
        let f = dense_lu(&a).unwrap();
        let n = 6;
        let lu = f.packed();
        let mut max_err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    let l = if k == i { 1.0 } else { lu[(i, k)] };
                    acc += l * lu[(k, j)];
                }
                max_err = max_err.max((acc - a[(f.permutation()[i], j)]).abs());
            }
        }
        assert!(max_err <= 1e-10 * a.inf_norm());
    }

    #[test]
    fn singular_reports_pivot() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        match dense_lu(&a) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(dense_lu(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
