//! Thin wrappers over nalgebra's dense decompositions.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
/// Convergence thresholds tried in turn. nalgebra can return a wrong SVD or
/// Schur form (no error) when asked for machine-epsilon deflation, so every
/// result is checked by reconstruction before it is accepted.
const DEFLATION: [f64; 5] = [5.0 * f64::EPSILON, 1e-14, 1e-13, 1e-12, 1e-11];
/// Accepted `‖reconstruction − A‖_F / ‖A‖_F`.
const RECONSTRUCTION_TOL: f64 = 1e-9;

fn reconstructs(a: &DMatrix<f64>, r: &DMatrix<f64>) -> bool {
    (r - a).norm() <= RECONSTRUCTION_TOL * a.norm().max(f64::MIN_POSITIVE)
}

/// SVD with both factors, verified by reconstruction; singular values descending.
pub fn checked_svd(a: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    DEFLATION
        .iter()
        .find_map(|&eps| {
            let svd = SVD::try_new(a.clone(), true, true, eps, MAX_ITER)?;
            let r = svd.clone().recompose().ok()?;
            reconstructs(a, &r).then_some(svd)
        })
        .ok_or_else(|| Error::Eigen(format!("SVD of a {}x{} matrix", a.nrows(), a.ncols())))
}

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Eigenvalues of a symmetric matrix in ascending order, with matching eigenvector columns.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    sym_eigen(a).0.first().copied().unwrap_or(f64::INFINITY)
}

pub fn lambda_max(a: &DMatrix<f64>) -> f64 {
    sym_eigen(a).0.last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut sv: Vec<f64> = checked_svd(a)?.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Number of singular values above `RANK_TOL · σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>) -> Result<usize> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > RANK_TOL * smax).count())
}

pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// All eigenvalues of a general real square matrix via the real Schur form.
pub fn complex_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    // The QR sweep can also stall on matrices with many exact zero
    // eigenvalues at the tightest threshold.
    let schur = DEFLATION
        .iter()
        .find_map(|&eps| {
            let schur = Schur::try_new(a.clone(), eps, MAX_ITER)?;
            let (q, t) = schur.clone().unpack();
            reconstructs(a, &(&q * t * q.transpose())).then_some(schur)
        })
        .ok_or_else(|| Error::Eigen(format!("Schur form of a {0}x{0} matrix", a.nrows())))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Symmetric positive definite square root and inverse square root.
pub fn spd_sqrt_pair(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (vals, vecs) = sym_eigen(a);
    if let Some(&lmin) = vals.first() {
        if lmin <= 0.0 {
            return Err(Error::Assumption {
                what: "matrix is not positive definite",
                lambda_min: lmin,
            });
        }
    }
    let sq = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.sqrt()));
    let isq = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt()));
    let root = &vecs * DMatrix::from_diagonal(&sq) * vecs.transpose();
    let inv_root = &vecs * DMatrix::from_diagonal(&isq) * vecs.transpose();
    Ok((root, inv_root))
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or(Error::Singular {
            pivot: 0,
            magnitude: 0.0,
        })
}

/// Orthonormal bases adapted to `B` (n×m, n ≥ m): `B = U_s Σ_s V_sᵀ`.
#[derive(Debug, Clone)]
pub struct RangeNullSplit {
    /// n×s, spans `Range(B)`.
    pub u_range: DMatrix<f64>,
    /// n×(n−s), spans `Null(Bᵀ)`.
    pub u_null: DMatrix<f64>,
    /// m×m orthogonal; the first s columns pair with `u_range`.
    pub v: DMatrix<f64>,
    /// The s retained singular values, descending.
    pub sigma: Vec<f64>,
    /// True when a discarded singular value sits within a factor 100 of the threshold.
    pub ambiguous_gap: bool,
}

impl RangeNullSplit {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `[U_range U_null]`, an n×n orthogonal matrix.
    pub fn u_full(&self) -> DMatrix<f64> {
        let n = self.u_range.nrows();
        let s = self.rank();
        DMatrix::from_fn(n, n, |r, c| {
            if c < s {
                self.u_range[(r, c)]
            } else {
                self.u_null[(r, c - s)]
            }
        })
    }
}

pub fn range_null_split(b: &DMatrix<f64>) -> Result<RangeNullSplit> {
    let (n, m) = (b.nrows(), b.ncols());
    if m == 0 {
        return Ok(RangeNullSplit {
            u_range: DMatrix::zeros(n, 0),
            u_null: DMatrix::identity(n, n),
            v: DMatrix::zeros(0, 0),
            sigma: Vec::new(),
            ambiguous_gap: false,
        });
    }
    let mut thin = checked_svd(b)?;
    thin.sort_by_singular_values();
    let v = thin.v_t.as_ref().expect("requested V").transpose();
    let sv: Vec<f64> = thin.singular_values.iter().copied().collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let thresh = RANK_TOL * smax;
    let s = sv.iter().filter(|&&x| x > thresh && smax > 0.0).count();
    let ambiguous_gap = sv
        .iter()
        .any(|&x| x > thresh / 100.0 && x <= thresh * 100.0);
    let sigma = sv[..s].to_vec();

    // U_s from B V_s Σ_s⁻¹
    let mut u_range = b * v.columns(0, s);
    for (j, sj) in sigma.iter().enumerate() {
        let mut col = u_range.column_mut(j);
        col /= *sj;
    }

    // Null(Bᵀ) from a full SVD of B padded to a square matrix
    let mut padded = DMatrix::zeros(n, n);
    padded.columns_mut(0, m).copy_from(b);
    let mut full = checked_svd(&padded)?;
    full.sort_by_singular_values();
    let u_all = full.u.expect("requested U");
    let u_null = u_all.columns(s, n - s).into_owned();
    Ok(RangeNullSplit {
        u_range,
        u_null,
        v,
        sigma,
        ambiguous_gap,
    })
}

pub fn to_na(a: &crate::dense::DenseMatrix) -> DMatrix<f64> {
    a.to_nalgebra()
}

pub fn sparse_to_na(a: &crate::sparse::SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (r, c, v) in a.triplets() {
        d[(r, c)] = v;
    }
    d
}
