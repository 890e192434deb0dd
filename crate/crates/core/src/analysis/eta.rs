use nalgebra::{Cholesky, DMatrix};

use super::{check_dense, linalg};
use crate::error::{Error, Result};
use crate::system::{QMode, SaddleSystem};

/// `B Q⁻¹ Bᵀ` as a dense n×n matrix.
pub(crate) fn weighted_gram(b: &DMatrix<f64>, q: &QMode) -> DMatrix<f64> {
    let mut bq = b.clone();
    for j in 0..b.ncols() {
        let w = 1.0 / q.entry(j);
        bq.column_mut(j).scale_mut(w);
    }
    bq * b.transpose()
}

pub(crate) fn symmetric_part(g: &DMatrix<f64>) -> DMatrix<f64> {
    (g + g.transpose()) * 0.5
}

/// `η = inf { xᵀHx / xᵀBQ⁻¹Bᵀx : x ∉ Null(Bᵀ) }` with `H = (G + Gᵀ)/2`.
///
/// Write `x = U_r a + U_n b` with orthonormal bases of `Range(B)` and
/// `Null(Bᵀ)`. The denominator only sees `a`, and for fixed `a` the numerator
/// is a quadratic in `b` with Hessian `Ĥ_nn = U_nᵀHU_n`. When `Ĥ_nn` is SPD
/// (H positive definite on `Null(Bᵀ)`), minimizing over `b` leaves the Schur
/// complement `S_H = Ĥ_rr − Ĥ_rn Ĥ_nn⁻¹ Ĥ_nr`, and the infimum is the smallest
/// eigenvalue of the symmetric-definite pencil `(S_H, U_rᵀBQ⁻¹BᵀU_r)`. The
/// minimum is attained at the corresponding eigenvector.
///
/// Returns `+∞` when `B = 0` (there is no admissible `x`).
pub fn compute_eta(sys: &SaddleSystem, q: &QMode) -> Result<f64> {
    check_dense(sys)?;
    q.validate(sys.m())?;
    let g = linalg::sparse_to_na(sys.g_matrix());
    let b = linalg::sparse_to_na(sys.b_matrix());
    eta_dense(&symmetric_part(&g), &b, q)
}

pub(crate) fn eta_dense(h: &DMatrix<f64>, b: &DMatrix<f64>, q: &QMode) -> Result<f64> {
    let split = linalg::range_null_split(b)?;
    let s = split.rank();
    if s == 0 {
        return Ok(f64::INFINITY);
    }
    let ur = &split.u_range;
    let un = &split.u_null;
    let h_rr = ur.transpose() * h * ur;
    let s_h = if un.ncols() > 0 {
        let h_nn = un.transpose() * h * un;
        let h_nr = un.transpose() * h * ur;
        let lmin = linalg::lambda_min(&h_nn);
        if !(lmin > 0.0) {
            return Err(Error::Assumption {
                what: "H is not positive definite on Null(Bᵀ)",
                lambda_min: lmin,
            });
        }
        let chol = Cholesky::new(symmetric_part(&h_nn)).ok_or(Error::Assumption {
            what: "H is not positive definite on Null(Bᵀ)",
            lambda_min: lmin,
        })?;
        &h_rr - h_nr.transpose() * chol.solve(&h_nr)
    } else {
        h_rr
    };
    let w_rr = ur.transpose() * weighted_gram(b, q) * ur;
    let chol = Cholesky::new(symmetric_part(&w_rr))
        .ok_or_else(|| Error::Eigen("U_rᵀBQ⁻¹BᵀU_r is not positive definite".into()))?;
    // L⁻¹ S_H L⁻ᵀ
    let l = chol.l();
    let li = linalg::inverse(&l)?;
    let reduced = &li * s_h * li.transpose();
    Ok(linalg::lambda_min(&reduced))
}

/// `λ₁ = λ_min(2ωH + BQ⁻¹Bᵀ)`.
pub fn lambda1(sys: &SaddleSystem, omega: f64, q: &QMode) -> Result<f64> {
    check_dense(sys)?;
    q.validate(sys.m())?;
    let g = linalg::sparse_to_na(sys.g_matrix());
    let b = linalg::sparse_to_na(sys.b_matrix());
    let a = symmetric_part(&g) * (2.0 * omega) + weighted_gram(&b, q);
    Ok(linalg::lambda_min(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    fn toy(g: &[(usize, usize, f64)]) -> SaddleSystem {
        SaddleSystem::new(
            SparseMatrix::from_triplets(2, 2, g).unwrap(),
            SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]).unwrap(),
            vec![0.0; 2],
            vec![0.0],
            None,
        )
        .unwrap()
    }

    #[test]
    fn analytic_toys() {
        let q = QMode::Identity;
        let eta = compute_eta(&toy(&[(0, 0, 1.0), (1, 1, 1.0)]), &q).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);
        let eta = compute_eta(&toy(&[(0, 0, -1.0), (1, 1, 1.0)]), &q).unwrap();
        assert!((eta + 1.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_on_nullspace_is_rejected() {
        let err = compute_eta(&toy(&[(0, 0, 1.0), (1, 1, -1.0)]), &QMode::Identity).unwrap_err();
        assert!(matches!(err, Error::Assumption { .. }));
    }

    #[test]
    fn coupled_toy_uses_schur_complement() {
        // H = [[1, 1], [1, 2]], B = e₁: min over x₂ of x₁² + 2x₁x₂ + 2x₂² is x₁²/2
        let sys = toy(&[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 2.0)]);
        let eta = compute_eta(&sys, &QMode::Identity).unwrap();
        assert!((eta - 0.5).abs() < 1e-12);
    }
}
