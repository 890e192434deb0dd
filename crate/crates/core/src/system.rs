//! Saddle-point systems and the block operators built from them.
//!
//! For `z = (x, y)` with `x ∈ Rⁿ`, `y ∈ Rᵐ`:
//!
//! ```text
//! A z = (G x + B y, -Bᵀ x)
//! M z = (G x + B y, -Bᵀ x + ω Q y)
//! N z = (0, ω Q y)
//! ```
//!
//! so that `A = M - N`.

use std::collections::BTreeMap;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::vecops;

/// The weighting matrix `Q` of the multiplier block.
#[derive(Debug, Clone, PartialEq)]
pub enum QMode {
    Identity,
    Diagonal(Vec<f64>),
}

impl QMode {
    pub fn validate(&self, m: usize) -> Result<()> {
        if let QMode::Diagonal(d) = self {
            Error::check_len("diagonal Q", m, d.len())?;
            if let Some(bad) = d.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "diagonal Q entries must be positive, found {bad}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, QMode::Identity)
    }

    /// `Q[i,i]`.
    pub fn entry(&self, i: usize) -> f64 {
        match self {
            QMode::Identity => 1.0,
            QMode::Diagonal(d) => d[i],
        }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().map(|(i, v)| self.entry(i) * v).collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().map(|(i, v)| v / self.entry(i)).collect()
    }

    pub fn to_dense(&self, m: usize) -> DenseMatrix {
        let mut q = DenseMatrix::zeros(m, m);
        for i in 0..m {
            q[(i, i)] = self.entry(i);
        }
        q
    }
}

/// The block system `[G B; -Bᵀ 0] (x, y) = (f, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSystem {
    gmat: SparseMatrix,
    bmat: SparseMatrix,
    f: Vec<f64>,
    g: Vec<f64>,
    b_rank: Option<usize>,
    pub labels: BTreeMap<String, String>,
}

impl SaddleSystem {
    pub fn new(
        gmat: SparseMatrix,
        bmat: SparseMatrix,
        f: Vec<f64>,
        g: Vec<f64>,
        b_rank: Option<usize>,
    ) -> Result<Self> {
        let n = gmat.rows();
        Error::check_len("G columns", n, gmat.cols())?;
        Error::check_len("B rows", n, bmat.rows())?;
        let m = bmat.cols();
        if m > n {
            return Err(Error::InvalidParameter(format!(
                "B must have n >= m, got n = {n}, m = {m}"
            )));
        }
        Error::check_len("f", n, f.len())?;
        Error::check_len("g", m, g.len())?;
        if let Some(s) = b_rank {
            if s > m {
                return Err(Error::InvalidParameter(format!(
                    "b_rank {s} exceeds m = {m}"
                )));
            }
        }
        Ok(Self {
            gmat,
            bmat,
            f,
            g,
            b_rank,
            labels: BTreeMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.gmat.rows()
    }

    pub fn m(&self) -> usize {
        self.bmat.cols()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    pub fn g_matrix(&self) -> &SparseMatrix {
        &self.gmat
    }

    pub fn b_matrix(&self) -> &SparseMatrix {
        &self.bmat
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn b_rank(&self) -> Option<usize> {
        self.b_rank
    }

    pub fn set_b_rank(&mut self, s: Option<usize>) {
        self.b_rank = s;
    }

    /// Replaces the right-hand side blocks.
    pub fn with_rhs(mut self, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        Error::check_len("f", self.n(), f.len())?;
        Error::check_len("g", self.m(), g.len())?;
        self.f = f;
        self.g = g;
        Ok(self)
    }

    /// `ℓ = (f, g)`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut l = self.f.clone();
        l.extend_from_slice(&self.g);
        l
    }

    fn apply_a_into(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n();
        let (x, y) = z.split_at(n);
        let (top, bottom) = out.split_at_mut(n);
        self.gmat.spmv_into(x, top).expect("checked dims");
        let mut by = vec![0.0; n];
        self.bmat.spmv_into(y, &mut by).expect("checked dims");
        vecops::axpy(1.0, &by, top);
        self.bmat.spmv_transpose_into(x, bottom).expect("checked dims");
        for v in bottom.iter_mut() {
            *v = -*v;
        }
    }

    /// `A z = (G x + B y, -Bᵀ x)`.
    pub fn apply_a(&self, z: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("apply_A input", self.dim(), z.len())?;
        let mut out = vec![0.0; self.dim()];
        self.apply_a_into(z, &mut out);
        Ok(out)
    }

    /// `r = A z - ℓ`.
    pub fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.apply_a(z)?;
        let n = self.n();
        for (ri, fi) in r[..n].iter_mut().zip(&self.f) {
            *ri -= fi;
        }
        for (ri, gi) in r[n..].iter_mut().zip(&self.g) {
            *ri -= gi;
        }
        Ok(r)
    }

    pub fn operator(&self) -> SaddleOperator<'_> {
        SaddleOperator { sys: self }
    }

    pub fn dense_a(&self) -> DenseMatrix {
        self.dense_blocks(0.0, &QMode::Identity)
    }

    pub fn dense_m(&self, omega: f64, q: &QMode) -> DenseMatrix {
        self.dense_blocks(omega, q)
    }

    pub fn dense_n(&self, omega: f64, q: &QMode) -> DenseMatrix {
        let (n, m) = (self.n(), self.m());
        let mut d = DenseMatrix::zeros(n + m, n + m);
        for i in 0..m {
            d[(n + i, n + i)] = omega * q.entry(i);
        }
        d
    }

    fn dense_blocks(&self, omega: f64, q: &QMode) -> DenseMatrix {
        let (n, m) = (self.n(), self.m());
        let mut d = DenseMatrix::zeros(n + m, n + m);
        for (r, c, v) in self.gmat.triplets() {
            d[(r, c)] = v;
        }
        for (r, c, v) in self.bmat.triplets() {
            d[(r, n + c)] = v;
            d[(n + c, r)] = -v;
        }
        if omega != 0.0 {
            for i in 0..m {
                d[(n + i, n + i)] = omega * q.entry(i);
            }
        }
        d
    }
}

/// Something that maps vectors of length [`dim`](Self::dim) linearly.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = Op x`. Callers guarantee both slices have length `dim()`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

/// Matrix-free `A`.
#[derive(Debug, Clone, Copy)]
pub struct SaddleOperator<'a> {
    sys: &'a SaddleSystem,
}

impl LinearOperator for SaddleOperator<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.sys.apply_a_into(x, y);
    }
}

/// Matrix-free `M = [G B; -Bᵀ ωQ]`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedOperator<'a> {
    sys: &'a SaddleSystem,
    omega: f64,
    q: &'a QMode,
}

impl<'a> ShiftedOperator<'a> {
    pub fn new(sys: &'a SaddleSystem, omega: f64, q: &'a QMode) -> Result<Self> {
        check_omega(omega)?;
        q.validate(sys.m())?;
        Ok(Self { sys, omega, q })
    }

    pub fn system(&self) -> &'a SaddleSystem {
        self.sys
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn q(&self) -> &'a QMode {
        self.q
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("apply_M input", self.sys.dim(), z.len())?;
        Ok(self.apply_vec(z))
    }

    /// `ℓ_k = (f, ωQy_k + g)`, the right-hand side of the shifted system at multiplier `y_k`.
    pub fn shifted_rhs(&self, y: &[f64]) -> Vec<f64> {
        let mut l = self.sys.f().to_vec();
        l.extend(
            y.iter()
                .zip(self.sys.g())
                .enumerate()
                .map(|(i, (yi, gi))| self.omega * self.q.entry(i) * yi + gi),
        );
        l
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.sys.dense_m(self.omega, self.q)
    }
}

impl LinearOperator for ShiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.sys.apply_a_into(x, y);
        let n = self.sys.n();
        for (i, (yi, zi)) in y[n..].iter_mut().zip(&x[n..]).enumerate() {
            *yi += self.omega * self.q.entry(i) * zi;
        }
    }
}

/// Matrix-free `N = [0 0; 0 ωQ]`.
#[derive(Debug, Clone, Copy)]
pub struct SplitOperator<'a> {
    sys: &'a SaddleSystem,
    omega: f64,
    q: &'a QMode,
}

impl<'a> SplitOperator<'a> {
    pub fn new(sys: &'a SaddleSystem, omega: f64, q: &'a QMode) -> Result<Self> {
        check_omega(omega)?;
        q.validate(sys.m())?;
        Ok(Self { sys, omega, q })
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("apply_N input", self.sys.dim(), z.len())?;
        Ok(self.apply_vec(z))
    }
}

impl LinearOperator for SplitOperator<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.sys.n();
        y[..n].fill(0.0);
        for (i, (yi, zi)) in y[n..].iter_mut().zip(&x[n..]).enumerate() {
            *yi = self.omega * self.q.entry(i) * zi;
        }
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = vecops::dot(self.row(i), x);
        }
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y).expect("square operator with matching lengths");
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "omega must be positive and finite, got {omega}"
        )))
    }
}

/// Norms used for stopping tests and contraction bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightedNorm {
    Euclidean,
    /// `‖(x, y)‖² = xᵀx + β yᵀQ⁻¹y` on vectors of length `n + m`.
    PBeta { n: usize, beta: f64, q: QMode },
    /// `‖y‖² = yᵀQy` on multiplier-block vectors.
    QNorm(QMode),
}

impl WeightedNorm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            WeightedNorm::Euclidean => vecops::norm2(v),
            WeightedNorm::PBeta { n, beta, q } => {
                let (x, y) = v.split_at(*n);
                let wy: f64 = y
                    .iter()
                    .enumerate()
                    .fold(0.0, |acc, (i, yi)| acc + yi * yi / q.entry(i));
                (vecops::dot(x, x) + beta * wy).sqrt()
            }
            WeightedNorm::QNorm(q) => v
                .iter()
                .enumerate()
                .fold(0.0, |acc, (i, yi)| acc + q.entry(i) * yi * yi)
                .sqrt(),
        }
    }
}

/// Augmented Lagrangian parameters shared by the SPAL family of solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct AlConfig {
    pub omega: f64,
    pub q_mode: QMode,
    /// Inner accuracy `δ ∈ [0, 1)`.
    pub delta: f64,
    /// Weight of the `P_β` norm; only used by analysis and bound logging.
    pub beta: f64,
    /// Target for `‖r_k‖ / ‖r_0‖`.
    pub tol: f64,
    /// Cap on total iterations (inner iterations included).
    pub maxit: usize,
    /// Multiplies `δ` after every outer pass when set.
    pub delta_decay: Option<f64>,
    /// Keep every outer residual vector and iterate in the outcome.
    pub record_residuals: bool,
    /// Norm `‖·‖_*` of the inner-accuracy contract of inexact SPAL.
    pub inner_norm: InnerNorm,
}

/// Which norm the inexact-SPAL contract `‖r − MΨ(r)‖_* ≤ δ‖r‖_*` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerNorm {
    #[default]
    Euclidean,
    /// The `P_β` norm with the configured `β` and `Q`.
    PBeta,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            q_mode: QMode::Identity,
            delta: 0.5,
            beta: 1.0,
            tol: 1e-6,
            maxit: 100_000,
            delta_decay: None,
            record_residuals: false,
            inner_norm: InnerNorm::Euclidean,
        }
    }
}

impl AlConfig {
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_maxit(mut self, maxit: usize) -> Self {
        self.maxit = maxit;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        check_omega(self.omega)?;
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1), got {}",
                self.delta
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(f) = self.delta_decay {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "delta_decay must lie in (0, 1], got {f}"
                )));
            }
        }
        self.q_mode.validate(m)
    }

    /// The norm selected by [`inner_norm`](Self::inner_norm).
    pub fn contract_norm(&self, n: usize) -> WeightedNorm {
        match self.inner_norm {
            InnerNorm::Euclidean => WeightedNorm::Euclidean,
            InnerNorm::PBeta => self.p_beta_norm(n),
        }
    }

    pub fn p_beta_norm(&self, n: usize) -> WeightedNorm {
        WeightedNorm::PBeta {
            n,
            beta: self.beta,
            q: self.q_mode.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_system() -> SaddleSystem {
        SaddleSystem::new(
            SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]).unwrap(),
            SparseMatrix::from_triplets(1, 1, &[(0, 0, 3.0)]).unwrap(),
            vec![0.0],
            vec![0.0],
            Some(1),
        )
        .unwrap()
    }

    fn random_system(seed: u64, n: usize, m: usize) -> SaddleSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tg = Vec::new();
        let mut tb = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen::<f64>() < 0.5 {
                    tg.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
            for j in 0..m {
                if rng.gen::<f64>() < 0.5 {
                    tb.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        SaddleSystem::new(
            SparseMatrix::from_triplets(n, n, &tg).unwrap(),
            SparseMatrix::from_triplets(n, m, &tb).unwrap(),
            vec![0.0; n],
            vec![0.0; m],
            None,
        )
        .unwrap()
    }

    #[test]
    fn apply_a_scalar() {
        let s = scalar_system();
        assert_eq!(s.apply_a(&[1.0, 1.0]).unwrap(), vec![5.0, -3.0]);
        assert_eq!(s.apply_a(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_m_and_n_scalar() {
        let s = scalar_system();
        let q = QMode::Identity;
        let m = ShiftedOperator::new(&s, 0.5, &q).unwrap();
        let nn = SplitOperator::new(&s, 0.5, &q).unwrap();
        assert_eq!(m.apply(&[1.0, 1.0]).unwrap(), vec![5.0, -2.5]);
        assert_eq!(nn.apply(&[1.0, 1.0]).unwrap(), vec![0.0, 0.5]);
        assert_eq!(nn.apply(&[3.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_a_matches_dense_assembly() {
        let s = random_system(3, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dense = s.dense_a().matvec(&z).unwrap();
        assert!(vecops::max_abs_diff(&dense, &s.apply_a(&z).unwrap()) <= 1e-14);
    }

    #[test]
    fn dimension_errors() {
        let s = scalar_system();
        assert!(s.apply_a(&[1.0]).is_err());
        let q = QMode::Identity;
        assert!(ShiftedOperator::new(&s, 0.0, &q).is_err());
        assert!(ShiftedOperator::new(&s, 1.0, &QMode::Diagonal(vec![1.0, 2.0])).is_err());
        assert!(ShiftedOperator::new(&s, 1.0, &QMode::Diagonal(vec![-1.0])).is_err());
    }

    proptest::proptest! {
        #[test]
        fn splitting_identity(seed in 0u64..200, omega in 1e-3f64..10.0, diag in proptest::bool::ANY) {
            let s = random_system(seed, 7, 4);
            let q = if diag { QMode::Diagonal(vec![0.5, 2.0, 1.5, 3.0]) } else { QMode::Identity };
            let m = ShiftedOperator::new(&s, omega, &q).unwrap();
            let nn = SplitOperator::new(&s, omega, &q).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let z: Vec<f64> = (0..11).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = vecops::sub(&m.apply(&z).unwrap(), &nn.apply(&z).unwrap());
            let a = s.apply_a(&z).unwrap();
            let err = vecops::norm2(&vecops::sub(&lhs, &a));
            proptest::prop_assert!(err <= 1e-14 * (1.0 + vecops::norm2(&a)));
        }

        #[test]
        fn norm_axioms(seed in 0u64..300, kind in 0usize..3, c in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = QMode::Diagonal((0..3).map(|_| rng.gen_range(0.1..4.0)).collect());
            let (norm, len) = match kind {
                0 => (WeightedNorm::Euclidean, 5),
                1 => (WeightedNorm::PBeta { n: 2, beta: rng.gen_range(0.1..3.0), q }, 5),
                _ => (WeightedNorm::QNorm(q), 3),
            };
            let mut v = || -> Vec<f64> { (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let (a, b) = (v(), v());
            proptest::prop_assert_eq!(norm.norm(&vec![0.0; len]), 0.0);
            proptest::prop_assert!(norm.norm(&a) > 0.0);
            let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
            proptest::prop_assert!((norm.norm(&ca) - c.abs() * norm.norm(&a)).abs() <= 1e-12);
            let sum = vecops::add(&a, &b);
            proptest::prop_assert!(norm.norm(&sum) <= norm.norm(&a) + norm.norm(&b) + 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let c = AlConfig::default();
        assert!(c.validate(3).is_ok());
        assert!(c.clone().with_delta(1.0).validate(3).is_err());
        assert!(c.clone().with_omega(-1.0).validate(3).is_err());
        assert!(c.clone().with_tol(0.0).validate(3).is_err());
    }
}
