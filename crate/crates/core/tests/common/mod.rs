#![allow(dead_code)]

use alsp::problems::{self, ProblemSpec};
use alsp::{SaddleSystem, SparseMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `G = I₂`, `B = e₁`, `f = (1, 0)`, `g = −1`; solution `((1, 0), 0)`.
pub fn toy() -> SaddleSystem {
    SaddleSystem::new(
        SparseMatrix::identity(2),
        SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]).unwrap(),
        vec![1.0, 0.0],
        vec![-1.0],
        Some(1),
    )
    .unwrap()
}

/// `G = diag(−1, 1)`, `B = e₁`, consistent right-hand side for `z* = (1, 1, 1)`.
pub fn indefinite_toy() -> SaddleSystem {
    let g = SparseMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
    let b = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]).unwrap();
    SaddleSystem::new(g, b, vec![0.0, 1.0], vec![-1.0], Some(1)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random sparse matrix with roughly `density` fill, as triplets and dense rows.
pub fn random_sparse(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.gen::<f64>() < density {
                t.push((i, j, rng.gen_range(-2.0..2.0)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, &t).unwrap()
}

pub fn to_na(a: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.rows(), a.cols());
    for (i, j, v) in a.triplets() {
        m[(i, j)] = v;
    }
    m
}

/// `[G B; −Bᵀ 0]` assembled independently of the library.
pub fn assemble_a(sys: &SaddleSystem) -> DMatrix<f64> {
    let (n, m) = (sys.n(), sys.m());
    let g = to_na(sys.g_matrix());
    let b = to_na(sys.b_matrix());
    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(&g);
    a.view_mut((0, n), (n, m)).copy_from(&b);
    a.view_mut((n, 0), (m, n)).copy_from(&(-b.transpose()));
    a
}

/// `[G B; −Bᵀ ωI]`.
pub fn assemble_m(sys: &SaddleSystem, omega: f64) -> DMatrix<f64> {
    let n = sys.n();
    let mut a = assemble_a(sys);
    for i in n..sys.dim() {
        a[(i, i)] = omega;
    }
    a
}

pub fn rhs(sys: &SaddleSystem) -> Vec<f64> {
    let mut l = sys.f().to_vec();
    l.extend_from_slice(sys.g());
    l
}

pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular oracle matrix")
        .as_slice()
        .to_vec()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `‖A z − ℓ‖ / ‖ℓ‖` with an independently assembled `A`.
pub fn relative_residual(sys: &SaddleSystem, z: &[f64]) -> f64 {
    let a = assemble_a(sys);
    let l = rhs(sys);
    let az = &a * DVector::from_column_slice(z);
    let r: Vec<f64> = az.iter().zip(&l).map(|(x, y)| x - y).collect();
    norm(&r) / norm(&l)
}

pub fn stokes(grid: usize) -> SaddleSystem {
    problems::generate(&ProblemSpec::stokes(grid, 1.0)).unwrap().system
}

pub fn oseen(grid: usize, nu: f64) -> SaddleSystem {
    problems::generate(&ProblemSpec::oseen(grid, nu, [1.0, 0.0])).unwrap().system
}

pub fn random_problem(n: usize, m: usize, rank: usize, shift: f64, seed: u64) -> SaddleSystem {
    problems::generate(&ProblemSpec::random(n, m, rank, shift).with_seed(seed))
        .unwrap()
        .system
}

/// Random unsymmetric positive definite matrix `shift·I + RRᵀ/k + K` with skew `K`.
pub fn random_upd(rng: &mut ChaCha8Rng, n: usize, shift: f64, skew: f64) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k0 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let k = (&k0 - k0.transpose()) * (0.5 * skew);
    DMatrix::identity(n, n) * shift + &r * r.transpose() / n as f64 + k
}

/// Sampling oracle for `inf xᵀHx / xᵀBBᵀx` over `x ∉ Null(Bᵀ)`: the best of
/// `samples` random directions, refined by a shrinking random local search.
pub fn eta_oracle(sys: &SaddleSystem, samples: usize, seed: u64) -> f64 {
    let n = sys.n();
    let g = to_na(sys.g_matrix());
    let h = (&g + g.transpose()) * 0.5;
    let b = to_na(sys.b_matrix());
    let w = &b * b.transpose();
    let (h, w): (Vec<f64>, Vec<f64>) = (h.as_slice().to_vec(), w.as_slice().to_vec());
    let wscale = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let quad = |a: &[f64], x: &[f64]| {
        let mut s = 0.0;
        for j in 0..n {
            let mut c = 0.0;
            for i in 0..n {
                c += a[i + j * n] * x[i];
            }
            s += c * x[j];
        }
        s
    };
    let quotient = |x: &[f64]| {
        let den = quad(&w, x);
        if den <= 1e-12 * wscale * norm(x).powi(2) {
            f64::INFINITY
        } else {
            quad(&h, x) / den
        }
    };
    let mut r = rng(seed);
    let mut x = vec![0.0; n];
    let mut best = vec![0.0; n];
    let mut best_val = f64::INFINITY;
    for _ in 0..samples {
        x.iter_mut().for_each(|v| *v = r.gen_range(-1.0..1.0));
        let v = quotient(&x);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&x);
        }
    }
    let mut step = 0.5;
    while step > 1e-10 {
        let mut improved = false;
        let scale = norm(&best);
        for _ in 0..200 {
            for (t, b) in x.iter_mut().zip(&best) {
                *t = b + r.gen_range(-step..step) * scale;
            }
            let v = quotient(&x);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&x);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}
