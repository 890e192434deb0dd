//! Augmented Lagrangian iterative methods for unsymmetric saddle-point systems
//!
//! ```text
//! [ G   B ] [x]   [f]
//! [-Bᵀ  0 ] [y] = [g]
//! ```
//!
//! with `G` unsymmetric (positive definite on `Null(Bᵀ)`) and `B` of full or
//! deficient column rank. The crate provides
//!
//! * the exact stationary iteration ([`spal::spal_exact`]) and its inexact
//!   variant with a pluggable inner solver ([`spal::spal_inexact`]),
//! * the Barzilai-Borwein inner/outer scheme ([`spalbb::spalbb`]),
//! * restarted GMRES and BiCGSTAB baselines ([`krylov`]),
//! * problem generators on a staggered grid plus Matrix Market import ([`problems`]),
//! * dense spectral diagnostics that check the convergence theory on small
//!   instances ([`analysis`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod cli;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod mmio;
pub mod problems;
pub mod report;
pub mod sparse;
pub mod spal;
pub mod spalbb;
pub mod system;
pub mod vecops;

pub use dense::{dense_lu, lu_solve, DenseMatrix, LuFactorization};
pub use error::{Error, Result};
pub use report::{SolveOutcome, SolveReport, Status};
pub use sparse::SparseMatrix;
pub use system::{
    AlConfig, InnerNorm, LinearOperator, QMode, SaddleOperator, SaddleSystem, ShiftedOperator,
    SplitOperator, WeightedNorm,
};
