//! Sparse symmetric linear algebra.
//!
//! The default path is a direct sparse Cholesky factorization: the reduced
//! stiffness matrix does not change during a splitting run, so a single
//! factorization serves every Poisson solve on a mesh. A Jacobi-preconditioned
//! conjugate gradient is kept as a low-memory alternative.

mod cg;
mod cholesky;
mod sparse;

pub use cg::{conjugate_gradient, CgOptions};
pub use cholesky::{factorize, reverse_cuthill_mckee, Factorization};
pub use sparse::SparseSym;

use crate::error::Result;

/// Which linear solver backs [`SpdSolver`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SolverKind {
    #[default]
    Cholesky,
    Cg,
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cholesky" => Ok(SolverKind::Cholesky),
            "cg" => Ok(SolverKind::Cg),
            other => Err(format!("unknown solver `{other}` (expected cholesky or cg)")),
        }
    }
}

/// A reusable solver for one SPD matrix. Immutable after construction, so
/// concurrent solves are fine.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Cholesky(Factorization),
    Cg { matrix: SparseSym, inv_diag: Vec<f64>, options: CgOptions },
}

impl SpdSolver {
    pub fn new(a: &SparseSym, kind: SolverKind) -> Result<Self> {
        match kind {
            SolverKind::Cholesky => Ok(SpdSolver::Cholesky(factorize(a)?)),
            SolverKind::Cg => {
                let inv_diag = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
                Ok(SpdSolver::Cg { matrix: a.clone(), inv_diag, options: CgOptions::default() })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpdSolver::Cholesky(f) => f.dim(),
            SpdSolver::Cg { matrix, .. } => matrix.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Cholesky(f) => f.solve(b),
            SpdSolver::Cg { matrix, inv_diag, options } => conjugate_gradient(matrix, inv_diag, b, options),
        }
    }
}

/// Max-norm residual check used by the tests: `‖Ax − b‖∞ ≤ tol (‖A‖∞‖x‖∞ + ‖b‖∞)`.
pub fn residual_ok(a: &SparseSym, x: &[f64], b: &[f64], tol: f64) -> bool {
    let ax = a.matvec(x);
    let r = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    r <= tol * (a.norm_inf() * xn + bn)
}
