use super::sparse::SparseSym;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop when `‖r‖₂ ≤ rel_tol ‖b‖₂`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-12, max_iter: 20_000 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradient from a zero initial guess.
pub fn conjugate_gradient(a: &SparseSym, inv_diag: &[f64], b: &[f64], opts: &CgOptions) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..opts.max_iter {
        a.matvec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res <= opts.rel_tol {
            return Ok(x);
        }
        if it + 1 == opts.max_iter {
            return Err(Error::CgNoConvergence { iterations: opts.max_iter, residual: res });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::CgNoConvergence { iterations: opts.max_iter, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal() {
        let a = SparseSym::assemble(
            3,
            &[(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 2, -1.0), (2, 1, -1.0)],
        )
        .unwrap();
        let inv: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
        let x = conjugate_gradient(&a, &inv, &[1.0; 3], &CgOptions::default()).unwrap();
        for (xi, ei) in x.iter().zip([1.5, 2.0, 1.5]) {
            assert!((xi - ei).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs() {
        let a = SparseSym::identity(2);
        let x = conjugate_gradient(&a, &[1.0, 1.0], &[0.0, 0.0], &CgOptions::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }
}
