use crate::error::{Error, Result};
use crate::linalg::{SolverKind, SparseSym, SpdSolver};
use crate::mesh::TriMesh;

const NONE: usize = usize::MAX;

/// Poisson solves with Dirichlet data, eliminating boundary unknowns. The
/// reduced matrix is factorized once and reused for every right-hand side.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    stiffness: SparseSym,
    interior: Vec<usize>,
    slot: Vec<usize>,
    solver: Option<SpdSolver>,
}

impl PoissonSolver {
    pub fn new(mesh: &TriMesh, stiffness: SparseSym, kind: SolverKind) -> Result<Self> {
        if stiffness.dim() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch { expected: mesh.num_vertices(), got: stiffness.dim() });
        }
        let interior = mesh.interior_vertices();
        let mut slot = vec![NONE; mesh.num_vertices()];
        for (k, &v) in interior.iter().enumerate() {
            slot[v] = k;
        }
        let solver =
            if interior.is_empty() { None } else { Some(SpdSolver::new(&stiffness.submatrix(&interior), kind)?) };
        Ok(PoissonSolver { stiffness, interior, slot, solver })
    }

    pub fn stiffness(&self) -> &SparseSym {
        &self.stiffness
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Solves `A u = rhs` on interior vertices with `u = dirichlet` on the
    /// boundary. Only boundary entries of `dirichlet` are read.
    pub fn solve(&self, rhs: &[f64], dirichlet: &[f64]) -> Result<Vec<f64>> {
        let n = self.stiffness.dim();
        for len in [rhs.len(), dirichlet.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut u: Vec<f64> = (0..n).map(|v| if self.slot[v] == NONE { dirichlet[v] } else { 0.0 }).collect();
        let Some(solver) = &self.solver else { return Ok(u) };
        let b: Vec<f64> = self
            .interior
            .iter()
            .map(|&i| {
                let coupling: f64 =
                    self.stiffness.row(i).filter(|&(j, _)| self.slot[j] == NONE).map(|(j, a)| a * u[j]).sum();
                rhs[i] - coupling
            })
            .collect();
        let x = solver.solve(&b)?;
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = x[k];
        }
        Ok(u)
    }

    /// Largest Galerkin residual `|(A u − rhs)_i|` over interior vertices.
    pub fn residual(&self, u: &[f64], rhs: &[f64]) -> f64 {
        let au = self.stiffness.matvec(u);
        self.interior.iter().map(|&i| (au[i] - rhs[i]).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::{assemble_stiffness, load};

    fn solver(n: usize) -> (TriMesh, PoissonSolver) {
        let m = TriMesh::structured_unit_square(n).unwrap();
        let a = assemble_stiffness(&m).unwrap();
        let s = PoissonSolver::new(&m, a, SolverKind::Cholesky).unwrap();
        (m, s)
    }

    #[test]
    fn reproduces_linear_trace() {
        let (m, s) = solver(6);
        let g: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let u = s.solve(&vec![0.0; m.num_vertices()], &g).unwrap();
        for (a, b) in u.iter().zip(&g) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let (m, s) = solver(4);
        let z = vec![0.0; m.num_vertices()];
        assert!(s.solve(&z, &z).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_values_exact_and_residual_small() {
        let (m, s) = solver(8);
        let rhs = load(&m, |p| (p[0] * 3.0).sin() + p[1]);
        let g: Vec<f64> = m.vertices().iter().map(|p| p[0] * p[1] + 0.1).collect();
        let u = s.solve(&rhs, &g).unwrap();
        for v in m.boundary_vertices() {
            assert_eq!(u[v], g[v]);
        }
        let scale = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(s.residual(&u, &rhs) <= 1e-10 * scale);
    }

    #[test]
    fn cg_matches_cholesky() {
        let m = TriMesh::structured_unit_square(8).unwrap();
        let a = assemble_stiffness(&m).unwrap();
        let rhs = load(&m, |_| 2.0);
        let z = vec![0.0; m.num_vertices()];
        let u1 = PoissonSolver::new(&m, a.clone(), SolverKind::Cholesky).unwrap().solve(&rhs, &z).unwrap();
        let u2 = PoissonSolver::new(&m, a, SolverKind::Cg).unwrap().solve(&rhs, &z).unwrap();
        for (x, y) in u1.iter().zip(&u2) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
