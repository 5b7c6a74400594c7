//! P1 finite elements: nodal fields, assembly, and Poisson solves with
//! Dirichlet data.

pub mod assembly;
mod boundary;
mod field;
mod poisson;
pub mod quadrature;

pub use assembly::{assemble_mass, assemble_stiffness, div_load, load};
pub use boundary::{boundary_phi, dirichlet_g, nodal_f, poisson_init, projected_f};
pub use field::{NodalField, NodalSym2Field, NodalVec2Field};
pub use poisson::PoissonSolver;

use crate::error::{Error, Result};
use crate::linalg::{SolverKind, SparseSym};
use crate::mesh::{Point, TriMesh};

/// Matrices and the factorized Dirichlet solver for one mesh. Built once and
/// shared by every solve on that mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: TriMesh,
    mass: SparseSym,
    poisson: PoissonSolver,
}

impl Discretization {
    pub fn new(mesh: TriMesh, kind: SolverKind) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh)?;
        let mass = assemble_mass(&mesh)?;
        let poisson = PoissonSolver::new(&mesh, stiffness, kind)?;
        Ok(Discretization { mesh, mass, poisson })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn stiffness(&self) -> &SparseSym {
        self.poisson.stiffness()
    }

    pub fn mass(&self) -> &SparseSym {
        &self.mass
    }

    pub fn poisson(&self) -> &PoissonSolver {
        &self.poisson
    }

    /// `‖v‖_{L²}` of a P1 field through the mass matrix.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        self.mass.bilinear(v, v).max(0.0).sqrt()
    }

    /// `‖∇v‖_{L²}` through the stiffness matrix.
    pub fn h1_seminorm(&self, v: &[f64]) -> f64 {
        self.stiffness().bilinear(v, v).max(0.0).sqrt()
    }

    pub fn field(&self, values: Vec<f64>) -> Result<NodalField> {
        NodalField::new(&self.mesh, values)
    }

    pub fn check(&self, f: &NodalField) -> Result<()> {
        f.check(&self.mesh)
    }
}

/// Element-by-element `‖∇v‖_{L²}`, avoiding round-off from the global
/// quadratic form.
pub fn grad_norm(mesh: &TriMesh, v: &[f64]) -> Result<f64> {
    if v.len() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch { expected: mesh.num_vertices(), got: v.len() });
    }
    let mut s = 0.0;
    for k in 0..mesh.num_triangles() {
        let g = element_gradient(mesh, v, k);
        s += mesh.area(k) * (g[0] * g[0] + g[1] * g[1]);
    }
    Ok(s.sqrt())
}

/// Constant gradient of a P1 function on triangle `k`.
pub fn element_gradient(mesh: &TriMesh, v: &[f64], k: usize) -> [f64; 2] {
    let t = mesh.triangle(k);
    let g = mesh.basis_gradients(k);
    let mut d = [0.0; 2];
    for i in 0..3 {
        d[0] += v[t[i]] * g[i][0];
        d[1] += v[t[i]] * g[i][1];
    }
    d
}

/// Value of a P1 field at `x`, or `None` outside the mesh.
pub fn point_value(mesh: &TriMesh, v: &[f64], x: Point) -> Option<f64> {
    (0..mesh.num_triangles()).find_map(|k| {
        let [a, b, c] = mesh.triangle_points(k);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        let l0 = 1.0 - l1 - l2;
        let tol = -1e-12;
        (l0 >= tol && l1 >= tol && l2 >= tol).then(|| {
            let t = mesh.triangle(k);
            l0 * v[t[0]] + l1 * v[t[1]] + l2 * v[t[2]]
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Torsion problem `−Δz = 2`, `z = 0`: the centre value converges to
    /// 0.1473427065 (twice the unit-square torsion constant 0.0736713533,
    /// summed from the double sine series).
    #[test]
    fn torsion_centre_value() {
        let mut prev_err = f64::INFINITY;
        for n in [16, 32, 64] {
            let m = TriMesh::structured_unit_square(n).unwrap();
            let d = Discretization::new(m, SolverKind::Cholesky).unwrap();
            let rhs = load(d.mesh(), |_| 2.0);
            let u = d.poisson().solve(&rhs, &vec![0.0; d.mesh().num_vertices()]).unwrap();
            let c = d.mesh().vertices().iter().position(|p| *p == [0.5, 0.5]).unwrap();
            let err = (u[c] - 0.147_342_706_5).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 2e-4);
    }

    #[test]
    fn point_values_of_linears() {
        let m = TriMesh::structured_unit_square(3).unwrap();
        let v: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
        for x in [[0.3, 0.5], [0.0, 0.0], [1.0, 0.7], [0.123, 0.987]] {
            assert!((point_value(&m, &v, x).unwrap() - (2.0 * x[0] - x[1] + 0.5)).abs() < 1e-14);
        }
        assert!(point_value(&m, &v, [1.5, 0.5]).is_none());
    }
}
