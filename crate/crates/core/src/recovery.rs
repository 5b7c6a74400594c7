//! Polynomial-preserving gradient recovery and projected Hessians.
//!
//! At every vertex a quadratic is fitted in the least-squares sense to the
//! nodal values of a vertex patch; its gradient at the vertex is the
//! recovered gradient. The fit only depends on the mesh, so it is stored as
//! a sparse linear operator and reused for every field.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_area_weighted_stiffness, assemble_mass};
use crate::fem::{NodalField, NodalSym2Field, NodalVec2Field};
use crate::linalg::{SolverKind, SpdSolver};
use crate::mesh::{MeshId, TriMesh};

/// Fits whose equilibrated normal matrix is worse conditioned than this use a
/// larger patch.
pub const MAX_CONDITION: f64 = 1e8;

const MAX_RING: usize = 4;

/// Quadratic fit around one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFit {
    pub center: usize,
    pub ring: usize,
    /// Distance to the farthest patch vertex; local coordinates are divided by it.
    pub scale: f64,
    pub condition: f64,
    /// `(vertex, ∂x weight, ∂y weight)`.
    pub weights: Vec<(usize, f64, f64)>,
}

impl PatchFit {
    /// Coefficients of `1, ξ, η, ξ², ξη, η²` in scaled local coordinates.
    pub fn coefficients(mesh: &TriMesh, z: usize, ring: usize, values: &[f64]) -> Result<[f64; 6]> {
        let patch = mesh.vertex_patch(z, ring);
        let (a, _) = design(mesh, z, &patch);
        let b = DVector::from_iterator(patch.len(), patch.iter().map(|&v| values[v]));
        let ata = a.transpose() * &a;
        let atb = a.transpose() * b;
        let c = ata.cholesky().ok_or(Error::RankDeficientPatch { vertex: z })?.solve(&atb);
        Ok(std::array::from_fn(|i| c[i]))
    }
}

fn design(mesh: &TriMesh, z: usize, patch: &[usize]) -> (DMatrix<f64>, f64) {
    let c = mesh.vertex(z);
    let scale = patch
        .iter()
        .map(|&v| {
            let p = mesh.vertex(v);
            (p[0] - c[0]).hypot(p[1] - c[1])
        })
        .fold(0.0, f64::max);
    let a = DMatrix::from_fn(patch.len(), 6, |r, col| {
        let p = mesh.vertex(patch[r]);
        let (x, y) = ((p[0] - c[0]) / scale, (p[1] - c[1]) / scale);
        match col {
            0 => 1.0,
            1 => x,
            2 => y,
            3 => x * x,
            4 => x * y,
            _ => y * y,
        }
    });
    (a, scale)
}

fn fit(mesh: &TriMesh, z: usize) -> Result<PatchFit> {
    let first = if mesh.is_boundary_vertex(z) { 2 } else { 1 };
    for ring in first..=MAX_RING {
        let patch = mesh.vertex_patch(z, ring);
        if patch.len() < 6 {
            continue;
        }
        let (a, scale) = design(mesh, z, &patch);
        let ata = a.transpose() * &a;
        let d = DVector::from_iterator(6, (0..6).map(|i| 1.0 / ata[(i, i)].sqrt()));
        let scaled = DMatrix::from_fn(6, 6, |i, j| d[i] * ata[(i, j)] * d[j]);
        let eig = SymmetricEigen::new(scaled.clone());
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            continue;
        }
        let Some(chol) = scaled.cholesky() else { continue };
        // Rows 1 and 2 of (AᵀA)⁻¹Aᵀ give the linear coefficients.
        let rhs = DMatrix::from_fn(6, patch.len(), |i, r| d[i] * a[(r, i)]);
        let sol = chol.solve(&rhs);
        let weights = patch
            .iter()
            .enumerate()
            .map(|(r, &v)| (v, d[1] * sol[(1, r)] / scale, d[2] * sol[(2, r)] / scale))
            .collect();
        return Ok(PatchFit { center: z, ring, scale, condition, weights });
    }
    Err(Error::RankDeficientPatch { vertex: z })
}

/// Gradient and Hessian recovery on one mesh.
#[derive(Debug, Clone)]
pub struct Recovery {
    mesh: MeshId,
    fits: Vec<PatchFit>,
    projector: SpdSolver,
    regularized: bool,
}

impl Recovery {
    /// `regularized` adds `Σ_K |K| ∫_K ∇·∇` to the mass matrix of the
    /// Hessian projection.
    pub fn new(mesh: &TriMesh, regularized: bool, kind: SolverKind) -> Result<Self> {
        let fits = (0..mesh.num_vertices()).into_par_iter().map(|z| fit(mesh, z)).collect::<Result<Vec<_>>>()?;
        let mass = assemble_mass(mesh)?;
        let matrix = if regularized { mass.add_scaled(&assemble_area_weighted_stiffness(mesh)?, 1.0)? } else { mass };
        let projector = SpdSolver::new(&matrix, kind)?;
        Ok(Recovery { mesh: mesh.id(), fits, projector, regularized })
    }

    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    pub fn fits(&self) -> &[PatchFit] {
        &self.fits
    }

    fn check(&self, mesh: &TriMesh) -> Result<()> {
        if mesh.id() == self.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    pub fn gradient(&self, mesh: &TriMesh, u: &NodalField) -> Result<NodalVec2Field> {
        self.check(mesh)?;
        u.check(mesh)?;
        let u = u.values();
        let (gx, gy): (Vec<f64>, Vec<f64>) = self
            .fits
            .iter()
            .map(|f| f.weights.iter().fold((0.0, 0.0), |(x, y), &(v, wx, wy)| (x + wx * u[v], y + wy * u[v])))
            .unzip();
        NodalVec2Field::new(NodalField::new(mesh, gx)?, NodalField::new(mesh, gy)?)
    }

    /// Projection of the symmetrized derivative of `g` onto P1.
    pub fn hessian_of_gradient(&self, mesh: &TriMesh, g: &NodalVec2Field) -> Result<NodalSym2Field> {
        self.check(mesh)?;
        g.check(mesh)?;
        let n = mesh.num_vertices();
        let mut rhs = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for k in 0..mesh.num_triangles() {
            let dx = crate::fem::element_gradient(mesh, g.x.values(), k);
            let dy = crate::fem::element_gradient(mesh, g.y.values(), k);
            let c = [dx[0], 0.5 * (dx[1] + dy[0]), dy[1]];
            let w = mesh.area(k) / 3.0;
            for &v in &mesh.triangle(k) {
                for i in 0..3 {
                    rhs[i][v] += w * c[i];
                }
            }
        }
        let [xx, xy, yy] = rhs.map(|b| self.projector.solve(&b));
        NodalSym2Field::new(NodalField::new(mesh, xx?)?, NodalField::new(mesh, xy?)?, NodalField::new(mesh, yy?)?)
    }

    pub fn hessian(&self, mesh: &TriMesh, u: &NodalField) -> Result<NodalSym2Field> {
        self.hessian_of_gradient(mesh, &self.gradient(mesh, u)?)
    }
}

pub fn ppr_gradient(mesh: &TriMesh, u: &NodalField) -> Result<NodalVec2Field> {
    Recovery::new(mesh, false, SolverKind::Cholesky)?.gradient(mesh, u)
}

pub fn recover_hessian(mesh: &TriMesh, g: &NodalVec2Field) -> Result<NodalSym2Field> {
    Recovery::new(mesh, false, SolverKind::Cholesky)?.hessian_of_gradient(mesh, g)
}

pub fn recover_hessian_regularized(mesh: &TriMesh, g: &NodalVec2Field) -> Result<NodalSym2Field> {
    Recovery::new(mesh, true, SolverKind::Cholesky)?.hessian_of_gradient(mesh, g)
}

pub fn full_hessian(mesh: &TriMesh, u: &NodalField, regularized: bool) -> Result<NodalSym2Field> {
    Recovery::new(mesh, regularized, SolverKind::Cholesky)?.hessian(mesh, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::Sym2;

    fn max_err(a: &NodalField, f: impl Fn(usize) -> f64) -> f64 {
        (0..a.len()).map(|v| (a[v] - f(v)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn gradient_of_quadratics_is_exact() {
        let m = TriMesh::structured_unit_square(4).unwrap();
        let r = Recovery::new(&m, false, SolverKind::Cholesky).unwrap();
        let u = NodalField::interpolate(&m, |p| p[0] * p[0]);
        let g = r.gradient(&m, &u).unwrap();
        assert!(max_err(&g.x, |v| 2.0 * m.vertex(v)[0]) < 1e-12);
        assert!(max_err(&g.y, |_| 0.0) < 1e-12);
        let u = NodalField::interpolate(&m, |p| p[0] * p[1]);
        let g = r.gradient(&m, &u).unwrap();
        assert!(max_err(&g.x, |v| m.vertex(v)[1]) < 1e-12);
        assert!(max_err(&g.y, |v| m.vertex(v)[0]) < 1e-12);
        let g = r.gradient(&m, &NodalField::interpolate(&m, |_| 7.0)).unwrap();
        assert!(max_err(&g.x, |_| 0.0) < 1e-12 && max_err(&g.y, |_| 0.0) < 1e-12);
    }

    #[test]
    fn hessian_of_linear_gradients_is_constant() {
        let m = TriMesh::structured_unit_square(4).unwrap();
        let g = NodalVec2Field::interpolate(&m, |p| [2.0 * p[0], 0.0]);
        let h = recover_hessian(&m, &g).unwrap();
        assert!(max_err(&h.xx, |_| 2.0) < 1e-12);
        assert!(max_err(&h.xy, |_| 0.0) < 1e-12 && max_err(&h.yy, |_| 0.0) < 1e-12);
        let g = NodalVec2Field::interpolate(&m, |p| [p[1], p[0]]);
        let h = recover_hessian(&m, &g).unwrap();
        assert!(max_err(&h.xy, |_| 1.0) < 1e-12);
        let h = recover_hessian(&m, &NodalVec2Field::interpolate(&m, |_| [0.0, 0.0])).unwrap();
        assert!(max_err(&h.xx, |_| 0.0) == 0.0);
    }

    #[test]
    fn regularization_keeps_constants() {
        let m = TriMesh::structured_unit_square(4).unwrap();
        let g = NodalVec2Field::interpolate(&m, |p| [2.0 * p[0], 3.0 * p[1]]);
        let h = recover_hessian_regularized(&m, &g).unwrap();
        assert!(max_err(&h.xx, |_| 2.0) < 1e-12);
        assert!(max_err(&h.yy, |_| 3.0) < 1e-12);
    }

    #[test]
    fn full_hessian_of_paraboloid() {
        let m = TriMesh::structured_unit_square(8).unwrap();
        let u = NodalField::interpolate(&m, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]));
        let h = full_hessian(&m, &u, false).unwrap();
        for v in 0..m.num_vertices() {
            assert!(h.get(v).sub(&Sym2::identity()).norm() < 1e-10);
        }
        let h = full_hessian(&m, &NodalField::interpolate(&m, |p| 3.0 * p[0] - p[1]), false).unwrap();
        assert!((0..m.num_vertices()).all(|v| h.get(v).norm() < 1e-10));
    }

    #[test]
    fn interior_vertices_use_first_ring() {
        let m = TriMesh::structured_unit_square(6).unwrap();
        let r = Recovery::new(&m, false, SolverKind::Cholesky).unwrap();
        for z in m.interior_vertices() {
            assert_eq!(r.fits()[z].ring, 1);
        }
        for z in m.boundary_vertices() {
            assert!(r.fits()[z].ring >= 2);
        }
    }

    #[test]
    fn fit_coefficients_of_quadratic() {
        let m = TriMesh::structured_unit_square(4).unwrap();
        let z = 12;
        let u: Vec<f64> = m.vertices().iter().map(|p| 1.0 + p[0] * p[1]).collect();
        let c = PatchFit::coefficients(&m, z, 1, &u).unwrap();
        assert!((c[0] - u[z]).abs() < 1e-12);
    }
}
