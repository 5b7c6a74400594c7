use super::poisson::PoissonSolver;
use super::quadrature::{self, EDGE_MIDPOINT};
use super::{assembly, NodalSym2Field};
use crate::cases::ProblemCase;
use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};

/// A point a quarter of the way from vertex `v` toward its ring-1 centroid.
fn pulled_inside(mesh: &TriMesh, v: usize) -> Point {
    let ring: Vec<usize> = mesh.vertex_patch(v, 1).into_iter().filter(|&w| w != v).collect();
    let n = ring.len() as f64;
    let c = ring.iter().fold([0.0, 0.0], |acc, &w| [acc[0] + mesh.vertex(w)[0] / n, acc[1] + mesh.vertex(w)[1] / n]);
    let p = mesh.vertex(v);
    [p[0] + 0.25 * (c[0] - p[0]), p[1] + 0.25 * (c[1] - p[1])]
}

/// Lumped L² projection `∫f φ_i / ∫φ_i`, integrated on each triangle after
/// `levels` four-way subdivisions.
pub fn projected_f(mesh: &TriMesh, case: &ProblemCase, levels: u32) -> Result<Vec<f64>> {
    let mut num = vec![0.0; mesh.num_vertices()];
    let mut den = vec![0.0; mesh.num_vertices()];
    let m = 1usize << levels;
    let step = 1.0 / m as f64;
    for k in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(k);
        let t = mesh.triangle(k);
        let a = mesh.area(k) / (m * m) as f64;
        // Sub-triangles in barycentric coordinates (i, j) grid.
        for i in 0..m {
            for j in 0..(m - i) {
                let mut subs = vec![[[i, j], [i + 1, j], [i, j + 1]]];
                if i + j + 1 < m {
                    subs.push([[i + 1, j], [i + 1, j + 1], [i, j + 1]]);
                }
                for sub in subs {
                    let bary = sub.map(|[a, b]| {
                        let (l1, l2) = (a as f64 * step, b as f64 * step);
                        [1.0 - l1 - l2, l1, l2]
                    });
                    for (q, w) in quadrature::DEGREE4.points.iter().zip(quadrature::DEGREE4.weights) {
                        let l: [f64; 3] =
                            std::array::from_fn(|c| q[0] * bary[0][c] + q[1] * bary[1][c] + q[2] * bary[2][c]);
                        let f = case.f(quadrature::map(&p, &l));
                        for c in 0..3 {
                            num[t[c]] += w * a * f * l[c];
                            den[t[c]] += w * a * l[c];
                        }
                    }
                }
            }
        }
    }
    (0..mesh.num_vertices())
        .map(|v| {
            let f = num[v] / den[v];
            if f.is_finite() {
                Ok(f)
            } else {
                Err(Error::NonPositiveData { vertex: v, value: f })
            }
        })
        .collect()
}

/// Nodal values of `f`. Where the data is singular the value is taken
/// slightly inside the vertex patch.
pub fn nodal_f(mesh: &TriMesh, case: &ProblemCase) -> Result<Vec<f64>> {
    (0..mesh.num_vertices())
        .map(|v| {
            let p = mesh.vertex(v);
            let x = if case.is_singular_at(p) { pulled_inside(mesh, v) } else { p };
            let f = case.f(x);
            if f.is_finite() {
                Ok(f)
            } else {
                Err(Error::NonPositiveData { vertex: v, value: f })
            }
        })
        .collect()
}

/// Nodal interpolant of `g` on boundary vertices, zero inside.
pub fn dirichlet_g(mesh: &TriMesh, case: &ProblemCase) -> Vec<f64> {
    (0..mesh.num_vertices()).map(|v| if mesh.is_boundary_vertex(v) { case.g(mesh.vertex(v)) } else { 0.0 }).collect()
}

fn boundary_edge_length(mesh: &TriMesh, v: usize, side: usize) -> f64 {
    mesh.boundary_edges()
        .iter()
        .filter(|e| e.side == side && e.vertices.contains(&v))
        .map(|e| e.length)
        .fold(f64::INFINITY, f64::min)
}

/// `φ = νᵀPν + d²g/ds²` on boundary vertices (zero inside). Corners take
/// the mean over their two sides.
pub fn boundary_phi(mesh: &TriMesh, p: &NodalSym2Field, case: &ProblemCase) -> Result<Vec<f64>> {
    p.check(mesh)?;
    let polygon = mesh.polygon();
    let mut phi = vec![0.0; mesh.num_vertices()];
    for v in mesh.boundary_vertices() {
        let x = mesh.vertex(v);
        let pv = p.get(v);
        let sides = mesh.vertex_sides(v);
        let mut sum = 0.0;
        for &side in sides {
            let length = polygon.side_length(side);
            let mut s = polygon.arc_length(side, x).clamp(0.0, length);
            if case.is_singular_at(x) {
                let shift = 0.25 * boundary_edge_length(mesh, v, side);
                s = if s < 0.5 * length { s + shift } else { s - shift };
            }
            sum += pv.quad(polygon.outward_normal(side)) + case.g_tt(polygon, side, s)?;
        }
        phi[v] = sum / sides.len() as f64;
    }
    Ok(phi)
}

/// Initial guess: `∫∇u⁰·∇v = −∫2√f v` with `u⁰ = g` on the boundary.
pub fn poisson_init(mesh: &TriMesh, poisson: &PoissonSolver, case: &ProblemCase) -> Result<Vec<f64>> {
    for k in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(k);
        for l in EDGE_MIDPOINT.points {
            let x = quadrature::map(&p, l);
            let f = case.f(x);
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::NonPositiveData { vertex: mesh.triangle(k)[0], value: f });
            }
        }
    }
    let rhs = assembly::load(mesh, |x| -2.0 * case.f(x).sqrt());
    poisson.solve(&rhs, &dirichlet_g(mesh, case))
}
