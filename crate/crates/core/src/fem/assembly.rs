use rayon::prelude::*;

use super::quadrature::{self, EDGE_MIDPOINT};
use super::NodalSym2Field;
use crate::error::Result;
use crate::linalg::SparseSym;
use crate::mesh::{Point, TriMesh};

type Local = ([usize; 3], [[f64; 3]; 3]);

/// Element matrices are computed in parallel and summed in element order,
/// so the result does not depend on the thread count.
fn assemble_local(mesh: &TriMesh, local: impl Fn(usize) -> [[f64; 3]; 3] + Sync) -> Result<SparseSym> {
    let blocks: Vec<Local> = (0..mesh.num_triangles()).into_par_iter().map(|k| (mesh.triangle(k), local(k))).collect();
    let mut triplets = Vec::with_capacity(9 * blocks.len());
    for (t, a) in &blocks {
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((t[i], t[j], a[i][j]));
            }
        }
    }
    SparseSym::assemble(mesh.num_vertices(), &triplets)
}

pub fn element_stiffness(mesh: &TriMesh, k: usize) -> [[f64; 3]; 3] {
    let g = mesh.basis_gradients(k);
    let area = mesh.area(k);
    std::array::from_fn(|i| std::array::from_fn(|j| area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])))
}

pub fn element_mass(mesh: &TriMesh, k: usize) -> [[f64; 3]; 3] {
    let a = mesh.area(k) / 12.0;
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 2.0 * a } else { a }))
}

/// `∫ ∇φ_i·∇φ_j`.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SparseSym> {
    assemble_local(mesh, |k| element_stiffness(mesh, k))
}

/// `∫ φ_i φ_j`.
pub fn assemble_mass(mesh: &TriMesh) -> Result<SparseSym> {
    assemble_local(mesh, |k| element_mass(mesh, k))
}

/// `Σ_K |K| ∫_K ∇φ_i·∇φ_j`, the stiffness weighted by element area.
pub fn assemble_area_weighted_stiffness(mesh: &TriMesh) -> Result<SparseSym> {
    assemble_local(mesh, |k| {
        let a = mesh.area(k);
        element_stiffness(mesh, k).map(|row| row.map(|v| a * v))
    })
}

/// `∫ f φ_i` by the edge-midpoint rule.
pub fn load(mesh: &TriMesh, f: impl Fn(Point) -> f64 + Sync) -> Vec<f64> {
    let parts: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let p = mesh.triangle_points(k);
            let area = mesh.area(k);
            let mut out = [0.0; 3];
            for (l, w) in EDGE_MIDPOINT.points.iter().zip(EDGE_MIDPOINT.weights) {
                let v = w * area * f(quadrature::map(&p, l));
                for i in 0..3 {
                    out[i] += v * l[i];
                }
            }
            out
        })
        .collect();
    scatter(mesh, &parts)
}

fn scatter(mesh: &TriMesh, parts: &[[f64; 3]]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    for (k, part) in parts.iter().enumerate() {
        for (i, &v) in mesh.triangle(k).iter().enumerate() {
            b[v] += part[i];
        }
    }
    b
}

/// Elementwise-constant row divergence of a P1 tensor field.
pub fn element_divergence(mesh: &TriMesh, p: &NodalSym2Field, k: usize) -> Point {
    let t = mesh.triangle(k);
    let g = mesh.basis_gradients(k);
    let mut d = [0.0; 2];
    for i in 0..3 {
        let v = t[i];
        d[0] += p.xx[v] * g[i][0] + p.xy[v] * g[i][1];
        d[1] += p.xy[v] * g[i][0] + p.yy[v] * g[i][1];
    }
    d
}

/// `−∫ div(P)·∇φ_i`.
pub fn div_load(mesh: &TriMesh, p: &NodalSym2Field) -> Result<Vec<f64>> {
    p.check(mesh)?;
    let parts: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let d = element_divergence(mesh, p, k);
            let g = mesh.basis_gradients(k);
            let a = mesh.area(k);
            std::array::from_fn(|i| -a * (d[0] * g[i][0] + d[1] * g[i][1]))
        })
        .collect();
    Ok(scatter(mesh, &parts))
}
