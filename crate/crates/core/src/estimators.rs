//! Residual indicators and error norms against exact solutions.

use rayon::prelude::*;

use crate::cases::{BiharmonicCase, ProblemCase};
use crate::error::{Error, Result};
use crate::fem::assembly::element_divergence;
use crate::fem::quadrature::{self, DEGREE4};
use crate::fem::{element_gradient, grad_norm, Discretization, NodalField, NodalSym2Field};
use crate::linalg::SolverKind;
use crate::mesh::{Point, TriMesh};
use crate::projection::Sym2;

/// Per-triangle indicator values.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementIndicator {
    pub values: Vec<f64>,
}

impl ElementIndicator {
    /// `(Σ_K η_K²)^{1/2}`.
    pub fn global(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn global_eta_hat(ind: &ElementIndicator) -> f64 {
    ind.global()
}

/// `Σ_{e ⊂ ∂K interior} ½[q·n]_e² |e|` for an elementwise-constant vector
/// field. Each edge integral is split evenly between its two triangles, so
/// `Σ_K` counts every interior edge once.
fn jump_terms(mesh: &TriMesh, q: &[Point]) -> Vec<f64> {
    let mut s = vec![0.0; mesh.num_triangles()];
    for e in mesh.interior_edges() {
        let a = mesh.vertex(e.vertices[0]);
        let b = mesh.vertex(e.vertices[1]);
        let n = [(b[1] - a[1]) / e.length, -(b[0] - a[0]) / e.length];
        let [k0, k1] = e.triangles;
        let j = (q[k0][0] - q[k1][0]) * n[0] + (q[k0][1] - q[k1][1]) * n[1];
        let c = 0.5 * j * j * e.length;
        s[k0] += c;
        s[k1] += c;
    }
    s
}

fn same_mesh(mesh: &TriMesh, fields: &[&NodalField]) -> Result<()> {
    fields.iter().try_for_each(|f| f.check(mesh))
}

/// `η_K = h_K^{1/2}‖[(div P_h + ∇ω_h)·n]‖_{L²(∂K)}`; the volume residual
/// vanishes for P1 data.
pub fn eta_k(mesh: &TriMesh, p: &NodalSym2Field, omega: &NodalField) -> Result<ElementIndicator> {
    p.check(mesh)?;
    same_mesh(mesh, &[omega])?;
    let q: Vec<Point> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let d = element_divergence(mesh, p, k);
            let g = element_gradient(mesh, omega.values(), k);
            [d[0] + g[0], d[1] + g[1]]
        })
        .collect();
    let jumps = jump_terms(mesh, &q);
    let values = (0..mesh.num_triangles()).map(|k| mesh.diameter(k).sqrt() * jumps[k].sqrt()).collect();
    Ok(ElementIndicator { values })
}

/// `η̂_K = h_K‖ω_h‖_{L²(K)} + h_K^{1/2}‖[∇u_h·n]‖_{L²(∂K)}`.
pub fn eta_hat_k(mesh: &TriMesh, omega: &NodalField, u: &NodalField) -> Result<ElementIndicator> {
    same_mesh(mesh, &[omega, u])?;
    let q: Vec<Point> =
        (0..mesh.num_triangles()).into_par_iter().map(|k| element_gradient(mesh, u.values(), k)).collect();
    let jumps = jump_terms(mesh, &q);
    let values = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let w = mesh.triangle(k).map(|v| omega[v]);
            let sum: f64 = w.iter().sum();
            let sq: f64 = w.iter().map(|x| x * x).sum();
            let vol = (mesh.area(k) / 12.0 * (sq + sum * sum)).max(0.0).sqrt();
            let h = mesh.diameter(k);
            h * vol + h.sqrt() * jumps[k].sqrt()
        })
        .collect();
    Ok(ElementIndicator { values })
}

fn integrate(mesh: &TriMesh, f: impl Fn(usize, Point, &[f64; 3]) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let p = mesh.triangle_points(k);
            let s: f64 =
                DEGREE4.points.iter().zip(DEGREE4.weights).map(|(l, w)| w * f(k, quadrature::map(&p, l), l)).sum();
            s * mesh.area(k)
        })
        .collect();
    parts.iter().sum()
}

fn eval(mesh: &TriMesh, v: &[f64], k: usize, l: &[f64; 3]) -> f64 {
    let t = mesh.triangle(k);
    l[0] * v[t[0]] + l[1] * v[t[1]] + l[2] * v[t[2]]
}

/// `‖v − v_h‖_{L²}` by degree-4 quadrature.
pub fn l2_error(mesh: &TriMesh, vh: &[f64], exact: impl Fn(Point) -> f64 + Sync) -> f64 {
    integrate(mesh, |k, x, l| (exact(x) - eval(mesh, vh, k, l)).powi(2)).sqrt()
}

/// `‖∇(v − v_h)‖_{L²}` by degree-4 quadrature.
pub fn h1_error(mesh: &TriMesh, vh: &[f64], exact: impl Fn(Point) -> Point + Sync) -> f64 {
    integrate(mesh, |k, x, _| {
        let g = element_gradient(mesh, vh, k);
        let e = exact(x);
        (e[0] - g[0]).powi(2) + (e[1] - g[1]).powi(2)
    })
    .sqrt()
}

/// `‖D²u − D²_h u_h‖_{L²}` with the Frobenius norm pointwise.
pub fn h2_error(mesh: &TriMesh, d2: &NodalSym2Field, exact: impl Fn(Point) -> Sym2 + Sync) -> f64 {
    integrate(mesh, |k, x, l| {
        let h = Sym2::new(
            eval(mesh, d2.xx.values(), k, l),
            eval(mesh, d2.xy.values(), k, l),
            eval(mesh, d2.yy.values(), k, l),
        );
        exact(x).sub(&h).norm().powi(2)
    })
    .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub omega_l2: f64,
}

/// Errors against the exact solution; `None` when the case has none.
pub fn error_norms(
    mesh: &TriMesh,
    u: &NodalField,
    omega: &NodalField,
    d2: &NodalSym2Field,
    case: &ProblemCase,
) -> Result<Option<ErrorNorms>> {
    same_mesh(mesh, &[u, omega])?;
    d2.check(mesh)?;
    if !case.has_exact() {
        return Ok(None);
    }
    let nan = f64::NAN;
    Ok(Some(ErrorNorms {
        l2: l2_error(mesh, u.values(), |x| case.u(x).unwrap_or(nan)),
        h1: h1_error(mesh, u.values(), |x| case.grad(x).unwrap_or([nan, nan])),
        h2: h2_error(mesh, d2, |x| case.hessian(x).unwrap_or(Sym2::new(nan, nan, nan))),
        omega_l2: l2_error(mesh, omega.values(), |x| -case.laplacian(x).unwrap_or(nan)),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiharmonicErrors {
    pub u_l2: f64,
    pub u_h1: f64,
    pub omega_l2: f64,
    pub omega_h1: f64,
}

pub fn biharmonic_errors(
    mesh: &TriMesh,
    u: &NodalField,
    omega: &NodalField,
    case: &BiharmonicCase,
) -> Result<BiharmonicErrors> {
    same_mesh(mesh, &[u, omega])?;
    Ok(BiharmonicErrors {
        u_l2: l2_error(mesh, u.values(), |x| case.u(x)),
        u_h1: h1_error(mesh, u.values(), |x| case.grad(x)),
        omega_l2: l2_error(mesh, omega.values(), |x| -case.laplacian(x)),
        omega_h1: h1_error(mesh, omega.values(), |x| {
            let g = case.grad_laplacian(x);
            [-g[0], -g[1]]
        }),
    })
}

/// `‖∇z_h‖_{L²}` where `∫∇z_h·∇v = load(v)`, `z_h = 0` on the boundary.
fn dual_norm(disc: &Discretization, load: &[f64]) -> Result<f64> {
    let z = disc.poisson().solve(load, &vec![0.0; load.len()])?;
    grad_norm(disc.mesh(), &z)
}

/// Same-mesh surrogate of `‖e‖_{H⁻¹}`.
pub fn hminus1_norm(disc: &Discretization, e: &NodalField) -> Result<f64> {
    disc.check(e)?;
    dual_norm(disc, &disc.mass().matvec(e.values()))
}

/// Surrogate of `‖ω − ω_h‖_{H⁻¹}` with the exact `ω = −Δu` integrated by
/// quadrature. With `refined`, the dual problem is solved after two
/// bisection sweeps.
pub fn omega_hminus1_error(
    mesh: &TriMesh,
    omega: &NodalField,
    case: &ProblemCase,
    refined: bool,
) -> Result<Option<f64>> {
    omega.check(mesh)?;
    if !case.has_exact() {
        return Ok(None);
    }
    let (mesh, wh) = if refined {
        let fine = mesh.refine_uniform(2)?;
        let w = mesh.transfer(omega.values(), &fine)?;
        (fine, w)
    } else {
        (mesh.clone(), omega.values().to_vec())
    };
    let mut load = vec![0.0; mesh.num_vertices()];
    for k in 0..mesh.num_triangles() {
        let p = mesh.triangle_points(k);
        let t = mesh.triangle(k);
        for (l, w) in DEGREE4.points.iter().zip(DEGREE4.weights) {
            let x = quadrature::map(&p, l);
            let e = -case.laplacian(x).unwrap_or(f64::NAN) - eval(&mesh, &wh, k, l);
            for i in 0..3 {
                load[t[i]] += w * mesh.area(k) * e * l[i];
            }
        }
    }
    let disc = Discretization::new(mesh, SolverKind::Cholesky)?;
    dual_norm(&disc, &load).map(Some)
}

/// `η̂ / ‖∇(u − u_h)‖_{L²}`.
pub fn effectivity(mesh: &TriMesh, u: &NodalField, omega: &NodalField, case: &ProblemCase) -> Result<f64> {
    if !case.has_exact() {
        return Err(Error::MissingData(case.name().to_string(), "exact solution"));
    }
    let eta = eta_hat_k(mesh, omega, u)?.global();
    let err = h1_error(mesh, u.values(), |x| case.grad(x).unwrap_or([f64::NAN; 2]));
    if !(err > 0.0) {
        return Err(Error::ZeroDenominator("H1 error"));
    }
    Ok(eta / err)
}
