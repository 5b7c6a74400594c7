//! Nearest-point projection of symmetric 2×2 matrices onto
//! `{Q SPD, det Q = f}`.
//!
//! The input is normalized by `√f` and diagonalized; the problem then
//! reduces to the closest point to the eigenvalue pair `b` on the hyperbola
//! `q₁q₂ = 1, q > 0`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::NodalSym2Field;
use crate::mesh::TriMesh;

/// Below this normalized trace the projection returns `√f·I`.
pub const LOW_TRACE: f64 = 1e-8;

const MAX_NEWTON: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub const fn identity() -> Self {
        Sym2::new(1.0, 0.0, 1.0)
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// Frobenius norm, counting the off-diagonal entry twice.
    pub fn norm(&self) -> f64 {
        (self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22).sqrt()
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(s * self.a11, s * self.a12, s * self.a22)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }

    /// `vᵀ A v`.
    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.a11 * v[0] * v[0] + 2.0 * self.a12 * v[0] * v[1] + self.a22 * v[1] * v[1]
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    /// `Rᵀ A R` for the rotation by `angle`.
    pub fn rotated(&self, angle: f64) -> Sym2 {
        let (s, c) = angle.sin_cos();
        // Columns of R = [[c, -s], [s, c]].
        let r1 = [c, s];
        let r2 = [-s, c];
        Sym2::new(self.quad(r1), self.bilinear(r1, r2), self.quad(r2))
    }

    pub fn bilinear(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        self.a11 * u[0] * v[0] + self.a12 * (u[0] * v[1] + u[1] * v[0]) + self.a22 * u[1] * v[1]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_sym2(self).values[1]
    }
}

/// Eigenvalues `λ₁ ≥ λ₂` with eigenvectors `(cos θ, sin θ)` and
/// `(−sin θ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSys2 {
    pub values: [f64; 2],
    pub cos: f64,
    pub sin: f64,
}

impl EigenSys2 {
    pub fn vectors(&self) -> [[f64; 2]; 2] {
        [[self.cos, self.sin], [-self.sin, self.cos]]
    }

    /// `S diag(d) Sᵀ`.
    pub fn compose(&self, d: [f64; 2]) -> Sym2 {
        let (c, s) = (self.cos, self.sin);
        Sym2::new(d[0] * c * c + d[1] * s * s, (d[0] - d[1]) * c * s, d[0] * s * s + d[1] * c * c)
    }
}

pub fn eig_sym2(a: &Sym2) -> EigenSys2 {
    let m = 0.5 * (a.a11 + a.a22);
    let d = 0.5 * (a.a11 - a.a22);
    let r = d.hypot(a.a12);
    // atan2(0, 0) = 0 gives S = I for repeated eigenvalues.
    let theta = 0.5 * a.a12.atan2(d);
    let (sin, cos) = theta.sin_cos();
    EigenSys2 { values: [m + r, m - r], cos, sin }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qmin {
    pub p: [f64; 2],
    pub multiplier: f64,
    pub iterations: usize,
}

/// Closest point to `b` on `{q₁q₂ = 1, q > 0}`, with `b` sorted so that
/// `b₁ ≥ b₂` (the result is sorted the same way).
///
/// Writing `q₁ = (s + √(s²+4))/2`, `q₂ = 1/q₁`, stationarity becomes
/// `φ(s) = s(1 − m/√(s²+4)) − d = 0` with `m`, `d` the mean and half
/// difference of `b`. For `m > 0`, `φ` is convex on `s ≥ 0`, so Newton from
/// any point right of the root decreases monotonically onto it.
pub fn qmin_reduced(b: [f64; 2]) -> Result<Qmin> {
    let (b, swapped) = if b[0] >= b[1] { (b, false) } else { ([b[1], b[0]], true) };
    if !(b[0].is_finite() && b[1].is_finite()) {
        return Err(Error::Projection(Vec::new()));
    }
    let m = 0.5 * (b[0] + b[1]);
    let d = 0.5 * (b[0] - b[1]);
    let (s, iterations) = if m <= 0.0 { solve_concave(m, d)? } else { solve_stationary(m, d)? };
    let root = (s * s + 4.0).sqrt();
    let q1 = if s >= 0.0 { 0.5 * (s + root) } else { 2.0 / (root - s) };
    let q2 = 1.0 / q1;
    let multiplier = 2.0 * (q1 - b[0]) / q2;
    let p = if swapped { [q2, q1] } else { [q1, q2] };
    Ok(Qmin { p, multiplier, iterations })
}

fn phi(s: f64, m: f64, d: f64) -> (f64, f64) {
    let w = s * s + 4.0;
    let r = w.sqrt();
    (s * (1.0 - m / r) - d, 1.0 - 4.0 * m / (w * r))
}

fn solve_stationary(m: f64, d: f64) -> Result<(f64, usize)> {
    if d == 0.0 {
        return Ok(((m * m - 4.0).max(0.0).sqrt(), 0));
    }
    let upper = m + d;
    let mut s = upper;
    // The cubic truncation of φ bounds it from above, so its root lies left
    // of the true root; one Newton step from there lands right of it.
    let sc = cubic_root(m, d);
    let (f, fp) = phi(sc, m, d);
    if fp > 0.0 {
        let t = sc - f / fp;
        if t.is_finite() && t < s {
            s = t.max(0.0);
        }
    }
    let tol = 4.0 * f64::EPSILON * (1.0 + upper);
    for it in 1..=MAX_NEWTON {
        let (f, fp) = phi(s, m, d);
        if f <= 0.0 || fp <= 0.0 {
            return Ok((s, it - 1));
        }
        let step = f / fp;
        s -= step;
        if step <= tol {
            return Ok((s, it));
        }
    }
    Err(Error::Projection(Vec::new()))
}

/// For `m ≤ 0`, `φ` is concave and increasing on `s ≥ 0`; Newton from
/// `s = 0` climbs monotonically onto the root.
fn solve_concave(m: f64, d: f64) -> Result<(f64, usize)> {
    let mut s = 0.0;
    let tol = 4.0 * f64::EPSILON * (1.0 + d - m);
    for it in 1..=MAX_NEWTON {
        let (f, fp) = phi(s, m, d);
        if f >= 0.0 {
            return Ok((s, it - 1));
        }
        let step = -f / fp;
        s += step;
        if step <= tol {
            return Ok((s, it));
        }
    }
    Err(Error::Projection(Vec::new()))
}

/// Largest real root of `m s³/16 + (1 − m/2) s − d = 0`, clamped at zero.
fn cubic_root(m: f64, d: f64) -> f64 {
    let p = 16.0 * (1.0 - 0.5 * m) / m;
    let q = -16.0 * d / m;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let s = if disc >= 0.0 {
        let sq = disc.sqrt();
        (-0.5 * q + sq).cbrt() + (-0.5 * q - sq).cbrt()
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (1.5 * q / (p * r)).clamp(-1.0, 1.0);
        2.0 * r * (arg.acos() / 3.0).cos()
    };
    if s.is_finite() {
        s.max(0.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub value: Sym2,
    pub iterations: usize,
    pub low_trace: bool,
}

/// Nearest SPD matrix with determinant `f`.
pub fn project_spd_det(h: &Sym2, f: f64) -> Result<Sym2> {
    project_spd_det_stats(h, f).map(|p| p.value)
}

pub fn project_spd_det_stats(h: &Sym2, f: f64) -> Result<Projected> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::NonPositiveTarget(f));
    }
    if !h.is_finite() {
        return Err(Error::Projection(Vec::new()));
    }
    let r = f.sqrt();
    let normalized = h.scale(1.0 / r);
    if normalized.trace() < LOW_TRACE {
        return Ok(Projected { value: Sym2::identity().scale(r), iterations: 0, low_trace: true });
    }
    let e = eig_sym2(&normalized);
    let q = qmin_reduced(e.values)?;
    Ok(Projected { value: e.compose(q.p).scale(r), iterations: q.iterations, low_trace: false })
}

/// Vertexwise projection with the nodal values of `f`. Failing vertices are
/// collected into a single error.
pub fn project_field(mesh: &TriMesh, h: &NodalSym2Field, f: &[f64]) -> Result<NodalSym2Field> {
    h.check(mesh)?;
    if f.len() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch { expected: mesh.num_vertices(), got: f.len() });
    }
    let out: Vec<Result<Sym2>> =
        (0..mesh.num_vertices()).into_par_iter().map(|v| project_spd_det(&h.get(v), f[v])).collect();
    let bad: Vec<usize> = out.iter().enumerate().filter(|(_, r)| r.is_err()).map(|(v, _)| v).collect();
    if !bad.is_empty() {
        return Err(Error::Projection(bad));
    }
    Ok(NodalSym2Field::from_values(mesh, out.into_iter().map(|r| r.unwrap()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Sym2, b: &Sym2, tol: f64) -> bool {
        a.sub(b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn eig_diagonal() {
        let e = eig_sym2(&Sym2::diag(2.0, 1.0));
        assert_eq!(e.values, [2.0, 1.0]);
        assert_eq!((e.cos, e.sin), (1.0, 0.0));
    }

    #[test]
    fn eig_swap_matrix() {
        let e = eig_sym2(&Sym2::new(0.0, 1.0, 0.0));
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.cos - h).abs() < 1e-15 && (e.sin - h).abs() < 1e-15);
    }

    #[test]
    fn eig_repeated_reconstructs() {
        let a = Sym2::diag(3.5, 3.5);
        let e = eig_sym2(&a);
        assert_eq!(e.values, [3.5, 3.5]);
        assert!(close(&e.compose(e.values), &a, 1e-15));
    }

    #[test]
    fn qmin_examples() {
        assert_eq!(qmin_reduced([1.0, 1.0]).unwrap().p, [1.0, 1.0]);
        let p = qmin_reduced([5.0, 0.2]).unwrap().p;
        assert!((p[0] - 5.0).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12);
        let p = qmin_reduced([2.0, 2.0]).unwrap().p;
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn qmin_kkt() {
        for b in [[3.0, -1.0], [0.1, 0.05], [7.0, 6.5], [2.0, 1.9999], [1e-3, -2.0]] {
            let q = qmin_reduced(b).unwrap();
            let (p, l) = (q.p, q.multiplier);
            assert!((p[0] * p[1] - 1.0).abs() < 1e-12);
            let r1 = 2.0 * p[0] - 2.0 * b[0] - l * p[1];
            let r2 = 2.0 * p[1] - 2.0 * b[1] - l * p[0];
            assert!(r1.hypot(r2) < 1e-12 * (1.0 + b[0].abs() + b[1].abs()), "{b:?}: {r1} {r2}");
        }
    }

    #[test]
    fn projection_examples() {
        let h = Sym2::diag(2.0, 0.5);
        assert!(close(&project_spd_det(&h, 1.0).unwrap(), &h, 1e-14));
        let p = project_spd_det(&Sym2::diag(2.0, 2.0), 1.0).unwrap();
        assert!(close(&p, &Sym2::identity(), 1e-6));
        let p = project_spd_det(&Sym2::identity(), 4.0).unwrap();
        assert!(close(&p, &Sym2::diag(2.0, 2.0), 1e-14));
    }

    #[test]
    fn low_trace_fallback() {
        let p = project_spd_det(&Sym2::diag(-1.0, -3.0), 4.0).unwrap();
        assert_eq!(p, Sym2::diag(2.0, 2.0));
    }

    #[test]
    fn bad_target() {
        assert!(project_spd_det(&Sym2::identity(), 0.0).is_err());
        assert!(project_spd_det(&Sym2::identity(), -1.0).is_err());
    }

    #[test]
    fn rotation_round_trip() {
        let a = Sym2::new(1.0, 0.3, -2.0);
        let b = a.rotated(0.7).rotated(-0.7);
        assert!(close(&a, &b, 1e-15));
    }
}
