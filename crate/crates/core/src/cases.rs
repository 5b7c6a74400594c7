//! Benchmark problems on the unit square.
//!
//! Every case provides `f` and `g`, the second tangential derivative of `g`
//! along each straight side, and where known the exact solution with its
//! gradient and Hessian.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::mesh::{Point, Polygon};
use crate::projection::Sym2;

#[derive(Debug, Clone, PartialEq)]
pub enum CaseKind {
    /// `u = exp(|x|²/2)`.
    Exponential,
    /// `u = exp(2|x|²)`, steep near `(1, 1)`.
    SteepExponential,
    /// `u = ½ xᵀAx + b·x + c` with constant Hessian `A`.
    Quadratic { hessian: Sym2, linear: [f64; 2], constant: f64 },
    /// `u = −√(R² − |x|²)`.
    Sphere { radius: f64 },
    /// `f = 1`, `g = 0`; no classical solution.
    Flat,
    /// `u = |x − c|` with `f` regularized to `ε²/(ε² + |x − c|²)²`.
    Cone { eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemCase {
    name: String,
    kind: CaseKind,
    scale: f64,
}

const CONE_CENTER: Point = [0.5, 0.5];

impl ProblemCase {
    pub fn new(name: impl Into<String>, kind: CaseKind) -> Self {
        ProblemCase { name: name.into(), kind, scale: 1.0 }
    }

    /// Looks up a case by name: `case1`, `case2`, `case3` (R = 2),
    /// `case3:<R>` (`case3:sqrt2` for the critical radius), `case4`, `case5`,
    /// `case5:<eps>`, `adapt1`.
    pub fn by_name(name: &str) -> Result<Self> {
        let (base, param) = match name.split_once(':') {
            Some((b, p)) => (b, Some(p)),
            None => (name, None),
        };
        let number = |p: &str| -> Result<f64> {
            match p {
                "sqrt2" => Ok(SQRT_2),
                _ => p.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse `{p}`"))),
            }
        };
        match (base, param) {
            ("case1", None) => Ok(Self::case1()),
            ("case2", None) => Ok(Self::case2()),
            ("case3", None) => Self::case3(2.0),
            ("case3", Some(p)) => Self::case3(number(p)?),
            ("case4", None) => Ok(Self::case4()),
            ("case5", None) => Self::case5(1e-2),
            ("case5", Some(p)) => Self::case5(number(p)?),
            ("adapt1", None) => Ok(Self::adapt1()),
            _ => Err(Error::UnknownCase(name.to_string())),
        }
    }

    pub fn case1() -> Self {
        Self::new("case1", CaseKind::Exponential)
    }

    pub fn case2() -> Self {
        Self::new("case2", CaseKind::Quadratic { hessian: Sym2::new(5.0, 2.0, 1.0), linear: [0.0, 0.0], constant: 0.0 })
    }

    pub fn case3(radius: f64) -> Result<Self> {
        if !(radius >= SQRT_2) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("sphere radius {radius} must be at least sqrt(2)")));
        }
        let name = if radius == 2.0 {
            "case3".to_string()
        } else if radius == SQRT_2 {
            "case3_sqrt2".to_string()
        } else {
            format!("case3_r{radius}")
        };
        Ok(Self::new(name, CaseKind::Sphere { radius }))
    }

    pub fn case4() -> Self {
        Self::new("case4", CaseKind::Flat)
    }

    pub fn case5(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("regularization {eps} must be positive")));
        }
        let name = if eps == 1e-2 { "case5".to_string() } else { format!("case5_eps{eps}") };
        Ok(Self::new(name, CaseKind::Cone { eps }))
    }

    pub fn adapt1() -> Self {
        Self::new("adapt1", CaseKind::SteepExponential)
    }

    /// Multiplies `u` and `g` by `s` (and `f` by `s²`).
    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &CaseKind {
        &self.kind
    }

    pub fn domain(&self) -> Polygon {
        Polygon::unit_square()
    }

    pub fn has_exact(&self) -> bool {
        !matches!(self.kind, CaseKind::Flat)
    }

    /// Whether the exact Hessian satisfies `det D²u = f` pointwise. The
    /// regularized cone does not: its `f` is a smoothed point mass.
    pub fn exact_solves_equation(&self) -> bool {
        self.has_exact() && !matches!(self.kind, CaseKind::Cone { .. })
    }

    pub fn f(&self, x: Point) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let s2 = self.scale * self.scale;
        s2 * match &self.kind {
            CaseKind::Exponential => (1.0 + r2) * r2.exp(),
            // det of 4u[[1+4x², 4xy], [4xy, 1+4y²]] with u = e^{2r²}.
            CaseKind::SteepExponential => 16.0 * (4.0 * r2).exp() * (1.0 + 4.0 * r2),
            CaseKind::Quadratic { hessian, .. } => hessian.det(),
            CaseKind::Sphere { radius } => {
                let w = radius * radius - r2;
                radius * radius / (w * w)
            }
            CaseKind::Flat => 1.0,
            CaseKind::Cone { eps } => {
                let w = eps * eps + dist2(x, CONE_CENTER);
                eps * eps / (w * w)
            }
        }
    }

    /// Points where nodal data is singular; callers evaluate nearby instead.
    pub fn is_singular_at(&self, x: Point) -> bool {
        match &self.kind {
            CaseKind::Sphere { radius } => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                radius * radius - r2 <= 1e-12 * radius * radius
            }
            _ => false,
        }
    }

    pub fn g(&self, x: Point) -> f64 {
        match &self.kind {
            CaseKind::Flat => 0.0,
            _ => self.u(x).expect("cases with nonzero g have an exact solution"),
        }
    }

    /// Hessian of the smooth extension of `g` used for tangential derivatives.
    fn g_hessian(&self, x: Point) -> Sym2 {
        match &self.kind {
            CaseKind::Flat => Sym2::default(),
            _ => self.hessian(x).expect("cases with nonzero g have an exact solution"),
        }
    }

    /// `d²g/ds²` at arc length `s` along `side` of the domain.
    pub fn g_tt(&self, polygon: &Polygon, side: usize, s: f64) -> Result<f64> {
        if side >= polygon.num_sides() {
            return Err(Error::InvalidParameter(format!("side {side} does not exist")));
        }
        let length = polygon.side_length(side);
        let slack = 1e-12 * length;
        if !(s >= -slack && s <= length + slack) {
            return Err(Error::ArcLengthOutOfRange { side, s, length });
        }
        let x = polygon.point_on_side(side, s.clamp(0.0, length));
        Ok(self.g_hessian(x).quad(polygon.tangent(side)))
    }

    pub fn u(&self, x: Point) -> Option<f64> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let v = match &self.kind {
            CaseKind::Exponential => (0.5 * r2).exp(),
            CaseKind::SteepExponential => (2.0 * r2).exp(),
            CaseKind::Quadratic { hessian, linear, constant } => {
                0.5 * hessian.quad(x) + linear[0] * x[0] + linear[1] * x[1] + constant
            }
            CaseKind::Sphere { radius } => -(radius * radius - r2).max(0.0).sqrt(),
            CaseKind::Flat => return None,
            CaseKind::Cone { .. } => dist2(x, CONE_CENTER).sqrt(),
        };
        Some(self.scale * v)
    }

    pub fn grad(&self, x: Point) -> Option<Point> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let g = match &self.kind {
            CaseKind::Exponential => {
                let u = (0.5 * r2).exp();
                [x[0] * u, x[1] * u]
            }
            CaseKind::SteepExponential => {
                let u = (2.0 * r2).exp();
                [4.0 * x[0] * u, 4.0 * x[1] * u]
            }
            CaseKind::Quadratic { hessian: a, linear, .. } => {
                [a.a11 * x[0] + a.a12 * x[1] + linear[0], a.a12 * x[0] + a.a22 * x[1] + linear[1]]
            }
            CaseKind::Sphere { radius } => {
                let s = (radius * radius - r2).sqrt();
                [x[0] / s, x[1] / s]
            }
            CaseKind::Flat => return None,
            CaseKind::Cone { .. } => {
                let d = [x[0] - CONE_CENTER[0], x[1] - CONE_CENTER[1]];
                let rho = d[0].hypot(d[1]);
                [d[0] / rho, d[1] / rho]
            }
        };
        Some([self.scale * g[0], self.scale * g[1]])
    }

    pub fn hessian(&self, x: Point) -> Option<Sym2> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let h = match &self.kind {
            CaseKind::Exponential => {
                let u = (0.5 * r2).exp();
                Sym2::new((1.0 + x[0] * x[0]) * u, x[0] * x[1] * u, (1.0 + x[1] * x[1]) * u)
            }
            CaseKind::SteepExponential => {
                let u = 4.0 * (2.0 * r2).exp();
                Sym2::new((1.0 + 4.0 * x[0] * x[0]) * u, 4.0 * x[0] * x[1] * u, (1.0 + 4.0 * x[1] * x[1]) * u)
            }
            CaseKind::Quadratic { hessian, .. } => *hessian,
            CaseKind::Sphere { radius } => {
                let w = radius * radius - r2;
                let s = w.sqrt();
                let s3 = w * s;
                Sym2::new(1.0 / s + x[0] * x[0] / s3, x[0] * x[1] / s3, 1.0 / s + x[1] * x[1] / s3)
            }
            CaseKind::Flat => return None,
            CaseKind::Cone { .. } => {
                let d = [x[0] - CONE_CENTER[0], x[1] - CONE_CENTER[1]];
                let rho2 = d[0] * d[0] + d[1] * d[1];
                let rho = rho2.sqrt();
                let rho3 = rho2 * rho;
                Sym2::new(d[1] * d[1] / rho3, -d[0] * d[1] / rho3, d[0] * d[0] / rho3)
            }
        };
        Some(h.scale(self.scale))
    }

    pub fn laplacian(&self, x: Point) -> Option<f64> {
        self.hessian(x).map(|h| h.trace())
    }

    /// `u = a + b·x`, so `f = 0`. Only the initial solve accepts it.
    pub fn affine(a: f64, b: [f64; 2]) -> Self {
        Self::new("affine", CaseKind::Quadratic { hessian: Sym2::default(), linear: b, constant: a })
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Biharmonic problem `Δ²u = F` with `u` and `Δu` prescribed on the
/// boundary; exact solution `u = exp(|x|²/2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BiharmonicCase;

impl BiharmonicCase {
    pub fn u(&self, x: Point) -> f64 {
        (0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
    }

    pub fn grad(&self, x: Point) -> Point {
        let u = self.u(x);
        [x[0] * u, x[1] * u]
    }

    pub fn laplacian(&self, x: Point) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        (r2 + 2.0) * self.u(x)
    }

    pub fn grad_laplacian(&self, x: Point) -> Point {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let w = (r2 + 4.0) * self.u(x);
        [x[0] * w, x[1] * w]
    }

    pub fn bilaplacian(&self, x: Point) -> f64 {
        let (a, b) = (x[0] * x[0], x[1] * x[1]);
        (a * a + b * b + 2.0 * a * b + 8.0 * a + 8.0 * b + 8.0) * self.u(x)
    }
}
