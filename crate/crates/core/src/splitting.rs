//! The least-squares splitting iteration.
//!
//! Each step projects the recovered Hessian pointwise onto `{det = f, SPD}`
//! and then solves the mixed biharmonic problem as two Poisson problems:
//!
//! ```text
//! ∫∇ω·∇ψ = −∫div P·∇ψ,   ω = −φ on ∂Ω
//! ∫∇u·∇v = ∫ω v,          u = g on ∂Ω
//! ```
//!
//! where `ω = −Δu` and `φ = νᵀPν + ∂²g/∂s²`.

use crate::cases::{BiharmonicCase, ProblemCase};
use crate::error::{Error, Result};
use crate::fem::{self, Discretization, NodalField, NodalSym2Field};
use crate::linalg::SolverKind;
use crate::mesh::TriMesh;
use crate::projection::project_field;
use crate::recovery::Recovery;

/// Subdivision depth for the nodal projection of `f`; resolves data peaks
/// narrower than the mesh.
pub const F_SUBDIVISIONS: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    /// Stop once `‖u^{n+1} − uⁿ‖_{L²}` drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    pub regularized: bool,
    pub solver: SolverKind,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { tol: 1e-8, max_iter: 400, regularized: false, solver: SolverKind::Cholesky }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("split tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// One iterate. `p` is always the projection of `hessian`.
#[derive(Debug, Clone)]
pub struct SplitState {
    pub u: NodalField,
    pub omega: NodalField,
    pub hessian: NodalSym2Field,
    pub p: NodalSym2Field,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub iterations: usize,
    /// `J_h` for iterates `0..=iterations`.
    pub objective: Vec<f64>,
    /// `‖D²_h u_h − P_h‖_{L²}` for iterates `0..=iterations`.
    pub distance: Vec<f64>,
    /// `‖u^{n+1} − uⁿ‖_{L²}`, one per step.
    pub increments: Vec<f64>,
    pub termination: Termination,
}

impl SplitReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Everything a splitting run needs on one mesh.
#[derive(Debug, Clone)]
pub struct Splitter {
    disc: Discretization,
    recovery: Recovery,
    case: ProblemCase,
    f: Vec<f64>,
    g: Vec<f64>,
    config: SplitConfig,
}

impl Splitter {
    pub fn new(mesh: TriMesh, case: ProblemCase, config: SplitConfig) -> Result<Self> {
        config.validate()?;
        let recovery = Recovery::new(&mesh, config.regularized, config.solver)?;
        let f = fem::projected_f(&mesh, &case, F_SUBDIVISIONS)?;
        if let Some(v) = f.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::NonPositiveData { vertex: v, value: f[v] });
        }
        let g = fem::dirichlet_g(&mesh, &case);
        let disc = Discretization::new(mesh, config.solver)?;
        Ok(Splitter { disc, recovery, case, f, g, config })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.disc.mesh()
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn recovery(&self) -> &Recovery {
        &self.recovery
    }

    pub fn case(&self) -> &ProblemCase {
        &self.case
    }

    pub fn config(&self) -> &SplitConfig {
        &self.config
    }

    /// Nodal right-hand side used by the projection.
    pub fn nodal_f(&self) -> &[f64] {
        &self.f
    }

    /// `u⁰` from the Poisson problem `Δu⁰ = 2√f`, `ω⁰ = −2√f`.
    pub fn initialize(&self) -> Result<SplitState> {
        let mesh = self.mesh();
        let u = fem::poisson_init(mesh, self.disc.poisson(), &self.case)?;
        let omega = self.f.iter().map(|f| -2.0 * f.sqrt()).collect();
        self.state_from(u, omega, 0)
    }

    /// Starts from given nodal values; the boundary is reset to `g`.
    pub fn warm_start(&self, mut u: Vec<f64>) -> Result<SplitState> {
        let mesh = self.mesh();
        if u.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch { expected: mesh.num_vertices(), got: u.len() });
        }
        for v in mesh.boundary_vertices() {
            u[v] = self.g[v];
        }
        let hessian = self.recovery.hessian(mesh, &self.disc.field(u.clone())?)?;
        let omega = (0..mesh.num_vertices()).map(|v| -hessian.get(v).trace()).collect();
        self.state_from(u, omega, 0)
    }

    fn state_from(&self, u: Vec<f64>, omega: Vec<f64>, iteration: usize) -> Result<SplitState> {
        let mesh = self.mesh();
        let u = self.disc.field(u)?;
        let hessian = self.recovery.hessian(mesh, &u)?;
        let p = project_field(mesh, &hessian, &self.f)?;
        Ok(SplitState { u, omega: self.disc.field(omega)?, hessian, p, iteration })
    }

    pub fn step(&self, state: &SplitState) -> Result<SplitState> {
        let mesh = self.mesh();
        state.u.check(mesh)?;
        state.p.check(mesh)?;
        let phi = fem::boundary_phi(mesh, &state.p, &self.case)?;
        let minus_phi: Vec<f64> = phi.iter().map(|v| -v).collect();
        let (u, omega) = mixed_solve(&self.disc, &fem::div_load(mesh, &state.p)?, &minus_phi, &self.g)?;
        self.state_from(u, omega, state.iteration + 1)
    }

    /// `J_h = ½‖D²_h u_h − P_h‖²_{L²}` with the mass-matrix inner product.
    pub fn objective(&self, state: &SplitState) -> f64 {
        objective(&self.disc, &state.hessian, &state.p)
    }

    pub fn run_from(&self, mut state: SplitState) -> Result<(SplitState, SplitReport)> {
        let mut objective = vec![self.objective(&state)];
        let mut distance = vec![(2.0 * objective[0]).sqrt()];
        let mut increments = Vec::new();
        let mut termination = Termination::MaxIterations;
        for _ in 0..self.config.max_iter {
            let next = self.step(&state)?;
            let d = next.u.sub(&state.u)?;
            let inc = self.disc.l2_norm(d.values());
            let j = self.objective(&next);
            objective.push(j);
            distance.push((2.0 * j).sqrt());
            increments.push(inc);
            state = next;
            if inc <= self.config.tol {
                termination = Termination::Converged;
                break;
            }
        }
        let report = SplitReport { iterations: increments.len(), objective, distance, increments, termination };
        Ok((state, report))
    }

    pub fn run(&self) -> Result<(SplitState, SplitReport)> {
        self.run_from(self.initialize()?)
    }
}

fn objective(disc: &Discretization, h: &NodalSym2Field, p: &NodalSym2Field) -> f64 {
    let m = disc.mass();
    let dxx = h.xx.sub(&p.xx).map(|d| d.into_values()).unwrap_or_default();
    let dxy = h.xy.sub(&p.xy).map(|d| d.into_values()).unwrap_or_default();
    let dyy = h.yy.sub(&p.yy).map(|d| d.into_values()).unwrap_or_default();
    let j = 0.5 * (m.bilinear(&dxx, &dxx) + 2.0 * m.bilinear(&dxy, &dxy) + m.bilinear(&dyy, &dyy));
    j.max(0.0)
}

/// Mixed P1 solve: `∫∇ω·∇ψ = load(ψ)` with `ω = omega_bc`, then
/// `∫∇u·∇v = ∫ω v` with `u = g`. Returns `(u, ω)`.
pub fn mixed_solve(disc: &Discretization, load: &[f64], omega_bc: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let omega = disc.poisson().solve(load, omega_bc)?;
    let rhs = disc.mass().matvec(&omega);
    let u = disc.poisson().solve(&rhs, g)?;
    Ok((u, omega))
}

/// Solves `Δ²u = F` with `u` and `Δu` prescribed on the boundary. The
/// returned `ω` approximates `−Δu`.
pub fn solve_biharmonic(disc: &Discretization, case: &BiharmonicCase) -> Result<(NodalField, NodalField)> {
    let mesh = disc.mesh();
    let load = fem::load(mesh, |x| case.bilaplacian(x));
    let on_boundary = |f: &dyn Fn([f64; 2]) -> f64| -> Vec<f64> {
        (0..mesh.num_vertices()).map(|v| if mesh.is_boundary_vertex(v) { f(mesh.vertex(v)) } else { 0.0 }).collect()
    };
    let omega_bc = on_boundary(&|x| -case.laplacian(x));
    let g = on_boundary(&|x| case.u(x));
    let (u, omega) = mixed_solve(disc, &load, &omega_bc, &g)?;
    Ok((disc.field(u)?, disc.field(omega)?))
}

pub fn initialize(mesh: &TriMesh, case: &ProblemCase) -> Result<SplitState> {
    Splitter::new(mesh.clone(), case.clone(), SplitConfig::default())?.initialize()
}

pub fn run(mesh: &TriMesh, case: &ProblemCase, config: &SplitConfig) -> Result<(SplitState, SplitReport)> {
    Splitter::new(mesh.clone(), case.clone(), config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn splitter(n: usize, case: ProblemCase) -> Splitter {
        Splitter::new(TriMesh::structured_unit_square(n).unwrap(), case, SplitConfig::default()).unwrap()
    }

    #[test]
    fn linear_data_gives_linear_start() {
        // f = 0 has no SPD projection, so only the Poisson start is checked.
        let m = TriMesh::structured_unit_square(6).unwrap();
        let case = ProblemCase::affine(0.0, [1.0, -2.0]);
        assert!(Splitter::new(m.clone(), case.clone(), SplitConfig::default()).is_err());
        let d = Discretization::new(m, SolverKind::Cholesky).unwrap();
        let u = fem::poisson_init(d.mesh(), d.poisson(), &case).unwrap();
        let r = Recovery::new(d.mesh(), false, SolverKind::Cholesky).unwrap();
        let h = r.hessian(d.mesh(), &d.field(u).unwrap()).unwrap();
        assert!((0..h.len()).all(|v| h.get(v).norm() < 1e-10));
    }

    #[test]
    fn torsion_start_for_flat_case() {
        let s = splitter(32, ProblemCase::case4());
        let st = s.initialize().unwrap();
        let c = s.mesh().vertices().iter().position(|p| *p == [0.5, 0.5]).unwrap();
        assert!((st.u[c] + 0.1473).abs() < 5e-4, "{}", st.u[c]);
    }

    #[test]
    fn objective_is_zero_on_match_and_quadratic() {
        let s = splitter(8, ProblemCase::case1());
        let mut st = s.initialize().unwrap();
        assert!(s.objective(&st) > 0.0);
        let j = s.objective(&st);
        let diff = st.hessian.sub(&st.p).unwrap();
        st.p = NodalSym2Field::from_values(
            s.mesh(),
            (0..diff.len()).map(|v| st.hessian.get(v).sub(&diff.get(v).scale(2.0))).collect(),
        );
        assert!((s.objective(&st) - 4.0 * j).abs() <= 1e-12 * j);
        st.p = st.hessian.clone();
        assert_eq!(s.objective(&st), 0.0);
    }

    #[test]
    fn step_keeps_boundary_and_lowers_objective() {
        let s = splitter(10, ProblemCase::case1());
        let st0 = s.initialize().unwrap();
        let st1 = s.step(&st0).unwrap();
        for v in s.mesh().boundary_vertices() {
            assert_eq!(st1.u[v], ProblemCase::case1().g(s.mesh().vertex(v)));
        }
        assert!(s.objective(&st1) < s.objective(&st0));
        assert_eq!(st1.iteration, 1);
    }

    #[test]
    fn converged_state_is_a_fixed_point() {
        let m = TriMesh::structured_unit_square(10).unwrap();
        let s = Splitter::new(m, ProblemCase::case2(), SplitConfig { tol: 1e-13, ..SplitConfig::default() }).unwrap();
        let (st, rep) = s.run().unwrap();
        assert!(rep.converged());
        let next = s.step(&st).unwrap();
        let d = next.u.sub(&st.u).unwrap();
        assert!(s.discretization().l2_norm(d.values()) < 1e-10);
        let j0 = rep.objective[0].max(1.0);
        let n = rep.objective.len();
        assert!((rep.objective[n - 1] - rep.objective[n - 2]).abs() <= 1e-8 * j0);
    }

    #[test]
    fn case1_converges_quickly_and_deterministically() {
        let s = splitter(10, ProblemCase::case1());
        let (_, a) = s.run().unwrap();
        let (_, b) = s.run().unwrap();
        assert!(a.converged() && a.iterations <= 60, "{} iterations", a.iterations);
        assert_eq!(a, b);
        assert_eq!(a.objective.len(), a.iterations + 1);
        assert!(a.distance.last().unwrap() < &a.distance[0]);
        let n = a.objective.len();
        assert!((a.objective[n - 1] - a.objective[n - 2]).abs() <= 1e-8 * a.objective[0].max(1.0));
    }

    #[test]
    fn biharmonic_solve_is_accurate() {
        let m = TriMesh::structured_unit_square(20).unwrap();
        let d = Discretization::new(m, SolverKind::Cholesky).unwrap();
        let b = BiharmonicCase;
        let (u, w) = solve_biharmonic(&d, &b).unwrap();
        for v in 0..d.mesh().num_vertices() {
            let x = d.mesh().vertex(v);
            assert!((u[v] - b.u(x)).abs() < 1e-3);
            assert!((w[v] + b.laplacian(x)).abs() < 2e-3);
        }
    }

    #[test]
    fn bad_tolerance_rejected() {
        let cfg = SplitConfig { tol: 0.0, ..SplitConfig::default() };
        assert!(Splitter::new(TriMesh::structured_unit_square(2).unwrap(), ProblemCase::case1(), cfg).is_err());
    }
}
