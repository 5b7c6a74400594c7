//! Tolerance-driven adaptive loop.
//!
//! Each round solves to the splitting tolerance, evaluates `η̂_K`, and
//! refines or coarsens so that `0.75 TOL ≤ η̂ / ‖∇u_h‖ ≤ 1.25 TOL`.

use std::collections::BTreeSet;

use crate::cases::ProblemCase;
use crate::error::{Error, Result};
use crate::estimators::{effectivity, error_norms, eta_hat_k, ElementIndicator, ErrorNorms};
use crate::fem::grad_norm;
use crate::mesh::{MarkSet, TriMesh};
use crate::splitting::{SplitConfig, SplitState, Splitter};

pub const LOWER: f64 = 0.75;
pub const UPPER: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    pub tol: f64,
    pub max_rounds: usize,
    /// Largest admissible `h_max / h_min`.
    pub ratio_cap: f64,
    pub split: SplitConfig,
}

impl AdaptConfig {
    pub fn new(tol: f64) -> Self {
        AdaptConfig {
            tol,
            max_rounds: 30,
            ratio_cap: 40.0,
            split: SplitConfig { regularized: true, ..SplitConfig::default() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("TOL must be positive, got {}", self.tol)));
        }
        if !(self.ratio_cap >= 1.0) {
            return Err(Error::InvalidParameter(format!("ratio cap must be at least 1, got {}", self.ratio_cap)));
        }
        self.split.validate()
    }
}

/// Structured `h = 0.1` start for adaptive runs: five cells per side,
/// bisected twice, so coarsening can go back to the five-cell root.
pub fn initial_mesh() -> Result<TriMesh> {
    TriMesh::structured_unit_square(5)?.refine_uniform(2)
}

/// Elements with `η̂_K² > 1.25² TOL² ‖∇u_h‖² / N_K` are refined, those below
/// the `0.75²` bound coarsened.
pub fn mark(mesh: &TriMesh, ind: &ElementIndicator, tol: f64, grad_norm: f64) -> Result<MarkSet> {
    if ind.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), got: ind.len() });
    }
    if !(grad_norm > 0.0) {
        return Err(Error::ZeroDenominator("gradient norm"));
    }
    let base = tol * tol * grad_norm * grad_norm / mesh.num_triangles() as f64;
    let (hi, lo) = (UPPER * UPPER * base, LOWER * LOWER * base);
    let mut marks = MarkSet::default();
    for (k, &v) in ind.values.iter().enumerate() {
        let e2 = v * v;
        if e2 > hi {
            marks.refine.insert(k);
        } else if e2 < lo {
            marks.coarsen.insert(k);
        }
    }
    Ok(marks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub h_max: f64,
    pub h_min: f64,
    pub eta_hat: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub errors: Option<ErrorNorms>,
    pub effectivity: Option<f64>,
    pub refine_marked: usize,
    pub coarsen_marked: usize,
    /// Refinement marks withdrawn because of the ratio guard.
    pub guard_dropped: usize,
}

impl RoundReport {
    pub fn relative(&self) -> f64 {
        self.eta_hat / self.grad_norm
    }
}

#[derive(Debug, Clone)]
pub struct AdaptReport {
    pub rounds: Vec<RoundReport>,
    /// Whether the last round satisfied the tolerance band.
    pub satisfied: bool,
    pub mesh: TriMesh,
    pub state: SplitState,
}

fn within_band(rel: f64, tol: f64) -> bool {
    (LOWER * tol..=UPPER * tol).contains(&rel)
}

/// Applies `marks`, withdrawing refinement of the smallest marked elements
/// while the ratio guard objects. Returns the new mesh and the number of
/// withdrawn marks.
fn adapt_mesh(mesh: &TriMesh, mut marks: MarkSet, cap: f64) -> Result<(TriMesh, usize)> {
    let mut dropped = 0;
    loop {
        match mesh.refine(&marks, Some(cap)) {
            Ok(m) => return Ok((m, dropped)),
            Err(Error::RatioGuard { .. }) if !marks.refine.is_empty() => {
                let hmin = marks.refine.iter().map(|&k| mesh.diameter(k)).fold(f64::INFINITY, f64::min);
                let smallest: BTreeSet<usize> =
                    marks.refine.iter().copied().filter(|&k| mesh.diameter(k) <= hmin * (1.0 + 1e-9)).collect();
                dropped += smallest.len();
                marks.refine.retain(|k| !smallest.contains(k));
            }
            Err(Error::RatioGuard { .. }) if !marks.coarsen.is_empty() => {
                marks.coarsen.clear();
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn adapt_loop(initial: &TriMesh, case: &ProblemCase, config: &AdaptConfig) -> Result<AdaptReport> {
    adapt_loop_with(initial, case, config, |_, _, _| {})
}

/// As [`adapt_loop`], calling `observe` with each round's mesh, indicator
/// and report (marks included) before the mesh changes.
pub fn adapt_loop_with(
    initial: &TriMesh,
    case: &ProblemCase,
    config: &AdaptConfig,
    mut observe: impl FnMut(&TriMesh, &ElementIndicator, &RoundReport),
) -> Result<AdaptReport> {
    config.validate()?;
    let mut mesh = initial.clone();
    let mut previous: Option<(TriMesh, Vec<f64>)> = None;
    let mut rounds = Vec::new();
    for round in 0..config.max_rounds.max(1) {
        let splitter = Splitter::new(mesh.clone(), case.clone(), config.split.clone())?;
        let start = match &previous {
            Some((old, u)) => splitter.warm_start(old.transfer(u, &mesh)?)?,
            None => splitter.initialize()?,
        };
        let (state, split) = splitter.run_from(start)?;
        let ind = eta_hat_k(&mesh, &state.omega, &state.u)?;
        let gn = grad_norm(&mesh, state.u.values())?;
        let (h_max, h_min) = mesh.mesh_size();
        let errors = error_norms(&mesh, &state.u, &state.omega, &state.hessian, case)?;
        let eff = if case.has_exact() { effectivity(&mesh, &state.u, &state.omega, case).ok() } else { None };
        let mut report = RoundReport {
            round,
            vertices: mesh.num_vertices(),
            triangles: mesh.num_triangles(),
            h_max,
            h_min,
            eta_hat: ind.global(),
            grad_norm: gn,
            iterations: split.iterations,
            converged: split.converged(),
            errors,
            effectivity: eff,
            refine_marked: 0,
            coarsen_marked: 0,
            guard_dropped: 0,
        };
        let satisfied = within_band(report.relative(), config.tol);
        let last = round + 1 == config.max_rounds.max(1);
        if satisfied || last {
            observe(&mesh, &ind, &report);
            rounds.push(report);
            return Ok(AdaptReport { rounds, satisfied, mesh, state });
        }
        let marks = mark(&mesh, &ind, config.tol, gn)?;
        report.refine_marked = marks.refine.len();
        report.coarsen_marked = marks.coarsen.len();
        let (next, dropped) = adapt_mesh(&mesh, marks, config.ratio_cap)?;
        report.guard_dropped = dropped;
        observe(&mesh, &ind, &report);
        rounds.push(report);
        if next.num_triangles() == mesh.num_triangles() && next.vertices() == mesh.vertices() {
            return Ok(AdaptReport { rounds, satisfied: false, mesh, state });
        }
        previous = Some((mesh, state.u.into_values()));
        mesh = next;
    }
    unreachable!("the last round returns")
}
