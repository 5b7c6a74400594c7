//! Study drivers behind the `mals` command line: single solves, convergence
//! sweeps, adaptive runs and the biharmonic check.
//!
//! Every runner returns its numbers together with the [`Artifacts`] it
//! would write, so callers decide where (and whether) they land on disk.

pub mod svg;
pub mod table;

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

pub use self::svg::{Plot, Series};
pub use self::table::{fit_slope, Cell, Table};

use crate::adaptivity::{adapt_loop_with, initial_mesh, AdaptConfig, AdaptReport};
use crate::cases::{BiharmonicCase, ProblemCase};
use crate::error::{Error, Result};
use crate::estimators::{biharmonic_errors, eta_hat_k, omega_hminus1_error, BiharmonicErrors, ErrorNorms};
use crate::fem::{point_value, Discretization};
use crate::linalg::SolverKind;
use crate::mesh::{write_mesh, TriMesh};
use crate::projection::Sym2;
use crate::splitting::{solve_biharmonic, SplitConfig, SplitReport, SplitState, Splitter};

/// Abscissae of the `det(D²_h u_h)` cross-section on `x₂ = 0.5`.
pub const SECTION_X: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularized {
    /// On for adaptive runs, off otherwise.
    #[default]
    Auto,
    On,
    Off,
}

impl FromStr for Regularized {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Regularized::Auto),
            "on" => Ok(Regularized::On),
            "off" => Ok(Regularized::Off),
            other => Err(format!("unknown recovery mode `{other}` (expected auto, on or off)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub split_tol: f64,
    pub max_iter: usize,
    pub ratio_cap: f64,
    pub regularized: Regularized,
    pub solver: SolverKind,
    pub hm1_refined: bool,
    pub dump_mesh: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            split_tol: 1e-8,
            max_iter: 400,
            ratio_cap: 40.0,
            regularized: Regularized::Auto,
            solver: SolverKind::Cholesky,
            hm1_refined: false,
            dump_mesh: false,
        }
    }
}

impl RunOptions {
    pub fn split_config(&self, adaptive: bool) -> SplitConfig {
        let regularized = match self.regularized {
            Regularized::Auto => adaptive,
            Regularized::On => true,
            Regularized::Off => false,
        };
        SplitConfig { tol: self.split_tol, max_iter: self.max_iter, regularized, solver: self.solver }
    }
}

/// Files produced by a run, as `(file name, contents)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn push(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// File-name stem for a case name (`case3:sqrt2` becomes `case3_sqrt2`).
pub fn file_stem(case: &str) -> String {
    case.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Whether an error stems from user input rather than the numerics.
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownCase(_) | Error::InvalidParameter(_) | Error::BadSlopeInput | Error::ArcLengthOutOfRange { .. }
    )
}

/// Recovered-Hessian determinant at `x`, interpolated componentwise.
pub fn det_at(mesh: &TriMesh, hessian: &crate::fem::NodalSym2Field, x: [f64; 2]) -> Option<f64> {
    let a11 = point_value(mesh, hessian.xx.values(), x)?;
    let a12 = point_value(mesh, hessian.xy.values(), x)?;
    let a22 = point_value(mesh, hessian.yy.values(), x)?;
    Some(Sym2::new(a11, a12, a22).det())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h_max: f64,
    pub n_v: usize,
    pub errors: Option<ErrorNorms>,
    pub err_hm1: Option<f64>,
    pub eta_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖D²_h u_h − P_h‖_{L²}` at the last iterate.
    pub distance: f64,
    pub u_center: Option<f64>,
    pub det_section: [Option<f64>; 3],
    pub wall_time: f64,
}

/// Solves on the structured `n × n` mesh and evaluates every diagnostic.
pub fn convergence_row(case: &ProblemCase, n: usize, opts: &RunOptions) -> Result<ConvergenceRow> {
    let start = Instant::now();
    let mesh = TriMesh::structured_unit_square(n)?;
    let splitter = Splitter::new(mesh, case.clone(), opts.split_config(false))?;
    let (state, report) = splitter.run()?;
    let mesh = splitter.mesh();
    let errors = crate::estimators::error_norms(mesh, &state.u, &state.omega, &state.hessian, case)?;
    let err_hm1 = omega_hminus1_error(mesh, &state.omega, case, opts.hm1_refined)?;
    let eta_hat = eta_hat_k(mesh, &state.omega, &state.u)?.global();
    let det_section = SECTION_X.map(|x| det_at(mesh, &state.hessian, [x, 0.5]));
    Ok(ConvergenceRow {
        n,
        h_max: mesh.mesh_size().0,
        n_v: mesh.num_vertices(),
        errors,
        err_hm1,
        eta_hat,
        iterations: report.iterations,
        converged: report.converged(),
        distance: report.distance.last().copied().unwrap_or(f64::NAN),
        u_center: point_value(mesh, state.u.values(), [0.5, 0.5]),
        det_section,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub const CONVERGENCE_COLUMNS: [&str; 17] = [
    "n",
    "h_max",
    "n_v",
    "err_l2",
    "err_h1",
    "err_h2",
    "err_omega_l2",
    "err_hm1",
    "eta_hat",
    "iterations",
    "converged",
    "distance",
    "u_center",
    "det_x0.3",
    "det_x0.5",
    "det_x0.7",
    "effectivity",
];

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t = Table::new(&CONVERGENCE_COLUMNS);
    for r in rows {
        let e = r.errors;
        t.push(vec![
            r.n.into(),
            r.h_max.into(),
            r.n_v.into(),
            e.map(|e| e.l2).into(),
            e.map(|e| e.h1).into(),
            e.map(|e| e.h2).into(),
            e.map(|e| e.omega_l2).into(),
            r.err_hm1.into(),
            r.eta_hat.into(),
            r.iterations.into(),
            r.converged.into(),
            r.distance.into(),
            r.u_center.into(),
            r.det_section[0].into(),
            r.det_section[1].into(),
            r.det_section[2].into(),
            e.map(|e| r.eta_hat / e.h1).into(),
        ]);
    }
    if rows.len() >= 2 {
        t.add_slopes("h_max", &["err_l2", "err_h1", "err_h2", "err_omega_l2", "err_hm1", "eta_hat", "distance"]);
    }
    t
}

fn log_plot(title: &str, x_label: &str, table: &Table, x: &str, columns: &[&str], slopes: &[f64]) -> Plot {
    let xs = table.column(x);
    let series = columns
        .iter()
        .map(|&c| Series {
            name: c.to_string(),
            points: xs.iter().zip(table.column(c)).filter_map(|(a, b)| Some(((*a)?, b?))).collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    Plot {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: "value".to_string(),
        log_x: true,
        series,
        reference_slopes: slopes.to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub rows: Vec<ConvergenceRow>,
    pub table: Table,
    pub artifacts: Artifacts,
}

/// Sweeps the structured ladder `ns`. Levels run in parallel; rows come
/// back in input order. Wall times go to a separate `_timing.csv` so the
/// main CSV stays reproducible.
pub fn run_convergence(case: &ProblemCase, ns: &[usize], opts: &RunOptions) -> Result<ConvergenceRun> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::InvalidParameter("mesh ladder needs positive subdivision counts".into()));
    }
    let rows = ns.par_iter().map(|&n| convergence_row(case, n, opts)).collect::<Result<Vec<_>>>()?;
    let table = convergence_table(&rows);
    let stem = file_stem(case.name());
    let mut artifacts = Artifacts::default();
    artifacts.push(format!("{stem}.csv"), table.to_csv());
    let mut timing = Table::new(&["n", "wall_time"]);
    for r in &rows {
        timing.push(vec![r.n.into(), r.wall_time.into()]);
    }
    artifacts.push(format!("{stem}_timing.csv"), timing.to_csv());
    let columns: &[&str] = if case.has_exact() {
        &["err_l2", "err_h1", "err_h2", "err_omega_l2", "err_hm1", "eta_hat"]
    } else {
        &["distance", "eta_hat"]
    };
    let plot = log_plot(&format!("{} convergence", case.name()), "h_max", &table, "h_max", columns, &[1.0, 2.0]);
    artifacts.push(format!("{stem}.svg"), plot.to_svg());
    Ok(ConvergenceRun { rows, table, artifacts })
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub state: SplitState,
    pub report: SplitReport,
    pub mesh: TriMesh,
    pub table: Table,
    pub artifacts: Artifacts,
}

/// One solve on the `n × n` mesh; the CSV holds the iteration history.
pub fn run_solve(case: &ProblemCase, n: usize, opts: &RunOptions) -> Result<SolveRun> {
    let mesh = TriMesh::structured_unit_square(n)?;
    let splitter = Splitter::new(mesh, case.clone(), opts.split_config(false))?;
    let (state, report) = splitter.run()?;
    let mut table = Table::new(&["iteration", "objective", "distance", "increment"]);
    for i in 0..=report.iterations {
        table.push(vec![
            i.into(),
            report.objective.get(i).copied().into(),
            report.distance.get(i).copied().into(),
            i.checked_sub(1).and_then(|j| report.increments.get(j).copied()).into(),
        ]);
    }
    let stem = file_stem(case.name());
    let mut artifacts = Artifacts::default();
    artifacts.push(format!("{stem}.csv"), table.to_csv());
    let mut plot = log_plot(
        &format!("{} iterations", case.name()),
        "iteration",
        &table,
        "iteration",
        &["distance", "increment"],
        &[],
    );
    plot.log_x = false;
    artifacts.push(format!("{stem}.svg"), plot.to_svg());
    let mesh = splitter.mesh().clone();
    if opts.dump_mesh {
        artifacts.push(format!("{stem}_mesh.txt"), write_mesh(&mesh));
    }
    Ok(SolveRun { state, report, mesh, table, artifacts })
}

pub const ROUND_COLUMNS: [&str; 16] = [
    "round",
    "n_v",
    "n_t",
    "h_max",
    "h_min",
    "ratio",
    "eta_hat",
    "grad_norm",
    "relative",
    "iterations",
    "converged",
    "err_h1",
    "effectivity",
    "refine_marked",
    "coarsen_marked",
    "guard_dropped",
];

#[derive(Debug, Clone)]
pub struct AdaptRun {
    pub report: AdaptReport,
    pub table: Table,
    pub artifacts: Artifacts,
}

/// Adaptive loop from [`initial_mesh`]. Writes a round summary, one
/// per-element CSV per round and the final mesh.
pub fn run_adapt(case: &ProblemCase, tol: f64, opts: &RunOptions) -> Result<AdaptRun> {
    let config =
        AdaptConfig { tol, ratio_cap: opts.ratio_cap, split: opts.split_config(true), ..AdaptConfig::new(tol) };
    let stem = file_stem(case.name());
    let mut artifacts = Artifacts::default();
    let report = adapt_loop_with(&initial_mesh()?, case, &config, |mesh, ind, round| {
        let mut t = Table::new(&["triangle", "cx", "cy", "diameter", "area", "eta_hat_k"]);
        for (k, &eta) in ind.values.iter().enumerate() {
            let c = mesh.centroid(k);
            t.push(vec![k.into(), c[0].into(), c[1].into(), mesh.diameter(k).into(), mesh.area(k).into(), eta.into()]);
        }
        artifacts.push(format!("{stem}_round{}.csv", round.round), t.to_csv());
    })?;
    let mut table = Table::new(&ROUND_COLUMNS);
    for r in &report.rounds {
        table.push(vec![
            r.round.into(),
            r.vertices.into(),
            r.triangles.into(),
            r.h_max.into(),
            r.h_min.into(),
            (r.h_max / r.h_min).into(),
            r.eta_hat.into(),
            r.grad_norm.into(),
            r.relative().into(),
            r.iterations.into(),
            r.converged.into(),
            r.errors.map(|e| e.h1).into(),
            r.effectivity.into(),
            r.refine_marked.into(),
            r.coarsen_marked.into(),
            r.guard_dropped.into(),
        ]);
    }
    artifacts.files.insert(0, (format!("{stem}.csv"), table.to_csv()));
    let plot = log_plot(
        &format!("{} adaptive, TOL {tol}", case.name()),
        "vertices",
        &table,
        "n_v",
        &["eta_hat", "err_h1"],
        &[],
    );
    artifacts.push(format!("{stem}.svg"), plot.to_svg());
    artifacts.push(format!("{stem}_mesh.txt"), write_mesh(&report.mesh));
    Ok(AdaptRun { report, table, artifacts })
}

#[derive(Debug, Clone)]
pub struct BiharmonicRun {
    pub rows: Vec<(usize, f64, BiharmonicErrors)>,
    pub table: Table,
    pub artifacts: Artifacts,
}

pub fn run_biharmonic(ns: &[usize], solver: SolverKind) -> Result<BiharmonicRun> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::InvalidParameter("mesh ladder needs positive subdivision counts".into()));
    }
    let case = BiharmonicCase;
    let rows = ns
        .par_iter()
        .map(|&n| {
            let disc = Discretization::new(TriMesh::structured_unit_square(n)?, solver)?;
            let (u, omega) = solve_biharmonic(&disc, &case)?;
            let e = biharmonic_errors(disc.mesh(), &u, &omega, &case)?;
            Ok((n, disc.mesh().mesh_size().0, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let columns = ["n", "h_max", "u_l2", "u_h1", "omega_l2", "omega_h1"];
    let mut table = Table::new(&columns);
    for &(n, h, e) in &rows {
        table.push(vec![n.into(), h.into(), e.u_l2.into(), e.u_h1.into(), e.omega_l2.into(), e.omega_h1.into()]);
    }
    if rows.len() >= 2 {
        table.add_slopes("h_max", &columns[2..]);
    }
    let mut artifacts = Artifacts::default();
    artifacts.push("biharm.csv", table.to_csv());
    artifacts.push("biharm.svg", log_plot("biharmonic", "h_max", &table, "h_max", &columns[2..], &[1.0, 2.0]).to_svg());
    Ok(BiharmonicRun { rows, table, artifacts })
}
