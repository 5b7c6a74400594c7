use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mals::cases::ProblemCase;
use mals::harness::{self, Artifacts, Regularized, RunOptions};
use mals::linalg::SolverKind;

#[derive(Parser)]
#[command(name = "mals", version, about = "Monge-Ampere least-squares studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single solve; writes the iteration history.
    Solve {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence sweep over structured meshes.
    Converge {
        #[arg(long)]
        case: String,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40, 80])]
        n: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Adaptive loop from the h = 0.1 start mesh.
    Adapt {
        #[arg(long)]
        case: String,
        #[arg(long)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Mixed biharmonic check with Navier data.
    Biharmonic {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40, 80])]
        n: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1e-8)]
    split_tol: f64,
    #[arg(long, default_value_t = 400)]
    max_iter: usize,
    #[arg(long, default_value_t = 40.0)]
    ratio_cap: f64,
    #[arg(long, default_value = "auto")]
    regularized_recovery: Regularized,
    #[arg(long, default_value = "cholesky")]
    solver: SolverKind,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    dump_mesh: bool,
    /// Evaluate the H⁻¹ surrogate after uniform refinement.
    #[arg(long)]
    hm1_refined: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            split_tol: self.split_tol,
            max_iter: self.max_iter,
            ratio_cap: self.ratio_cap,
            regularized: self.regularized_recovery,
            solver: self.solver,
            hm1_refined: self.hm1_refined,
            dump_mesh: self.dump_mesh,
        }
    }
}

fn run(cli: Cli) -> mals::Result<(Artifacts, PathBuf, String)> {
    match cli.command {
        Command::Solve { case, n, common } => {
            let r = harness::run_solve(&ProblemCase::by_name(&case)?, n, &common.options())?;
            let summary = format!(
                "{case}: n = {n}, {} iterations, {}",
                r.report.iterations,
                if r.report.converged() { "converged" } else { "iteration cap reached" }
            );
            Ok((r.artifacts, common.out, summary))
        }
        Command::Converge { case, n, common } => {
            let r = harness::run_convergence(&ProblemCase::by_name(&case)?, &n, &common.options())?;
            let slopes: Vec<String> = r.table.slopes.iter().map(|(c, s)| format!("{c} {s:.3}")).collect();
            Ok((r.artifacts, common.out, format!("{case}: slopes {}", slopes.join(", "))))
        }
        Command::Adapt { case, tol, common } => {
            let r = harness::run_adapt(&ProblemCase::by_name(&case)?, tol, &common.options())?;
            let last = r.report.rounds.last().expect("at least one round");
            let summary = format!(
                "{case}: {} rounds, {} vertices, eta/|grad u| = {:.4}, tolerance {}",
                r.report.rounds.len(),
                last.vertices,
                last.relative(),
                if r.report.satisfied { "met" } else { "not met" }
            );
            Ok((r.artifacts, common.out, summary))
        }
        Command::Biharmonic { n, common } => {
            let r = harness::run_biharmonic(&n, common.solver)?;
            let slopes: Vec<String> = r.table.slopes.iter().map(|(c, s)| format!("{c} {s:.3}")).collect();
            Ok((r.artifacts, common.out, format!("biharmonic: slopes {}", slopes.join(", "))))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli).and_then(|(artifacts, out, summary)| artifacts.write_to(&out).map(|_| summary)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if harness::is_usage_error(&e) { 2 } else { 3 })
        }
    }
}
