//! Command-line front end: configuration files, run directories and the
//! `solve`, `subproblem`, `stationarity`, `verify-taylor` and
//! `check-gradient` commands.
//!
//! Every command returns a process exit code: 0 on success, 1 for invalid
//! input and 2 for numerical or solver failures.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{load_config, parse_config, parse_config_in, InitialControl, RunConfig, TargetSource};
pub use output::{write_atomic, JsonlWriter};

use crate::control::ControlField;
use crate::error::{Result, SlipError};
use crate::geometry::{default_dictionary, stationarity_residual, CellInterpolant, CheckRow, Fixture};
use crate::grid::GridSpec;
use crate::objective::{check_gradient, Problem, SmoothObjective};
use crate::pde::{PdeSetup, ScalarField};
use crate::slip::{run_observed, IterationRecord, Observer, SlipTrace};
use crate::subproblem::{solve_bnb, solve_exhaustive, BnbOptions, TRInstance};

#[derive(Debug, Parser)]
#[command(name = "slip", version, about = "Trust-region solver for TV-regularized integer control problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the trust-region method on a configured problem.
    Solve(SolveArgs),
    /// Solve one trust-region subproblem from an instance file.
    Subproblem(SubproblemArgs),
    /// Report the stationarity residual of a control as JSON.
    Stationarity(StationarityArgs),
    /// Run the local-variation verification suite for a fixture.
    VerifyTaylor(VerifyTaylorArgs),
    /// Compare the adjoint gradient with finite differences.
    CheckGradient(CheckGradientArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory; created if missing.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Bnb,
    Exhaustive,
}

#[derive(Debug, Clone, Args)]
pub struct SubproblemArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "bnb")]
    pub solver: SolverKind,
}

#[derive(Debug, Clone, Args)]
pub struct StationarityArgs {
    /// Control CSV on the configured control grid.
    #[arg(long)]
    pub control: PathBuf,
    /// Problem configuration (same format as for `solve`).
    #[arg(long)]
    pub problem: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    Disk,
    Stripes,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyTaylorArgs {
    #[arg(long, value_enum)]
    pub fixture: FixtureKind,
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CheckGradientArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Control grid size per side, overriding the configuration.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
}

/// Dispatches a parsed command line and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Subproblem(a) => run_subproblem(a),
        Command::Stationarity(a) => run_stationarity(a),
        Command::VerifyTaylor(a) => run_verify_taylor(a),
        Command::CheckGradient(a) => run_check_gradient(a),
    }
}

fn report(result: Result<i32>) -> i32 {
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

pub fn run_solve(args: &SolveArgs) -> i32 {
    report(solve(&args.config, &args.out).map(|trace| {
        println!(
            "{}: {} accepted iterations, J = {:.6e} (F = {:.6e}, TV = {:.6e})",
            trace.termination.as_str(),
            trace.iterates.len(),
            trace.final_j,
            trace.final_f,
            trace.final_tv
        );
        0
    }))
}

pub fn run_subproblem(args: &SubproblemArgs) -> i32 {
    report((|| {
        let text = std::fs::read_to_string(&args.instance).map_err(|e| SlipError::io(&args.instance, e))?;
        let inst = TRInstance::from_text(&text)?;
        let sol = match args.solver {
            SolverKind::Bnb => solve_bnb(&inst, &BnbOptions::from_env())?,
            SolverKind::Exhaustive => solve_exhaustive(&inst)?,
        };
        println!("objective = {:.12e}", sol.objective);
        print!("{}", sol.v_opt.to_csv_string());
        Ok(0)
    })())
}

pub fn run_stationarity(args: &StationarityArgs) -> i32 {
    report((|| {
        let cfg = load_config(&args.problem)?;
        let problem = build_problem(&cfg)?;
        let text = std::fs::read_to_string(&args.control).map_err(|e| SlipError::io(&args.control, e))?;
        let v = ControlField::from_csv_str(&text, &cfg.labels)?;
        let g = CellInterpolant::from_gradient(&problem.gradient(&v)?);
        let report = stationarity_residual(&v, &|p| g.eval(p), cfg.alpha, &default_dictionary(&v));
        println!("{}", to_json(&report)?);
        Ok(0)
    })())
}

pub fn run_verify_taylor(args: &VerifyTaylorArgs) -> i32 {
    report((|| {
        let fixture = match args.fixture {
            FixtureKind::Disk => Fixture::Disk,
            FixtureKind::Stripes => Fixture::Stripes,
        };
        let rows = fixture.run(args.resolution)?;
        print!("{}", format_table(&rows));
        Ok(if rows.iter().all(|r| r.pass) { 0 } else { 2 })
    })())
}

pub fn run_check_gradient(args: &CheckGradientArgs) -> i32 {
    report((|| {
        let cfg = load_config(&args.config)?;
        let mut problem = build_problem(&cfg)?;
        if let Some(n) = args.grid {
            // The target stays the one of the configured problem.
            let pde = PdeSetup::new(cfg.eps, cfg.velocity, cfg.state_grid)?;
            problem = Problem::new(&pde, GridSpec::unit(n, n)?, problem.target().clone(), cfg.alpha)?;
        }
        let check = check_gradient(&problem, &cfg.labels, args.samples, &[1e-3, 1e-4, 1e-5], cfg.seed)?;
        println!("max relative FD error = {:.3e}", check.max_relative_error);
        Ok(if check.max_relative_error <= 1e-6 { 0 } else { 2 })
    })())
}

/// Plain-text table of verification rows.
pub fn format_table(rows: &[CheckRow]) -> String {
    let mut out = format!(
        "{:<34} {:>14} {:>14} {:>11} {:>10}  {}\n",
        "check", "measured", "reference", "error", "tolerance", "result"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<34} {:>14.6e} {:>14.6e} {:>11.3e} {:>10.2e}  {}\n",
            r.check,
            r.measured,
            r.reference,
            r.error,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| SlipError::parse("json output", e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| SlipError::io(path, e))
}

/// Assembles the PDE and the tracking target of a configuration.
pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let pde = PdeSetup::new(cfg.eps, cfg.velocity, cfg.state_grid)?;
    match &cfg.target {
        TargetSource::ReferenceControl(path) => {
            let w = ControlField::from_csv_str(&read(path)?, &cfg.labels)?;
            if w.grid() != &cfg.control_grid {
                return Err(SlipError::Usage(format!(
                    "{}: reference control grid does not match grid.nx x grid.ny",
                    path.display()
                )));
            }
            Problem::with_reference(&pde, &w, cfg.alpha)
        }
        TargetSource::File(path) => {
            let y_d = ScalarField::from_csv_str(&read(path)?)?;
            Problem::new(&pde, cfg.control_grid, y_d, cfg.alpha)
        }
    }
}

/// The configured starting control.
pub fn initial_control(cfg: &RunConfig) -> Result<ControlField> {
    match &cfg.initial {
        InitialControl::Constant(v) => ControlField::constant(cfg.control_grid, cfg.labels.clone(), *v),
        InitialControl::File(path) => {
            let v = ControlField::from_csv_str(&read(path)?, &cfg.labels)?;
            if v.grid() != &cfg.control_grid {
                return Err(SlipError::Usage(format!("{}: initial control grid mismatch", path.display())));
            }
            Ok(v)
        }
    }
}

struct RunDirectory<'a> {
    dir: &'a Path,
    log: JsonlWriter,
    accepted: usize,
}

impl Observer for RunDirectory<'_> {
    fn on_record(&mut self, record: &IterationRecord, accepted: Option<&ControlField>) -> Result<()> {
        self.log.append(record)?;
        if let Some(v) = accepted {
            self.accepted += 1;
            let name = format!("control_{:04}.csv", self.accepted);
            write_atomic(&self.dir.join(name), v.to_csv_string().as_bytes())?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    termination: &'a str,
    outer_iterations: usize,
    accepted_iterations: usize,
    inner_iterations: usize,
    initial_j: f64,
    final_j: f64,
    final_f: f64,
    final_tv: f64,
    seed: u64,
    timing: Timing,
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
}

/// Runs a configured problem and writes the run directory:
/// `config.cfg`, `iterations.jsonl`, `control_%04d.csv` (0 is the initial
/// control), `state_final.csv`, `summary.json` and PGM images.
pub fn solve(config: &Path, out: &Path) -> Result<SlipTrace> {
    let start = Instant::now();
    let cfg = load_config(config)?;
    let problem = build_problem(&cfg)?;
    let v0 = initial_control(&cfg)?;
    std::fs::create_dir_all(out).map_err(|e| SlipError::io(out, e))?;
    write_atomic(&out.join("config.cfg"), cfg.source.as_bytes())?;
    write_atomic(&out.join("control_0000.csv"), v0.to_csv_string().as_bytes())?;
    write_atomic(&out.join("target.pgm"), problem.target().to_pgm_string().as_bytes())?;

    let mut dir = RunDirectory {
        dir: out,
        log: JsonlWriter::create(&out.join("iterations.jsonl"))?,
        accepted: 0,
    };
    let bnb = BnbOptions::from_env();
    let trace = run_observed(&problem, cfg.alpha, &v0, &cfg.slip, &bnb, &mut dir)?;
    dir.log.finish()?;

    let state = problem.state(&trace.final_control)?;
    write_atomic(&out.join("state_final.csv"), state.to_csv_string().as_bytes())?;
    write_atomic(&out.join("state_final.pgm"), state.to_pgm_string().as_bytes())?;
    write_atomic(&out.join("control_final.pgm"), trace.final_control.to_pgm_string().as_bytes())?;
    let summary = Summary {
        termination: trace.termination.as_str(),
        outer_iterations: trace.records.last().map_or(0, |r| r.outer),
        accepted_iterations: trace.iterates.len(),
        inner_iterations: trace.records.len(),
        initial_j: trace.initial_j,
        final_j: trace.final_j,
        final_f: trace.final_f,
        final_tv: trace.final_tv,
        seed: cfg.seed,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    };
    write_atomic(&out.join("summary.json"), (to_json(&summary)? + "\n").as_bytes())?;
    Ok(trace)
}
