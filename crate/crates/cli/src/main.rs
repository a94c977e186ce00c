//! `gateopt`: optimize, evaluate and verify from the command line.
//!
//! Exit codes: 0 success, 1 configuration, I/O or numerical error,
//! 2 monotonicity fault during optimization (or a failed verify battery).

mod config;
mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use files::{
    read_pulse, write_json, write_populations, write_pulse, write_text, ConvergenceLog,
    CONVERGENCE_FILE, POPULATIONS_FILE, PULSE_FILE, RESOLVED_CONFIG_FILE,
};
use gateopt::functionals::f_avg;
use gateopt::krotov::{optimize_with, Optimizer, Status};
use gateopt::lindblad::Propagator;
use gateopt::operator::matrix_unit;
use gateopt::verify::{is_complete_totally_rotating, reference_pair, theorem_battery};
use gateopt::DensityMatrix;

#[derive(Parser)]
#[command(name = "gateopt", version, about = "Krotov gate optimization for open quantum systems")]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the pulse described by a run configuration.
    Optimize(RunArgs),
    /// Gate error and population dynamics of a pulse (the configured guess by default).
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Pulse file in the format written by `optimize`.
        #[arg(long)]
        pulse: Option<PathBuf>,
    },
    /// Check the unitarity criteria on random channels at d = 2, 3, 4.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random channels per dimension.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Also write `verify.json` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    File(#[from] files::FileError),
    #[error(transparent)]
    Numeric(#[from] gateopt::Error),
    #[error("cannot create {path}: {source}")]
    OutDir {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        eprintln!("error: {e}");
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(run) => cmd_optimize(&run, cli.quiet),
        Command::Evaluate { run, pulse } => cmd_evaluate(&run, pulse.as_deref(), cli.quiet),
        Command::Verify { seed, samples, out } => cmd_verify(seed, samples, out.as_deref()),
    };
    result.unwrap_or_else(ExitCode::from)
}

/// Loads and resolves the config; nothing is written before this succeeds.
fn prepare(run: &RunArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&run.config)?;
    let out = run.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    Ok((cfg, out))
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::OutDir {
        path: out.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    command: &'static str,
    status: &'static str,
    fault_iteration: Option<usize>,
    iterations: usize,
    j_t_initial: f64,
    j_t_final: f64,
    j_total_final: f64,
    gate_error_initial: Option<f64>,
    gate_error_final: Option<f64>,
    n_propagations: usize,
    n_fidelity_propagations: usize,
    wall_time_seconds: f64,
    config: &'a RunConfig,
}

fn cmd_optimize(run: &RunArgs, quiet: bool) -> Result<ExitCode, CliError> {
    let (cfg, out) = prepare(run)?;
    let built = cfg.build_model()?;
    let labels = built.control_labels.clone();
    let grid = cfg.time_grid()?;
    let guess = cfg.guess_pulse(grid, built.model.n_controls())?;
    let problem = cfg.problem(built, guess)?;
    problem.validate()?;

    create_dir(&out)?;
    write_text(&out.join(RESOLVED_CONFIG_FILE), &cfg.to_toml())?;
    let mut log = ConvergenceLog::create(&out.join(CONVERGENCE_FILE))?;
    let mut log_error = None;
    let result = optimize_with(&problem, |rec| {
        if !quiet {
            let ge = rec.gate_error.map(|g| format!("  gate error {g:.4e}")).unwrap_or_default();
            eprintln!(
                "iter {:>5}  J_T {:.6e}  J {:.6e}{ge}  ({:.1} s)",
                rec.iteration, rec.j_t, rec.j_total, rec.wall_time
            );
        }
        if let Err(e) = log.push(rec) {
            log_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.into());
    }
    write_pulse(&out.join(PULSE_FILE), &result.final_pulse, &labels)?;

    // a faulting iteration is logged but its pulse is discarded
    let accepted = match result.status {
        Status::MonotonicityFault { .. } => &result.trace[result.trace.len() - 2],
        _ => result.last(),
    };
    let (status, fault_iteration) = match result.status {
        Status::Converged => ("converged", None),
        Status::MaxIter => ("max_iter", None),
        Status::MonotonicityFault { iteration } => ("monotonicity_fault", Some(iteration)),
    };
    let summary = OptimizeSummary {
        command: "optimize",
        status,
        fault_iteration,
        iterations: accepted.iteration,
        j_t_initial: result.trace[0].j_t,
        j_t_final: accepted.j_t,
        j_total_final: accepted.j_total,
        gate_error_initial: result.trace[0].gate_error,
        gate_error_final: result.trace[..=accepted.iteration]
            .iter()
            .rev()
            .find_map(|r| r.gate_error),
        n_propagations: result.last().n_propagations,
        n_fidelity_propagations: result.n_fidelity_propagations,
        wall_time_seconds: result.last().wall_time,
        config: &cfg,
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!("status {status}");
    println!("J_T {:.6e}", summary.j_t_final);
    if let Some(g) = summary.gate_error_final {
        println!("gate error {g:.6e}");
    }
    Ok(match result.status {
        Status::MonotonicityFault { iteration } => {
            eprintln!("error: total functional increased at iteration {iteration}");
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    })
}

#[derive(Serialize)]
struct EvaluateSummary<'a> {
    command: &'static str,
    pulse: Option<&'a Path>,
    f_avg: f64,
    gate_error: f64,
    j_t: f64,
    config: &'a RunConfig,
}

fn cmd_evaluate(run: &RunArgs, pulse_path: Option<&Path>, quiet: bool) -> Result<ExitCode, CliError> {
    let (cfg, out) = prepare(run)?;
    let built = cfg.build_model()?;
    let grid = cfg.time_grid()?;
    let pulse = match pulse_path {
        Some(p) => read_pulse(p, grid, &built.control_labels)?,
        None => cfg.guess_pulse(grid, built.model.n_controls())?,
    };
    let labels = built.control_labels.clone();
    let embedding = built.embedding.clone();
    let problem = cfg.problem(built, pulse.clone())?;
    problem.validate()?;

    let mut opt = Optimizer::new(&problem)?;
    let finals = opt.forward_all(&pulse)?;
    let (j_t, _) = opt.evaluate(&finals);
    let map = opt.propagator().dynamical_map(&pulse, &embedding)?;
    let f = f_avg(&map, &problem.target)?;

    create_dir(&out)?;
    write_text(&out.join(RESOLVED_CONFIG_FILE), &cfg.to_toml())?;
    if pulse_path.is_none() {
        write_pulse(&out.join(PULSE_FILE), &pulse, &labels)?;
    }
    if cfg.output.populations {
        let prop = Propagator::new(&problem.model, &grid, problem.integrator)?;
        let d = embedding.logical_dim();
        let mut trajectories = Vec::with_capacity(d);
        for i in 0..d {
            let rho0 = DensityMatrix::physical(
                embedding
                    .embed(&gateopt::Operator::new(matrix_unit(d, i, i))?)?
                    .into_matrix(),
            )?;
            let traj = prop.forward(&pulse, &rho0, true)?.trajectory.expect("stored");
            trajectories.push((i, traj));
        }
        write_populations(
            &out.join(POPULATIONS_FILE),
            &grid,
            embedding.logical_indices(),
            &trajectories,
        )?;
        if !quiet {
            eprintln!("wrote {}", out.join(POPULATIONS_FILE).display());
        }
    }
    write_json(
        &out.join("evaluation.json"),
        &EvaluateSummary {
            command: "evaluate",
            pulse: pulse_path,
            f_avg: f,
            gate_error: 1.0 - f,
            j_t,
            config: &cfg,
        },
    )?;
    println!("F_avg {f:.12}");
    println!("gate error {:.6e}", 1.0 - f);
    println!("J_T {j_t:.6e}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyRow {
    dim: usize,
    property: &'static str,
    agreed: usize,
    samples: usize,
    passed: bool,
}

fn cmd_verify(seed: u64, samples: usize, out: Option<&Path>) -> Result<ExitCode, CliError> {
    if samples == 0 {
        eprintln!("warning: no channels sampled; the battery passes vacuously");
    }
    let mut rows = Vec::new();
    for dim in 2..=4 {
        let pair_ok = is_complete_totally_rotating(&reference_pair(dim))?;
        rows.push(VerifyRow {
            dim,
            property: "reference pair is complete and totally rotating",
            agreed: usize::from(pair_ok),
            samples: 1,
            passed: pair_ok,
        });
        let report = theorem_battery(dim, samples, seed.wrapping_add(dim as u64))?;
        let projectors = report.projector_agreements();
        let spectra = report.spectrum_agreements();
        rows.push(VerifyRow {
            dim,
            property: "projectors-to-projectors matches Choi rank",
            agreed: projectors,
            samples,
            passed: projectors == samples,
        });
        rows.push(VerifyRow {
            dim,
            property: "unital + spectrum on pair matches Choi rank",
            agreed: spectra,
            samples,
            passed: spectra == samples,
        });
        println!("d = {dim}: {} of {samples} channels unitary", report.unitary);
    }
    for r in &rows {
        println!(
            "{}  d = {}  {:<50} {}/{}",
            if r.passed { "PASS" } else { "FAIL" },
            r.dim,
            r.property,
            r.agreed,
            r.samples
        );
    }
    let passed = rows.iter().all(|r| r.passed);
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("verify.json"), &rows)?;
    }
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
