//! The `coherence-cs` command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime failure,
//! 3 certification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{theorem1_bounds, theorem3_bounds, C4Variant};
use crate::harness::{emit_csv, emit_json, run_experiment_with_threads, default_threads, ExperimentConfig, ModelKind};
use crate::matrixlab::{coherence_report, normalize_columns, verify_quasi_rip, MeasurementMatrix};
use crate::signals::{read_vector, write_vector};
use crate::solvers::{Problem, SolverConfig};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;

/// Margin below which a brute-force eigenvalue check counts as failed.
const QUASI_RIP_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "coherence-cs", version, about = "Coherence-based sparse recovery toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the coherence report of a matrix file.
    Coherence {
        matrix: PathBuf,
        /// Block size; overrides the one stored in the file.
        #[arg(long)]
        block: Option<usize>,
        /// Normalize columns before analysis.
        #[arg(long)]
        normalize: bool,
    },
    /// Print the error-bound constants.
    Bounds(BoundsArgs),
    /// Solve one model instance.
    Solve(SolveArgs),
    /// Run an experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; defaults to COHERENCE_CS_THREADS or the core count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Brute-force checks.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    k: usize,
    /// Mutual coherence.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Defaults to lambda.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = C4Variant::Proof)]
    variant: C4Variant,
    /// Block size; selects the block-sparse constants.
    #[arg(long, requires = "mu_b")]
    block: Option<usize>,
    /// Block coherence.
    #[arg(long)]
    mu_b: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    b_file: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Write the solution vector here.
    #[arg(long)]
    x_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Eigenvalues of every k-column Gram submatrix against 1 ± (k−1)μ.
    QuasiRip {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

/// Runs the command line with the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Runs the command line, writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Coherence { matrix, block, normalize } => {
            let mut a = MeasurementMatrix::read_file(&matrix)?;
            if let Some(d) = block {
                a = a.with_block_size(d)?;
            }
            if normalize {
                a = normalize_columns(&a)?;
            }
            print_json(out, &coherence_report(&a)?)?;
            Ok(EXIT_OK)
        }
        Command::Bounds(args) => {
            let eps = args.epsilon.unwrap_or(args.lambda);
            let set = match (args.block, args.mu_b) {
                (Some(d), Some(mu_b)) => theorem3_bounds(args.k, d, mu_b, args.lambda, eps, args.variant)?,
                (None, Some(mu_b)) => theorem3_bounds(args.k, 1, mu_b, args.lambda, eps, args.variant)?,
                (_, None) => {
                    let mu = args.mu.ok_or_else(|| {
                        Error::InvalidArgument("--mu is required unless --mu-b is given".into())
                    })?;
                    theorem1_bounds(args.k, mu, args.lambda, eps, args.variant)?
                }
            };
            print_json(out, &set)?;
            Ok(EXIT_OK)
        }
        Command::Solve(args) => solve(args, out, err),
        Command::Experiment { config, threads } => {
            let cfg = ExperimentConfig::read_file(&config)?;
            let output = run_experiment_with_threads(&cfg, threads.unwrap_or_else(default_threads))?;
            if let Some(path) = &cfg.output.csv {
                emit_csv(&output.records, path)?;
            }
            if let Some(path) = &cfg.output.json {
                emit_json(&output.summary, path)?;
            }
            print_json(out, &output.summary)?;
            for f in &output.summary.failures {
                let _ = writeln!(err, "trial {}: {}", f.trial, f.reason);
            }
            Ok(if output.summary.certified { EXIT_OK } else { EXIT_UNCERTIFIED })
        }
        Command::Verify { check: VerifyCommand::QuasiRip { matrix, k } } => {
            let a = MeasurementMatrix::read_file(&matrix)?;
            let report = verify_quasi_rip(&a, k)?;
            print_json(out, &report)?;
            let ok = report.worst_lower_margin >= -QUASI_RIP_TOL && report.worst_upper_margin >= -QUASI_RIP_TOL;
            Ok(if ok { EXIT_OK } else { EXIT_UNCERTIFIED })
        }
    }
}

fn solve(args: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let a = MeasurementMatrix::read_file(&args.matrix)?;
    let b = read_vector(&args.b_file)?;
    let mut cfg = SolverConfig::default();
    if let Some(tol) = args.tol {
        cfg.tolerance = tol;
    }
    if let Some(it) = args.max_iters {
        cfg.max_iters = it;
    }
    let problem = Problem::new(&a, b, args.lambda, args.model.with_block_size(a.block_size()))?;
    let (result, code) = match problem.solve(&cfg) {
        Ok(res) => (res, EXIT_OK),
        Err(Error::NotConverged(res)) => {
            let _ = writeln!(err, "solver did not converge; reporting the best iterate");
            (*res, EXIT_RUNTIME)
        }
        Err(e) => return Err(e),
    };
    if let Some(path) = &args.x_out {
        write_vector(&result.x_sharp, path)?;
    }
    print_json(out, &result)?;
    Ok(code)
}
