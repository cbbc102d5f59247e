//! Thin command-line front end over [`singsub::cli`]: parses flags and an
//! optional flat config file (flags win), then runs the requested sweep.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use singsub::cli::{self, apply_key_value, CliError, RunConfig};

/// Convergence experiments for weakly singular integral-equation solvers.
///
/// Solves a registered problem with the discretize-first and/or
/// linearize-first schemes over a sweep of grid sizes, prints one iteration
/// table per run, and writes CSV tables plus (k, log10 r) series files.
#[derive(Debug, Parser)]
#[command(name = "singsub", version)]
struct Args {
    /// Built-in example problem to run (1 or 2)
    #[arg(long, value_name = "ID")]
    example: Option<String>,

    /// Registered problem name (alternative to --example)
    #[arg(long, value_name = "NAME")]
    problem: Option<String>,

    /// classical, linearize-first, or both
    #[arg(long, value_name = "WHICH")]
    approach: Option<String>,

    /// Comma-separated coarse grid sizes, e.g. 50,100,200
    #[arg(long, value_name = "LIST")]
    pn: Option<String>,

    /// Kernel truncation width for the coarse scheme
    #[arg(long, value_name = "REAL")]
    delta: Option<String>,

    /// Fine-rule cell count
    #[arg(long = "fine-p", value_name = "INT")]
    fine_p: Option<String>,

    /// Fine-rule truncation width
    #[arg(long = "fine-mu", value_name = "REAL")]
    fine_mu: Option<String>,

    /// Iteration budget (0 records only the normalized start)
    #[arg(long, value_name = "INT")]
    kmax: Option<String>,

    /// Node placement: left-endpoint (alias: paper) or midpoint
    #[arg(long, value_name = "WHERE")]
    nodes: Option<String>,

    /// Directory for CSV output (created if missing)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Flat key = value config file; flags given here override it
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for the pre-flight weight-concentration check
    #[arg(long, value_name = "INT")]
    seed: Option<String>,

    /// Sample count for the pre-flight weight-concentration check
    #[arg(long, value_name = "INT")]
    trials: Option<String>,
}

fn build_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => cli::parse_config_file(path)?,
        None => RunConfig::example(1),
    };
    let flag_pairs: [(&str, &Option<String>); 9] = [
        ("example", &args.example),
        ("problem", &args.problem),
        ("approach", &args.approach),
        ("pn", &args.pn),
        ("delta", &args.delta),
        ("fine-p", &args.fine_p),
        ("fine-mu", &args.fine_mu),
        ("kmax", &args.kmax),
        ("nodes", &args.nodes),
    ];
    for (key, value) in flag_pairs {
        if let Some(value) = value {
            apply_key_value(&mut config, key, value)?;
        }
    }
    if let Some(seed) = &args.seed {
        apply_key_value(&mut config, "seed", seed)?;
    }
    if let Some(trials) = &args.trials {
        apply_key_value(&mut config, "trials", trials)?;
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.example.is_none() && args.problem.is_none() && args.config.is_none() {
        eprintln!("error: one of --example, --problem, or --config is required");
        return ExitCode::from(2);
    }
    let result = build_config(&args).and_then(|config| cli::run(&config).map(|_| ()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ CliError::Config(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
