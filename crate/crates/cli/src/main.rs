//! `dnull` — two-stage displaced-null estimation experiments.
//!
//! Subcommands: `simulate` (Monte Carlo risk runs from a JSON config),
//! `fisher` (information report for a model at a point), `holevo`
//! (Gaussian risk bound and optimal observables). Exit codes: 0 success,
//! 2 configuration error, 3 numerical failure.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dnull_cli::config::{ExperimentConfig, OutputFormat};
use dnull_cli::inspect::{fisher_at, holevo_at};
use dnull_cli::registry::build_model;
use dnull_cli::{run_experiment, to_csv, to_json, CliError};

#[derive(Parser)]
#[command(name = "dnull", version, about = "Two-stage displaced-null estimation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment described by a JSON config file.
    Simulate(SimulateArgs),
    /// Print the Fisher information report of a model at a point.
    Fisher(FisherArgs),
    /// Solve the Gaussian risk bound for a model linearized at a point.
    Holevo(HolevoArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: String,
    /// Override the sample-size grid.
    #[arg(long = "n", num_args = 1..)]
    n_grid: Option<Vec<u64>>,
    /// Override the number of trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
    /// Output format.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format '{s}' (csv|json)")),
    }
}

#[derive(Args)]
struct FisherArgs {
    /// Model name (qubit_rotation | local_qudit:d | real_rotation:d).
    #[arg(long)]
    model: String,
    /// Parameter point, one value per model parameter.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    theta: Vec<f64>,
}

#[derive(Args)]
struct HolevoArgs {
    #[arg(long)]
    model: String,
    /// Parameter point (defaults to the domain center).
    #[arg(long, num_args = 0.., allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    /// Weight matrix as a JSON array of rows, e.g. '[[1,0],[0,1]]'.
    #[arg(long)]
    weight: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let text = std::fs::read_to_string(&args.config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config)))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(n) = args.n_grid {
                cfg.n_grid = n;
            }
            if let Some(t) = args.trials {
                cfg.trials = t;
            }
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if let Some(o) = args.out {
                cfg.out = Some(o);
            }
            if let Some(f) = args.format {
                cfg.format = f;
            }
            cfg.validate()?;
            let report = run_experiment(&cfg)?;
            let rendered = match cfg.format {
                OutputFormat::Csv => to_csv(&report),
                OutputFormat::Json => to_json(&report)?,
            };
            match &cfg.out {
                Some(path) => std::fs::write(path, rendered.as_bytes())?,
                None => {
                    std::io::stdout().write_all(rendered.as_bytes())?;
                }
            }
            Ok(())
        }
        Command::Fisher(args) => {
            let model = build_model(&args.model)?;
            if args.theta.len() != model.param_dim() {
                return Err(CliError::Config(format!(
                    "theta needs {} entries",
                    model.param_dim()
                )));
            }
            let report = fisher_at(&model, &args.theta)?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::Holevo(args) => {
            let model = build_model(&args.model)?;
            let theta = match args.theta {
                Some(t) if !t.is_empty() => {
                    if t.len() != model.param_dim() {
                        return Err(CliError::Config(format!(
                            "theta needs {} entries",
                            model.param_dim()
                        )));
                    }
                    t
                }
                _ => model.domain().center(),
            };
            let weight: Option<Vec<Vec<f64>>> = match args.weight {
                Some(text) => Some(
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::Config(format!("bad weight matrix: {e}")))?,
                ),
                None => None,
            };
            let out = holevo_at(&model, &theta, weight.as_deref())?;
            let text = serde_json::to_string_pretty(&out)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
