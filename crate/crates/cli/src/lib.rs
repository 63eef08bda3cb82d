//! Library side of the `dnull` harness: experiment configuration, the
//! Monte Carlo engine, report emission and the `fisher`/`holevo`
//! inspection commands.

pub mod config;
pub mod experiment;
pub mod inspect;
pub mod registry;
pub mod report;

pub use config::{ExperimentConfig, OutputFormat, StrategyKind, TrueParam};
pub use experiment::{run_experiment, simulate_trials, RunContext, TrialRecord};
pub use registry::{build_model, ModelRegistry};
pub use report::{from_json, scaling_fit, to_csv, to_json, RiskReport, RiskRow};

/// Process-level error classes; the binary maps them to exit codes
/// (2 = configuration, 3 = numerical failure).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 3,
        }
    }
}
