//! Experiment configuration: JSON file plus command-line overrides.

use serde::{Deserialize, Serialize};

use dnull_core::SignRule;

use crate::CliError;

/// Second-stage measurement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    NaiveNull(SignRule),
    DisplacedQubit,
    Bures,
    GeneralHolevo,
    Qcrb,
    Matsumoto,
}

impl StrategyKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        match (name, arg) {
            ("naive_null", None) | ("naive_null", Some("plus")) => {
                Ok(Self::NaiveNull(SignRule::Plus))
            }
            ("naive_null", Some("minus")) => Ok(Self::NaiveNull(SignRule::Minus)),
            ("naive_null", Some("posterior_mean")) => {
                Ok(Self::NaiveNull(SignRule::PosteriorMean))
            }
            ("displaced_qubit", None) => Ok(Self::DisplacedQubit),
            ("bures", None) => Ok(Self::Bures),
            ("general_holevo", None) => Ok(Self::GeneralHolevo),
            ("qcrb", None) => Ok(Self::Qcrb),
            ("matsumoto", None) => Ok(Self::Matsumoto),
            _ => Err(CliError::Config(format!("unknown strategy '{s}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NaiveNull(SignRule::Plus) => "naive_null:plus",
            Self::NaiveNull(SignRule::Minus) => "naive_null:minus",
            Self::NaiveNull(SignRule::PosteriorMean) => "naive_null:posterior_mean",
            Self::DisplacedQubit => "displaced_qubit",
            Self::Bures => "bures",
            Self::GeneralHolevo => "general_holevo",
            Self::Qcrb => "qcrb",
            Self::Matsumoto => "matsumoto",
        }
    }
}

/// True-parameter policy: a fixed vector or a fresh uniform draw from the
/// model's parameter box per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrueParam {
    Named(String),
    Fixed(Vec<f64>),
}

impl TrueParam {
    pub fn is_prior(&self) -> Result<bool, CliError> {
        match self {
            TrueParam::Named(s) if s == "prior" => Ok(true),
            TrueParam::Named(s) => {
                Err(CliError::Config(format!("unknown true_parameter '{s}' (expected \"prior\")")))
            }
            TrueParam::Fixed(_) => Ok(false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_seed() -> u64 {
    1
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

/// Declarative experiment description (the archived artifact of a run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: String,
    pub strategy: String,
    pub epsilon: f64,
    #[serde(default)]
    pub g: Option<Vec<f64>>,
    #[serde(default)]
    pub weight: Option<Vec<Vec<f64>>>,
    pub n_grid: Vec<u64>,
    pub trials: u64,
    pub true_parameter: TrueParam,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn strategy_kind(&self) -> Result<StrategyKind, CliError> {
        StrategyKind::parse(&self.strategy)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials < 1 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("n_grid must be strictly increasing".into()));
        }
        let kind = self.strategy_kind()?;
        // Single source of truth: the schedule constructors.
        let probe = match kind {
            StrategyKind::NaiveNull(_) => {
                dnull_core::measurement::DisplacementSchedule::new_relaxed(self.epsilon, 100)
            }
            _ => dnull_core::measurement::DisplacementSchedule::new(self.epsilon, 100),
        };
        if let Err(e) = probe {
            return Err(CliError::Config(format!("strategy {}: {e}", kind.name())));
        }
        self.true_parameter.is_prior()?;
        Ok(())
    }
}
