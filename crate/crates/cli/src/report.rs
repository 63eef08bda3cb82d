//! Risk report assembly and emission (CSV / JSON) plus the log-log
//! scaling fit.

use serde::{Deserialize, Serialize};

use dnull_core::stats::{ols_line, LineFit};

use crate::CliError;

/// Per-sample-size aggregate of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: u64,
    pub trials: u64,
    pub loss_name: String,
    pub risk: f64,
    pub stderr: f64,
    pub n_risk: f64,
    pub ks_stat: f64,
    pub oob_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub model: String,
    pub strategy: String,
    pub epsilon: f64,
    pub seed: u64,
    pub loss_name: String,
    pub rows: Vec<RiskRow>,
    /// Least squares of `log(risk)` on `log(n)`; present with at least
    /// three grid points.
    pub scaling: Option<LineFit>,
}

/// Ordinary least squares of `log(risk)` against `log(n)`.
pub fn scaling_fit(rows: &[RiskRow]) -> Result<LineFit, CliError> {
    if rows.len() < 3 {
        return Err(CliError::Config("scaling fit needs at least 3 grid points".into()));
    }
    if rows.iter().any(|r| r.risk <= 0.0) {
        return Err(CliError::Numerical("scaling fit needs positive risks".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.risk.ln()).collect();
    ols_line(&xs, &ys).map_err(|e| CliError::Numerical(e.to_string()))
}

fn fmt(x: f64) -> String {
    // 17 significant digits: round-trippable and platform-stable.
    format!("{x:.16e}")
}

/// Fixed-column CSV: `n, trials, loss_name, risk, stderr, n_risk,
/// ks_stat, oob_rate`.
pub fn to_csv(report: &RiskReport) -> String {
    let mut out = String::from("n,trials,loss_name,risk,stderr,n_risk,ks_stat,oob_rate\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.trials,
            r.loss_name,
            fmt(r.risk),
            fmt(r.stderr),
            fmt(r.n_risk),
            fmt(r.ks_stat),
            fmt(r.oob_rate),
        ));
    }
    out
}

pub fn to_json(report: &RiskReport) -> Result<String, CliError> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn from_json(text: &str) -> Result<RiskReport, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy_report(risks: &[(u64, f64)]) -> RiskReport {
        let rows: Vec<RiskRow> = risks
            .iter()
            .map(|&(n, risk)| RiskRow {
                n,
                trials: 10,
                loss_name: "squared_error".into(),
                risk,
                stderr: 0.0,
                n_risk: n as f64 * risk,
                ks_stat: 0.0,
                oob_rate: 0.0,
            })
            .collect();
        RiskReport {
            model: "qubit_rotation".into(),
            strategy: "displaced_qubit".into(),
            epsilon: 0.05,
            seed: 1,
            loss_name: "squared_error".into(),
            rows,
            scaling: None,
        }
    }

    #[test]
    fn scaling_fit_exact_inverse_law() {
        let report = dummy_report(&[
            (1_000, 2.5e-3),
            (10_000, 2.5e-4),
            (100_000, 2.5e-5),
            (1_000_000, 2.5e-6),
        ]);
        let fit = scaling_fit(&report.rows).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(scaling_fit(&report.rows[..2]).is_err());
    }

    #[test]
    fn csv_header_only_when_empty() {
        let report = dummy_report(&[]);
        assert_eq!(to_csv(&report), "n,trials,loss_name,risk,stderr,n_risk,ks_stat,oob_rate\n");
    }

    #[test]
    fn json_roundtrip() {
        let mut report = dummy_report(&[(100, 0.125), (1_000, 0.012)]);
        report.scaling = scaling_fit(&report.rows).err().map(|_| None).unwrap_or(None);
        let text = to_json(&report).unwrap();
        let back = from_json(&text).unwrap();
        assert_eq!(report, back);
    }
}
