//! The `fisher` and `holevo` inspection commands: Fisher-information
//! reports and the Gaussian risk bound for a model at a point, serialized
//! as JSON.

use nalgebra::DMatrix;
use serde::Serialize;

use dnull_core::measurement::{displaced_bases_bures, null_basis, DisplacementSchedule};
use dnull_core::models::{linearize_at, PureStateModel};
use dnull_core::{fisher_report, FisherReport};

use crate::experiment::reference_holevo;
use crate::CliError;

/// Default schedule used to pick the diagnostic measurement basis of the
/// `fisher` command.
const FISHER_EPSILON: f64 = 0.05;
const FISHER_N: u64 = 1_000_000;

/// Fisher report at `theta` for the displaced-null basis (the completed
/// null basis rotated by the y-type collective generator with the default
/// schedule). Away from the exact-null angle this basis attains the
/// quantum information for saturable models.
pub fn fisher_at(model: &PureStateModel, theta: &[f64]) -> Result<FisherReport, CliError> {
    let err = |e: dnull_core::Error| CliError::Numerical(e.to_string());
    let sched = DisplacementSchedule::new(FISHER_EPSILON, FISHER_N).map_err(err)?;
    let base = null_basis(model, theta).map_err(err)?;
    let (basis, _) = displaced_bases_bures(&base, &sched).map_err(err)?;
    fisher_report(model, theta, &basis).map_err(err)
}

#[derive(Debug, Serialize)]
pub struct HolevoJson {
    pub value: f64,
    pub b: Vec<Vec<f64>>,
    pub b_prime: Option<Vec<Vec<f64>>>,
    pub t: Vec<Vec<f64>>,
    pub ancilla: bool,
    pub restart_values: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Solve the Gaussian risk minimization for the model linearized at
/// `theta` with weight `w` (identity when absent).
pub fn holevo_at(
    model: &PureStateModel,
    theta: &[f64],
    w: Option<&[Vec<f64>]>,
) -> Result<HolevoJson, CliError> {
    let m = model.param_dim();
    let weight = match w {
        Some(rows) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(CliError::Config("weight matrix must be m x m".into()));
            }
            DMatrix::from_fn(m, m, |i, j| rows[i][j])
        }
        None => DMatrix::identity(m, m),
    };
    let _ = linearize_at(model, theta).map_err(|e| CliError::Numerical(e.to_string()))?;
    let sol = reference_holevo(model, theta, &weight)?;
    Ok(HolevoJson {
        value: sol.value,
        b: rows(&sol.b),
        b_prime: sol.b_prime.as_ref().map(rows),
        t: rows(&sol.t),
        ancilla: sol.uses_ancilla(),
        restart_values: sol.restart_values.clone(),
    })
}
