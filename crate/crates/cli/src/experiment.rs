//! Monte Carlo orchestration: per-trial simulation of the two-stage
//! procedure for every strategy, deterministic parallelism over trials
//! and aggregation into a [`RiskReport`].

use nalgebra::DMatrix;
use rayon::prelude::*;

use dnull_core::gaussian::{holevo_bound_gaussian, GaussianShiftModel, HolevoSolution};
use dnull_core::measurement::{
    displaced_bases_bures, displaced_basis_general, matsumoto_basis,
    null_basis, qcrb_basis, DisplacementSchedule,
};
use dnull_core::models::{chart_inverse, linearize_at, PureStateModel};
use dnull_core::quantum::{measurement_probs, sample_counts_with_rng, StateVector};
use dnull_core::rng::trial_rng;
use dnull_core::stats::{ks_statistic_normal, mean_and_stderr, KahanSum};
use dnull_core::{
    bures_distance_sq, estimate_bures, estimate_displaced_qubit, estimate_general,
    estimate_matsumoto, estimate_naive_null, estimate_qcrb, preliminary_qubit_mle,
    PreliminaryBases, PreliminaryScheme,
};

use crate::config::{ExperimentConfig, StrategyKind, TrueParam};
use crate::registry::build_model;
use crate::report::{scaling_fit, RiskReport, RiskRow};
use crate::CliError;

use std::f64::consts::FRAC_PI_4;

/// Everything produced by one trial; enough to compute risks, empirical
/// covariances and normality diagnostics.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub theta_true: Vec<f64>,
    pub theta_tilde: Vec<f64>,
    /// Final estimate in the trial's natural coordinates (model
    /// parameters, or interleaved local chart coordinates for the
    /// full-state strategy).
    pub theta_hat: Vec<f64>,
    /// `√n (estimate − truth)` componentwise in local coordinates.
    pub u_err: Vec<f64>,
    /// Secondary estimator from the same counts (the rotated-basis
    /// one-shot form run alongside the general scheme).
    pub aux_theta_hat: Option<Vec<f64>>,
    pub loss: f64,
    pub in_confidence: bool,
}

/// Per-run immutable context shared by all trials.
pub struct RunContext {
    pub model: PureStateModel,
    pub kind: StrategyKind,
    pub epsilon: f64,
    pub seed: u64,
    pub fixed_theta: Option<Vec<f64>>,
    pub weight: DMatrix<f64>,
    pub g: Vec<f64>,
    scheme: Option<PreliminaryScheme>,
    /// Whitening matrix mapping `u_err` to approximately standard normal
    /// components under the strategy's limit covariance at the reference
    /// point.
    whiten: DMatrix<f64>,
    pub loss_name: String,
}

fn inv_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, CliError> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.min() <= 0.0 {
        return Err(CliError::Numerical("limit covariance not positive".into()));
    }
    let d = nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| 1.0 / l.sqrt()),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

impl RunContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let model = build_model(&cfg.model)?;
        let kind = cfg.strategy_kind()?;
        let m = model.param_dim();

        match kind {
            StrategyKind::DisplacedQubit | StrategyKind::NaiveNull(_) => {
                if model.dim() != 2 || m != 1 {
                    return Err(CliError::Config(format!(
                        "strategy {} requires the one-parameter qubit model",
                        kind.name()
                    )));
                }
            }
            StrategyKind::Bures
                if m != 2 * (model.dim() - 1) => {
                    return Err(CliError::Config(
                        "full-state strategy requires a full local chart (local_qudit:d)".into(),
                    ));
                }
            _ => {}
        }

        let fixed_theta = match &cfg.true_parameter {
            TrueParam::Fixed(v) => {
                if v.len() != m {
                    return Err(CliError::Config(format!(
                        "true_parameter has {} entries, model has {m} parameters",
                        v.len()
                    )));
                }
                Some(v.clone())
            }
            TrueParam::Named(_) => None,
        };

        let weight = match &cfg.weight {
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(CliError::Config("weight matrix must be m x m".into()));
                }
                let w = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
                if (w.clone() - w.transpose()).amax() > 1e-10
                    || w.clone().symmetric_eigen().eigenvalues.min() <= 0.0
                {
                    return Err(CliError::Config(
                        "weight matrix must be symmetric positive definite".into(),
                    ));
                }
                w
            }
            None => DMatrix::identity(m, m),
        };

        let g = match &cfg.g {
            Some(g) => {
                if g.len() != model.dim() - 1 || g.contains(&0.0) {
                    return Err(CliError::Config(
                        "g must have d-1 nonzero entries".into(),
                    ));
                }
                g.clone()
            }
            None => vec![1.0; model.dim() - 1],
        };

        let scheme = match kind {
            StrategyKind::DisplacedQubit | StrategyKind::NaiveNull(_) => None,
            _ => Some(
                PreliminaryScheme::new(&model, PreliminaryBases::RealImagPair)
                    .map_err(|e| CliError::Numerical(e.to_string()))?,
            ),
        };

        // Reference point for the limit covariance used in the normality
        // diagnostic: the fixed parameter, or the domain center for
        // prior-drawn runs.
        let reference = fixed_theta.clone().unwrap_or_else(|| model.domain().center());
        let whiten = match kind {
            StrategyKind::DisplacedQubit | StrategyKind::NaiveNull(_) => {
                DMatrix::from_element(1, 1, 2.0) // covariance 1/4
            }
            StrategyKind::Bures => {
                DMatrix::identity(m, m) * std::f64::consts::SQRT_2 // covariance 1/2
            }
            StrategyKind::GeneralHolevo | StrategyKind::Matsumoto => {
                let hol = reference_holevo(&model, &reference, &weight)?;
                inv_sqrt_psd(&(&hol.t * hol.t.transpose() * 0.5))?
            }
            StrategyKind::Qcrb => {
                let f = dnull_core::qfi_pure(&model, &reference)
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                let f_inv = f
                    .try_inverse()
                    .ok_or_else(|| CliError::Numerical("QFI not invertible".into()))?;
                inv_sqrt_psd(&f_inv)?
            }
        };

        let loss_name = match kind {
            StrategyKind::Bures => "squared_bures",
            StrategyKind::GeneralHolevo | StrategyKind::Matsumoto => "weighted_quadratic",
            _ => "squared_error",
        }
        .to_string();

        Ok(Self {
            model,
            kind,
            epsilon: cfg.epsilon,
            seed: cfg.seed,
            fixed_theta,
            weight,
            g,
            scheme,
            whiten,
            loss_name,
        })
    }

    fn schedule(&self, n: u64) -> Result<DisplacementSchedule, CliError> {
        let res = match self.kind {
            StrategyKind::NaiveNull(_) => DisplacementSchedule::new_relaxed(self.epsilon, n),
            _ => DisplacementSchedule::new(self.epsilon, n),
        };
        res.map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn reference_holevo(
    model: &PureStateModel,
    theta: &[f64],
    weight: &DMatrix<f64>,
) -> Result<HolevoSolution, CliError> {
    let lin = linearize_at(model, theta).map_err(|e| CliError::Numerical(e.to_string()))?;
    let gauss = GaussianShiftModel::new(lin.coefficients().clone(), weight.clone())
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    holevo_bound_gaussian(&gauss).map_err(|e| CliError::Numerical(e.to_string()))
}

fn weighted_quadratic(w: &DMatrix<f64>, e: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(e);
    (v.transpose() * w * &v)[(0, 0)]
}

fn run_trial(ctx: &RunContext, n: u64, trial: u64) -> Result<TrialRecord, CliError> {
    let mut rng = trial_rng(ctx.seed, n, trial);
    let sched = ctx.schedule(n)?;
    let theta_true = match &ctx.fixed_theta {
        Some(t) => t.clone(),
        None => ctx.model.domain().sample(&mut rng),
    };
    let nf = n as f64;
    let err = |e: dnull_core::Error| CliError::Numerical(e.to_string());

    match ctx.kind {
        StrategyKind::DisplacedQubit | StrategyKind::NaiveNull(_) => {
            let theta = theta_true[0];
            // Stage one: eigenbasis of the x-type generator; outcome 1
            // has probability sin²(θ - π/4).
            let p1 = (theta - FRAC_PI_4).sin().powi(2);
            let c1 = sample_counts_with_rng(&[1.0 - p1, p1], sched.n_tilde(), &mut rng)
                .map_err(err)?;
            let theta_tilde = preliminary_qubit_mle(&c1);
            let in_confidence = (theta_tilde - theta).abs() <= sched.r_n();

            let rec = match ctx.kind {
                StrategyKind::DisplacedQubit => {
                    let p = (theta - theta_tilde - sched.delta_n()).sin().powi(2);
                    let counts =
                        sample_counts_with_rng(&[1.0 - p, p], n, &mut rng).map_err(err)?;
                    estimate_displaced_qubit(theta_tilde, &counts, &sched)
                }
                StrategyKind::NaiveNull(rule) => {
                    let p = (theta - theta_tilde).sin().powi(2);
                    let counts =
                        sample_counts_with_rng(&[1.0 - p, p], n, &mut rng).map_err(err)?;
                    estimate_naive_null(
                        theta_tilde,
                        &counts,
                        &sched,
                        rule,
                        c1.counts()[1],
                        sched.n_tilde(),
                        ctx.model.domain(),
                    )
                }
                _ => unreachable!(),
            };
            let e = rec.theta_hat[0] - theta;
            Ok(TrialRecord {
                theta_true,
                theta_tilde: vec![theta_tilde],
                theta_hat: rec.theta_hat.clone(),
                u_err: vec![nf.sqrt() * e],
                aux_theta_hat: None,
                loss: e * e,
                in_confidence,
            })
        }

        StrategyKind::Bures => {
            let scheme = ctx.scheme.as_ref().expect("scheme built for generic strategies");
            let counts1 = scheme
                .simulate_counts(&ctx.model, &theta_true, sched.n_tilde(), &mut rng)
                .map_err(err)?;
            let theta_tilde = scheme.estimate(&ctx.model, &counts1).map_err(err)?;

            let base = null_basis(&ctx.model, &theta_tilde).map_err(err)?;
            let (b_real, b_imag) = displaced_bases_bures(&base, &sched).map_err(err)?;
            let psi = ctx.model.state(&theta_true).map_err(err)?;
            let p = measurement_probs(&b_real, &psi).map_err(err)?;
            let q = measurement_probs(&b_imag, &psi).map_err(err)?;
            let half = n / 2;
            let cp = sample_counts_with_rng(&p, half, &mut rng).map_err(err)?;
            let cq = sample_counts_with_rng(&q, half, &mut rng).map_err(err)?;
            let est = estimate_bures(&cp, &cq, &sched).map_err(err)?;
            let psi_hat = est.state(&base, n).map_err(err)?;
            let loss = bures_distance_sq(&psi_hat, &psi).map_err(err)?;

            // True local coordinates in the chart of `base`.
            let w = chart_inverse(&base, &psi).map_err(err)?;
            let mut u_true = Vec::with_capacity(est.u_hat.len());
            for z in &w {
                u_true.push(nf.sqrt() * z.re);
                u_true.push(nf.sqrt() * z.im);
            }
            let u_err: Vec<f64> =
                est.u_hat.iter().zip(&u_true).map(|(a, b)| a - b).collect();
            let norm_u: f64 = u_true.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(TrialRecord {
                theta_true,
                theta_tilde,
                theta_hat: est.u_hat.clone(),
                u_err,
                aux_theta_hat: None,
                loss,
                in_confidence: norm_u / nf.sqrt() <= sched.r_n(),
            })
        }

        StrategyKind::GeneralHolevo | StrategyKind::Matsumoto => {
            let scheme = ctx.scheme.as_ref().expect("scheme built for generic strategies");
            let counts1 = scheme
                .simulate_counts(&ctx.model, &theta_true, sched.n_tilde(), &mut rng)
                .map_err(err)?;
            let theta_tilde = scheme.estimate(&ctx.model, &counts1).map_err(err)?;

            let lin = linearize_at(&ctx.model, &theta_tilde).map_err(err)?;
            let gauss = GaussianShiftModel::new(lin.coefficients().clone(), ctx.weight.clone())
                .map_err(err)?;
            let hol = holevo_bound_gaussian(&gauss).map_err(err)?;

            let (basis, table) = if ctx.kind == StrategyKind::Matsumoto {
                let (b, t) = matsumoto_basis(&lin, &hol, &sched).map_err(err)?;
                (b, Some(t))
            } else {
                (displaced_basis_general(&lin, &hol, &sched).map_err(err)?, None)
            };

            let psi = ctx.model.state(&theta_true).map_err(err)?;
            let joint = psi.tensor(&StateVector::basis_state(ctx.model.dim(), 0));
            let probs = measurement_probs(&basis, &joint).map_err(err)?;
            let counts = sample_counts_with_rng(&probs, n, &mut rng).map_err(err)?;

            let rec_general = estimate_general(&theta_tilde, &counts, &hol, &sched);
            let (theta_hat, aux) = match &table {
                Some(t) => {
                    let rec_m =
                        estimate_matsumoto(&theta_tilde, &counts, t, &sched).map_err(err)?;
                    (rec_m.theta_hat, Some(rec_general.theta_hat))
                }
                None => (rec_general.theta_hat, None),
            };

            let e: Vec<f64> =
                theta_hat.iter().zip(&theta_true).map(|(a, b)| a - b).collect();
            let dist: f64 = theta_tilde
                .iter()
                .zip(&theta_true)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            Ok(TrialRecord {
                theta_true,
                theta_tilde,
                theta_hat,
                u_err: e.iter().map(|x| x * nf.sqrt()).collect(),
                aux_theta_hat: aux,
                loss: weighted_quadratic(&ctx.weight, &e),
                in_confidence: dist <= sched.r_n(),
            })
        }

        StrategyKind::Qcrb => {
            let scheme = ctx.scheme.as_ref().expect("scheme built for generic strategies");
            let counts1 = scheme
                .simulate_counts(&ctx.model, &theta_true, sched.n_tilde(), &mut rng)
                .map_err(err)?;
            let theta_tilde = scheme.estimate(&ctx.model, &counts1).map_err(err)?;

            let lin = linearize_at(&ctx.model, &theta_tilde).map_err(err)?;
            let (basis, c_real) = qcrb_basis(&lin, &ctx.g, &sched).map_err(err)?;
            let psi = ctx.model.state(&theta_true).map_err(err)?;
            let probs = measurement_probs(&basis, &psi).map_err(err)?;
            let counts = sample_counts_with_rng(&probs, n, &mut rng).map_err(err)?;
            let rec = estimate_qcrb(&theta_tilde, &counts, &c_real, &ctx.g, &sched).map_err(err)?;

            let e: Vec<f64> =
                rec.theta_hat.iter().zip(&theta_true).map(|(a, b)| a - b).collect();
            let dist: f64 = theta_tilde
                .iter()
                .zip(&theta_true)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            Ok(TrialRecord {
                theta_true,
                theta_tilde,
                theta_hat: rec.theta_hat.clone(),
                u_err: e.iter().map(|x| x * nf.sqrt()).collect(),
                aux_theta_hat: None,
                loss: e.iter().map(|x| x * x).sum(),
                in_confidence: dist <= sched.r_n(),
            })
        }
    }
}

/// Run all trials for one sample size. Trial seeds derive from
/// `(seed, n, trial)`, so the result is independent of scheduling;
/// `parallel = false` forces the single-threaded path (used to verify
/// that equivalence).
pub fn simulate_trials(
    ctx: &RunContext,
    n: u64,
    trials: u64,
    parallel: bool,
) -> Result<Vec<TrialRecord>, CliError> {
    if parallel {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(ctx, n, t))
            .collect::<Result<Vec<_>, _>>()
    } else {
        (0..trials).map(|t| run_trial(ctx, n, t)).collect()
    }
}

fn aggregate(ctx: &RunContext, n: u64, records: &[TrialRecord]) -> RiskRow {
    let losses: Vec<f64> = records.iter().map(|r| r.loss).collect();
    let (risk, stderr) = mean_and_stderr(&losses);

    // Pool whitened error components for the normality diagnostic.
    let mut pooled = Vec::with_capacity(records.len() * records[0].u_err.len());
    for r in records {
        let v = nalgebra::DVector::from_column_slice(&r.u_err);
        let z = &ctx.whiten * v;
        pooled.extend(z.iter().copied());
    }
    let ks = ks_statistic_normal(&pooled);

    let mut oob = KahanSum::default();
    for r in records {
        oob.add(if r.in_confidence { 0.0 } else { 1.0 });
    }
    RiskRow {
        n,
        trials: records.len() as u64,
        loss_name: ctx.loss_name.clone(),
        risk,
        stderr,
        n_risk: n as f64 * risk,
        ks_stat: ks,
        oob_rate: oob.value() / records.len() as f64,
    }
}

/// Full experiment: every grid size, aggregation and the scaling fit.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RiskReport, CliError> {
    cfg.validate()?;
    let ctx = RunContext::new(cfg)?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let records = simulate_trials(&ctx, n, cfg.trials, true)?;
        rows.push(aggregate(&ctx, n, &records));
    }
    let scaling = if rows.len() >= 3 { scaling_fit(&rows).ok() } else { None };
    Ok(RiskReport {
        model: cfg.model.clone(),
        strategy: cfg.strategy.clone(),
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        loss_name: ctx.loss_name.clone(),
        rows,
        scaling,
    })
}
