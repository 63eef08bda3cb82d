//! Stage-one (preliminary) estimators and the final estimators built from
//! displaced-null measurement counts, plus the posterior density used to
//! certify that a preliminary estimator spreads its mass on both sides.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::gaussian::HolevoSolution;
use crate::measurement::{DisplacementSchedule, MatsumotoTable};
use crate::models::{Domain, PureStateModel};
use crate::optim::{nelder_mead, NmOptions};
use crate::quantum::{
    measurement_probs, sample_counts_with_rng, OutcomeCounts, ProjectiveBasis, StateVector,
};
use crate::stats::adaptive_simpson;
use crate::tol;
use crate::{Error, Result};

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

/// Sign convention for the naive (undisplaced) null estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRule {
    Plus,
    Minus,
    /// Posterior-weighted mean of the two candidates `θ̃ ± r̂` under the
    /// uniform prior.
    PosteriorMean,
}

/// Output of one second-stage estimation.
#[derive(Debug, Clone)]
pub struct EstimateRecord {
    pub theta_tilde: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// Local estimate; `θ̂ = θ̃ + û/√n` exactly.
    pub u_hat: Vec<f64>,
    pub counts: OutcomeCounts,
    /// `‖θ̃ - θ‖ ≤ r_n`, filled by the harness (which knows θ).
    pub in_confidence: Option<bool>,
}

fn record(
    theta_tilde: Vec<f64>,
    u_hat: Vec<f64>,
    n: u64,
    counts: OutcomeCounts,
) -> EstimateRecord {
    let rn = (n as f64).sqrt();
    let theta_hat: Vec<f64> =
        theta_tilde.iter().zip(&u_hat).map(|(&t, &u)| t + u / rn).collect();
    EstimateRecord { theta_tilde, theta_hat, u_hat, counts, in_confidence: None }
}

/// Maximum-likelihood inversion of counts from the `σ_x` eigenbasis on
/// the qubit rotation model: outcome 1 has probability `sin²(θ - π/4)`,
/// so `θ̃ = π/4 + f⁻¹(X̄)` with `f = sin²` inverted on `(-π/2, 0)`,
/// clamped to the closure of the parameter interval.
pub fn preliminary_qubit_mle(counts: &OutcomeCounts) -> f64 {
    let x_bar = counts.frequency(1).clamp(0.0, 1.0);
    let theta = FRAC_PI_4 - x_bar.sqrt().asin();
    theta.clamp(-FRAC_PI_8, FRAC_PI_8)
}

/// Stage-one measurement design for a generic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreliminaryBases {
    /// One real-combination basis (rows of the Householder reflection
    /// mapping `|0>` to the uniform vector) plus, when the model has
    /// complex structure at the domain center, its imaginary partner.
    /// This pair attains the best fixed separable Fisher information for
    /// the local charts, which keeps the stage-one error small enough for
    /// the second stage at moderate sample sizes.
    RealImagPair,
    /// Eigenbases of the symmetric logarithmic derivatives at the domain
    /// center, deduplicated.
    SldEigen,
}

/// Precomputed stage-one scheme: fixed bases, a likelihood grid over the
/// domain box and the cached outcome log-probabilities on the grid.
#[derive(Debug, Clone)]
pub struct PreliminaryScheme {
    bases: Vec<ProjectiveBasis>,
    grid: Vec<Vec<f64>>,
    grid_log_probs: Vec<Vec<Vec<f64>>>,
}

fn householder_real_basis(d: usize) -> Result<ProjectiveBasis> {
    // H = 1 - 2 h hᵀ with h ∝ e_0 - (1,..,1)/√d maps |0> to the uniform
    // vector; every row has nonzero first component, so each outcome
    // keeps positive probability at the reference state.
    let g = 1.0 / (d as f64).sqrt();
    let mut h = DVector::<f64>::from_element(d, -g);
    h[0] += 1.0;
    let norm = h.norm();
    if norm < 1e-12 {
        // d = 1 degenerate; cannot happen for d >= 2.
        return Err(Error::InvalidArgument { detail: "degenerate Householder seed".into() });
    }
    h /= norm;
    let mut vectors = Vec::with_capacity(d);
    for r in 0..d {
        let mut v = DVector::<Complex64>::zeros(d);
        for c in 0..d {
            let id = if r == c { 1.0 } else { 0.0 };
            v[c] = Complex64::new(id - 2.0 * h[r] * h[c], 0.0);
        }
        vectors.push(StateVector::new(v)?);
    }
    ProjectiveBasis::new(vectors)
}

fn imaginary_partner_basis(real_basis: &ProjectiveBasis) -> Result<ProjectiveBasis> {
    // Same real coefficients, with the excited components rotated by i:
    // w_v = v_0 |0> + i Σ_k v_k |k>.
    let d = real_basis.dim();
    let mut vectors = Vec::with_capacity(d);
    for v in real_basis.vectors() {
        let mut w = DVector::<Complex64>::zeros(d);
        w[0] = v.amplitudes()[0];
        for k in 1..d {
            w[k] = v.amplitudes()[k] * Complex64::new(0.0, 1.0);
        }
        vectors.push(StateVector::new(w)?);
    }
    ProjectiveBasis::new(vectors)
}

fn model_has_complex_structure(model: &PureStateModel) -> Result<bool> {
    let center = model.domain().center();
    let derivs = model.projected_derivatives(&center)?;
    Ok(derivs.iter().any(|d| d.iter().any(|z| z.im.abs() > 1e-9)))
}

fn grid_points_per_dim(m: usize) -> usize {
    match m {
        1 => 65,
        2 => 25,
        3 => 11,
        4 => 9,
        _ => 5,
    }
}

impl PreliminaryScheme {
    pub fn new(model: &PureStateModel, kind: PreliminaryBases) -> Result<Self> {
        let bases = match kind {
            PreliminaryBases::RealImagPair => {
                let real = householder_real_basis(model.dim())?;
                if model_has_complex_structure(model)? {
                    let imag = imaginary_partner_basis(&real)?;
                    vec![real, imag]
                } else {
                    vec![real]
                }
            }
            PreliminaryBases::SldEigen => {
                let center = model.domain().center();
                let slds = crate::information::sld_pure(model, &center)?;
                let mut bases: Vec<ProjectiveBasis> = Vec::new();
                for l in &slds {
                    let eig = l.matrix().clone().symmetric_eigen();
                    let vecs = (0..model.dim())
                        .map(|k| StateVector::normalized(eig.eigenvectors.column(k).into_owned()))
                        .collect::<Result<Vec<_>>>()?;
                    let candidate = ProjectiveBasis::new(vecs)?;
                    let duplicate = bases.iter().any(|b| same_basis(b, &candidate));
                    if !duplicate {
                        bases.push(candidate);
                    }
                }
                if bases.is_empty() {
                    return Err(Error::RankDeficient {
                        detail: "no informative stage-one basis".into(),
                    });
                }
                bases
            }
        };

        // Likelihood grid over the domain box.
        let m = model.param_dim();
        let per_dim = grid_points_per_dim(m);
        let lo = model.domain().lo().to_vec();
        let hi = model.domain().hi().to_vec();
        let mut grid = Vec::with_capacity(per_dim.pow(m as u32));
        let mut idx = vec![0usize; m];
        loop {
            let point: Vec<f64> = (0..m)
                .map(|j| lo[j] + (hi[j] - lo[j]) * (idx[j] as f64 + 0.5) / per_dim as f64)
                .collect();
            grid.push(point);
            let mut j = 0;
            loop {
                if j == m {
                    break;
                }
                idx[j] += 1;
                if idx[j] < per_dim {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == m {
                break;
            }
        }

        let mut grid_log_probs = Vec::with_capacity(grid.len());
        for point in &grid {
            let psi = model.state(point)?;
            let mut per_basis = Vec::with_capacity(bases.len());
            for b in &bases {
                let probs = measurement_probs(b, &psi)?;
                per_basis.push(probs.iter().map(|&p| p.max(1e-300).ln()).collect());
            }
            grid_log_probs.push(per_basis);
        }
        Ok(Self { bases, grid, grid_log_probs })
    }

    pub fn bases(&self) -> &[ProjectiveBasis] {
        &self.bases
    }

    /// Split `n_tilde` shots over the bases and sample counts from the
    /// exact outcome distributions of `theta_true`.
    pub fn simulate_counts<R: Rng + ?Sized>(
        &self,
        model: &PureStateModel,
        theta_true: &[f64],
        n_tilde: u64,
        rng: &mut R,
    ) -> Result<Vec<OutcomeCounts>> {
        let psi = model.state(theta_true)?;
        let nb = self.bases.len() as u64;
        let mut out = Vec::with_capacity(self.bases.len());
        for (i, b) in self.bases.iter().enumerate() {
            let shots = n_tilde / nb + if (i as u64) < n_tilde % nb { 1 } else { 0 };
            let probs = measurement_probs(b, &psi)?;
            out.push(sample_counts_with_rng(&probs, shots, rng)?);
        }
        Ok(out)
    }

    fn log_lik_at(&self, model: &PureStateModel, counts: &[OutcomeCounts], theta: &[f64]) -> f64 {
        let psi = match model.state(theta) {
            Ok(s) => s,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut ll = 0.0;
        for (b, cnt) in self.bases.iter().zip(counts) {
            let probs = match measurement_probs(b, &psi) {
                Ok(p) => p,
                Err(_) => return f64::NEG_INFINITY,
            };
            for (k, &c) in cnt.counts().iter().enumerate() {
                if c > 0 {
                    ll += c as f64 * probs[k].max(1e-300).ln();
                }
            }
        }
        ll
    }

    /// Maximum likelihood: grid scan with cached log-probabilities, then
    /// a local simplex refinement, clamped to the closure of the domain.
    pub fn estimate(&self, model: &PureStateModel, counts: &[OutcomeCounts]) -> Result<Vec<f64>> {
        if counts.len() != self.bases.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bases.len(),
                got: counts.len(),
            });
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0usize;
        for (gi, per_basis) in self.grid_log_probs.iter().enumerate() {
            let mut ll = 0.0;
            for (bi, cnt) in counts.iter().enumerate() {
                for (k, &c) in cnt.counts().iter().enumerate() {
                    if c > 0 {
                        ll += c as f64 * per_basis[bi][k];
                    }
                }
            }
            if ll > best {
                best = ll;
                best_idx = gi;
            }
        }
        // Flat likelihood across distant grid cells means the counts do
        // not identify the parameter under these bases.
        let m = model.param_dim();
        let per_dim = grid_points_per_dim(m);
        let spacing: Vec<f64> = (0..m)
            .map(|j| (model.domain().hi()[j] - model.domain().lo()[j]) / per_dim as f64)
            .collect();
        for (gi, per_basis) in self.grid_log_probs.iter().enumerate() {
            if gi == best_idx {
                continue;
            }
            let far = self.grid[gi]
                .iter()
                .zip(&self.grid[best_idx])
                .zip(&spacing)
                .any(|((a, b), s)| (a - b).abs() > 2.5 * s);
            if !far {
                continue;
            }
            let mut ll = 0.0;
            for (bi, cnt) in counts.iter().enumerate() {
                for (k, &c) in cnt.counts().iter().enumerate() {
                    if c > 0 {
                        ll += c as f64 * per_basis[bi][k];
                    }
                }
            }
            if (best - ll).abs() <= 1e-9 * (1.0 + best.abs()) {
                return Err(Error::NumericalFailure {
                    detail: "likelihood flat across distant grid cells (non-identifiable)".into(),
                });
            }
        }

        let domain = model.domain().clone();
        let start = self.grid[best_idx].clone();
        let objective = |theta: &[f64]| {
            let clamped = domain.clamp(theta);
            let dist2: f64 =
                theta.iter().zip(&clamped).map(|(a, b)| (a - b) * (a - b)).sum();
            -self.log_lik_at(model, counts, &clamped) + 1e6 * dist2
        };
        let step = spacing.iter().cloned().fold(f64::INFINITY, f64::min) * 0.5;
        let (theta, _) = nelder_mead(
            objective,
            &start,
            &NmOptions { max_iter: 400 + 200 * m, initial_step: step, f_tol: 1e-12, x_tol: 1e-9 },
        );
        Ok(domain.clamp(&theta))
    }
}

fn same_basis(a: &ProjectiveBasis, b: &ProjectiveBasis) -> bool {
    a.vectors().iter().all(|v| {
        b.vectors().iter().any(|w| {
            crate::quantum::inner_product(v, w).map(|ov| ov.norm() > 1.0 - 1e-9).unwrap_or(false)
        })
    })
}

/// One-call generic preliminary estimator: simulate stage one at
/// `theta_true` with `n_tilde` shots (deterministic in `seed`) and invert
/// by maximum likelihood.
pub fn preliminary_generic(
    model: &PureStateModel,
    theta_true: &[f64],
    n_tilde: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let scheme = PreliminaryScheme::new(model, PreliminaryBases::RealImagPair)?;
    let mut rng = crate::rng::seeded_rng(seed);
    let counts = scheme.simulate_counts(model, theta_true, n_tilde, &mut rng)?;
    scheme.estimate(model, &counts)
}

/// Local estimate from an empirical excited-outcome frequency:
/// `û = Δ_n/2 - (n/Δ_n) p̂ / 2`. Vanishes exactly at the on-null
/// intensity `p̂ = Δ_n²/n = δ_n²`.
pub fn local_estimate_from_frequency(p_hat: f64, sched: &DisplacementSchedule) -> f64 {
    let big = sched.big_delta_n();
    big / 2.0 - (sched.n() as f64 / big) * p_hat / 2.0
}

/// Displaced-null qubit estimator:
/// `θ̂ = θ̃ + δ_n/2 - p̂/(2 δ_n)` with `p̂` the empirical frequency of
/// outcome 1 under the basis rotated to `θ̃ + δ_n`.
pub fn estimate_displaced_qubit(
    theta_tilde: f64,
    counts: &OutcomeCounts,
    sched: &DisplacementSchedule,
) -> EstimateRecord {
    let u_hat = local_estimate_from_frequency(counts.frequency(1), sched);
    record(vec![theta_tilde], vec![u_hat], sched.n(), counts.clone())
}

/// Full-state estimate from the two displaced bases (half the sample
/// each): `û_1^j = Δ_n/2 - (n/Δ_n) p̂(j)/2` and the same for `û_2^j` with
/// the second count set. Components are interleaved `(u1^1, u2^1, ...)`.
#[derive(Debug, Clone)]
pub struct BuresEstimate {
    pub u_hat: Vec<f64>,
}

impl BuresEstimate {
    /// Chart coordinates `w_j = (û_1^j + i û_2^j)/√n`.
    pub fn chart_coordinates(&self, n: u64) -> Vec<Complex64> {
        let rn = (n as f64).sqrt();
        self.u_hat
            .chunks(2)
            .map(|pair| Complex64::new(pair[0] / rn, pair[1] / rn))
            .collect()
    }

    /// Estimated state in the chart of `basis`.
    pub fn state(&self, basis: &ProjectiveBasis, n: u64) -> Result<StateVector> {
        crate::models::chart_state(basis, &self.chart_coordinates(n))
    }
}

pub fn estimate_bures(
    counts_real: &OutcomeCounts,
    counts_imag: &OutcomeCounts,
    sched: &DisplacementSchedule,
) -> Result<BuresEstimate> {
    if counts_real.counts().len() != counts_imag.counts().len() {
        return Err(Error::DimensionMismatch {
            expected: counts_real.counts().len(),
            got: counts_imag.counts().len(),
        });
    }
    let d = counts_real.counts().len();
    let mut u_hat = Vec::with_capacity(2 * (d - 1));
    for j in 1..d {
        u_hat.push(local_estimate_from_frequency(counts_real.frequency(j), sched));
        u_hat.push(local_estimate_from_frequency(counts_imag.frequency(j), sched));
    }
    Ok(BuresEstimate { u_hat })
}

/// General displaced-null estimator on system ⊗ ancilla counts:
/// `û_j = Σ_k T_jk (Δ_n/√2 - (n/Δ_n) p̂(k)/√2)` reading outcomes
/// `k = 1..m`; outcomes above `m` are recorded but carry only
/// `O(n^{-1+2ε})` mass and are not used.
pub fn estimate_general(
    theta_tilde: &[f64],
    counts: &OutcomeCounts,
    holevo: &HolevoSolution,
    sched: &DisplacementSchedule,
) -> EstimateRecord {
    let m = holevo.t.nrows();
    let n = sched.n();
    let z: Vec<f64> = (1..=m)
        .map(|k| local_estimate_from_frequency(counts.frequency(k), sched) * std::f64::consts::SQRT_2)
        .collect();
    let u_hat: Vec<f64> =
        (0..m).map(|j| (0..m).map(|k| holevo.t[(j, k)] * z[k]).sum()).collect();
    record(theta_tilde.to_vec(), u_hat, n, counts.clone())
}

/// Cramér-Rao-saturating estimator on rotated real-basis counts:
/// `û_j = Σ_k T_jk (g_k Δ_n/2 - (n/Δ_n) p̂(k)/(2 g_k))` with
/// `T = (CᵀC)⁻¹Cᵀ`.
pub fn estimate_qcrb(
    theta_tilde: &[f64],
    counts: &OutcomeCounts,
    c_real: &DMatrix<f64>,
    g: &[f64],
    sched: &DisplacementSchedule,
) -> Result<EstimateRecord> {
    let d_minus_1 = c_real.nrows();
    let m = c_real.ncols();
    if g.len() != d_minus_1 {
        return Err(Error::DimensionMismatch { expected: d_minus_1, got: g.len() });
    }
    let ctc = c_real.transpose() * c_real;
    let t = ctc
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient { detail: "CᵀC not invertible".into() })?
        * c_real.transpose();
    let n = sched.n();
    let big = sched.big_delta_n();
    let z: Vec<f64> = (1..=d_minus_1)
        .map(|k| {
            let gk = g[k - 1];
            gk * big / 2.0 - (n as f64 / big) * counts.frequency(k) / (2.0 * gk)
        })
        .collect();
    let u_hat: Vec<f64> =
        (0..m).map(|j| (0..d_minus_1).map(|k| t[(j, k)] * z[k]).sum()).collect();
    Ok(record(theta_tilde.to_vec(), u_hat, n, counts.clone()))
}

/// Naive (undisplaced) null estimator: the magnitude `|θ - θ̃|` is read
/// off as `arcsin(√p̂)` and the sign is chosen by `rule`. Exists to
/// demonstrate that the undisplaced strategy stalls; it cannot tell the
/// two sides of `θ̃` apart.
#[allow(clippy::too_many_arguments)]
pub fn estimate_naive_null(
    theta_tilde: f64,
    counts: &OutcomeCounts,
    sched: &DisplacementSchedule,
    rule: SignRule,
    stage1_ones: u64,
    n_tilde: u64,
    domain: &Domain,
) -> EstimateRecord {
    let p_hat = counts.frequency(1).clamp(0.0, 1.0);
    let r_hat = p_hat.sqrt().asin();
    let theta_hat = match rule {
        SignRule::Plus => theta_tilde + r_hat,
        SignRule::Minus => theta_tilde - r_hat,
        SignRule::PosteriorMean => {
            let lp = posterior_log_unnorm(stage1_ones, n_tilde, theta_tilde + r_hat);
            let lm = posterior_log_unnorm(stage1_ones, n_tilde, theta_tilde - r_hat);
            if lp == f64::NEG_INFINITY && lm == f64::NEG_INFINITY {
                theta_tilde
            } else {
                let mx = lp.max(lm);
                let (wp, wm) = ((lp - mx).exp(), (lm - mx).exp());
                theta_tilde + r_hat * (wp - wm) / (wp + wm)
            }
        }
    };
    let clamped = domain.clamp(&[theta_hat])[0];
    let n = sched.n();
    let u_hat = (clamped - theta_tilde) * (n as f64).sqrt();
    EstimateRecord {
        theta_tilde: vec![theta_tilde],
        theta_hat: vec![clamped],
        u_hat: vec![u_hat],
        counts: counts.clone(),
        in_confidence: None,
    }
}

/// One-shot-form estimator from the overlap table of the rotated basis:
/// `θ̂̂_i = θ̃_i + Re Σ_{k=0}^{m} <b_k|z_i>/(√2 <b_k|ψ̃>) p̂(k)`.
pub fn estimate_matsumoto(
    theta_tilde: &[f64],
    counts: &OutcomeCounts,
    table: &MatsumotoTable,
    sched: &DisplacementSchedule,
) -> Result<EstimateRecord> {
    let m = table.z_overlap.ncols();
    let n = sched.n();
    let mut shift = vec![0.0f64; m];
    for k in 0..=m {
        if table.psi_overlap[k].norm() < tol::ZERO_PROB {
            return Err(Error::VanishingOverlap { detail: format!("<b_{k}|psi> = 0") });
        }
        let p_hat = counts.frequency(k);
        for (i, s) in shift.iter_mut().enumerate() {
            let coeff = table.z_overlap[(k, i)]
                / (Complex64::new(std::f64::consts::SQRT_2, 0.0) * table.psi_overlap[k]);
            *s += coeff.re * p_hat;
        }
    }
    let rn = (n as f64).sqrt();
    let u_hat: Vec<f64> = shift.iter().map(|&s| s * rn).collect();
    Ok(record(theta_tilde.to_vec(), u_hat, n, counts.clone()))
}

/// Unnormalized log posterior of the qubit stage-one count under the
/// uniform prior: `2k ln|sin(θ-π/4)| + 2(ñ-k) ln cos(θ-π/4)` on the
/// parameter interval, -∞ outside.
pub fn posterior_log_unnorm(k: u64, n_tilde: u64, theta: f64) -> f64 {
    if !(-FRAC_PI_8..=FRAC_PI_8).contains(&theta) {
        return f64::NEG_INFINITY;
    }
    let x = theta - FRAC_PI_4;
    let (s, c) = (x.sin().abs(), x.cos());
    2.0 * k as f64 * s.ln() + 2.0 * (n_tilde - k) as f64 * c.ln()
}

fn posterior_peak(k: u64, n_tilde: u64) -> f64 {
    // The mode solves tan²(θ-π/4) = k/(ñ-k); coincides with the MLE.
    let mode = if k == n_tilde {
        -FRAC_PI_4
    } else {
        -((k as f64 / (n_tilde - k) as f64).sqrt()).atan()
    };
    (FRAC_PI_4 + mode).clamp(-FRAC_PI_8, FRAC_PI_8)
}

/// Normalized posterior density of θ given a stage-one count of `k` ones
/// out of `ñ`, under the uniform prior on (-π/8, π/8). The normalization
/// integral is evaluated by adaptive quadrature in log space.
pub fn posterior_density(k: u64, n_tilde: u64, theta: f64) -> f64 {
    if !(-FRAC_PI_8..=FRAC_PI_8).contains(&theta) {
        return 0.0;
    }
    let lmax = posterior_log_unnorm(k, n_tilde, posterior_peak(k, n_tilde));
    let f = |t: f64| (posterior_log_unnorm(k, n_tilde, t) - lmax).exp();
    let z = adaptive_simpson(&f, -FRAC_PI_8, FRAC_PI_8, 1e-12);
    f(theta) / z
}

/// Two-sided posterior mass beyond radius `tau` from the estimator:
/// `∫_{|r| ≥ τ} min(π(θ̃+r|θ̃), π(θ̃-r|θ̃)) dr`.
pub fn posterior_two_sided_mass(k: u64, n_tilde: u64, tau: f64) -> f64 {
    let theta_tilde = posterior_peak(k, n_tilde);
    let lmax = posterior_log_unnorm(k, n_tilde, theta_tilde);
    let f = |t: f64| (posterior_log_unnorm(k, n_tilde, t) - lmax).exp();
    let z = adaptive_simpson(&f, -FRAC_PI_8, FRAC_PI_8, 1e-12);
    let g = |r: f64| f(theta_tilde + r).min(f(theta_tilde - r)) / z;
    2.0 * adaptive_simpson(&g, tau, FRAC_PI_4, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::displaced_basis_qubit;
    use crate::models::{local_qudit_model, qubit_rotation_model};
    use crate::quantum::sample_counts;
    use approx::assert_relative_eq;

    fn sched(n: u64) -> DisplacementSchedule {
        DisplacementSchedule::new(0.05, n).unwrap()
    }

    fn counts2(ones: u64, total: u64) -> OutcomeCounts {
        OutcomeCounts::new(vec![total - ones, ones], total).unwrap()
    }

    #[test]
    fn qubit_mle_inversions() {
        // X̄ = 1/2 inverts to 0.
        assert_relative_eq!(preliminary_qubit_mle(&counts2(500, 1000)), 0.0, epsilon = 1e-12);

        // X̄ = sin²(-π/8) inverts to π/8 exactly.
        let x = (FRAC_PI_8).sin().powi(2);
        let total = 1_000_000u64;
        let ones = (x * total as f64).round() as u64;
        let got = preliminary_qubit_mle(&counts2(ones, total));
        assert!((got - FRAC_PI_8).abs() < 1e-3);

        // X̄ = 0 would invert to π/4, outside the interval; clamped.
        assert_relative_eq!(preliminary_qubit_mle(&counts2(0, 1000)), FRAC_PI_8, epsilon = 1e-12);
    }

    #[test]
    fn displaced_qubit_estimator_values() {
        let s = sched(10_000);
        // Exact cancellation: empirical frequency equal to the on-null
        // intensity δ_n² returns θ̃.
        let p_null = s.delta_n() * s.delta_n();
        let ones = (p_null * 10_000.0).round() as u64;
        let c = counts2(ones, 10_000);
        let rec = estimate_displaced_qubit(0.3, &c, &s);
        let p_hat = c.frequency(1);
        let expected = 0.3 + s.delta_n() / 2.0 - p_hat / (2.0 * s.delta_n());
        assert_relative_eq!(rec.theta_hat[0], expected, epsilon = 1e-12);

        // Frozen arithmetic example: θ̃ = 0, p̂ = 0.001.
        let rec = estimate_displaced_qubit(0.0, &counts2(10, 10_000), &s);
        assert_relative_eq!(rec.theta_hat[0], 0.007345926370126966, epsilon = 1e-12);
        // θ̂ = θ̃ + û/√n holds exactly.
        assert_relative_eq!(
            rec.theta_hat[0],
            rec.theta_tilde[0] + rec.u_hat[0] / 100.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn displaced_qubit_cancellation_is_exact() {
        // At the on-null intensity p̂ = δ_n² the displacement cancels
        // exactly in floating point.
        for &n in &[10_000u64, 1_000_000, 123_456_789] {
            let s = sched(n);
            let p_null = s.delta_n() * s.delta_n();
            let u = local_estimate_from_frequency(p_null, &s);
            assert!(u.abs() < 1e-12 * s.big_delta_n(), "u = {u}");
        }
    }

    #[test]
    fn bures_estimator_cancellation() {
        // Exact cancellation at the on-null intensity, and near-zero for
        // integer counts whose frequency only approximates it.
        let s = sched(1_000_000);
        let n = s.n();
        let p_null = s.big_delta_n() * s.big_delta_n() / n as f64;
        assert!(local_estimate_from_frequency(p_null, &s).abs() < 1e-12);

        let d = 3usize;
        let shots = n / 2;
        let per = (p_null * shots as f64).round() as u64;
        let mut counts = vec![per; d];
        counts[0] = shots - per * (d as u64 - 1);
        let c = OutcomeCounts::new(counts, shots).unwrap();
        let est = estimate_bures(&c, &c, &s).unwrap();
        let count_rounding =
            (per as f64 - p_null * shots as f64).abs() / shots as f64 * n as f64
                / s.big_delta_n()
                / 2.0;
        for &u in &est.u_hat {
            assert!(u.abs() <= count_rounding + 1e-9, "u = {u}");
        }
    }

    #[test]
    fn general_estimator_cancellation_and_identity() {
        let s = sched(1_000_000);
        let n = s.n();
        // Identity T of size 2; counts with frequency Δ²/n at outcomes 1,2.
        let t = DMatrix::<f64>::identity(2, 2);
        let hol = HolevoSolution {
            value: 1.0,
            b: t.clone(),
            b_prime: None,
            t,
            quad_vectors: vec![],
            restart_values: vec![],
        };
        let p_null = s.big_delta_n() * s.big_delta_n() / n as f64;
        assert!(local_estimate_from_frequency(p_null, &s).abs() < 1e-12);
        let per = (p_null * n as f64).round() as u64;
        let counts =
            OutcomeCounts::new(vec![n - 2 * per, per, per, 0], n).unwrap();
        let rec = estimate_general(&[0.1, -0.2], &counts, &hol, &s);
        let count_rounding = (per as f64 - p_null * n as f64).abs() / s.big_delta_n();
        for &u in &rec.u_hat {
            assert!(u.abs() <= count_rounding + 1e-9, "u = {u}");
        }
        assert_relative_eq!(rec.theta_hat[0], 0.1 + rec.u_hat[0] / 1000.0, epsilon = 1e-15);
    }

    #[test]
    fn qcrb_estimator_reduces_to_displaced_qubit() {
        let s = sched(10_000);
        let c_real = DMatrix::from_element(1, 1, 1.0);
        let counts = counts2(37, 10_000);
        let via_qcrb = estimate_qcrb(&[0.02], &counts, &c_real, &[1.0], &s).unwrap();
        let direct = estimate_displaced_qubit(0.02, &counts, &s);
        assert_relative_eq!(via_qcrb.theta_hat[0], direct.theta_hat[0], epsilon = 1e-12);

        // Cancellation with per-outcome intensities g_k² Δ²/n.
        let c2 = DMatrix::<f64>::identity(2, 2);
        let g = [1.0, 0.5];
        let n = s.n();
        let mut cts = vec![0u64; 3];
        let mut used = 0;
        for k in 1..3 {
            let p = g[k - 1] * g[k - 1] * s.big_delta_n() * s.big_delta_n() / n as f64;
            cts[k] = (p * n as f64).round() as u64;
            used += cts[k];
        }
        cts[0] = n - used;
        let counts = OutcomeCounts::new(cts, n).unwrap();
        let rec = estimate_qcrb(&[0.0, 0.0], &counts, &c2, &g, &s).unwrap();
        for &u in &rec.u_hat {
            assert!(u.abs() < 2e-2, "u = {u}"); // count rounding at n = 1e4 scale
        }
    }

    #[test]
    fn matsumoto_all_mass_on_reference_outcome() {
        // With every shot landing on outcome 0 the shift is exactly the
        // k = 0 column of the overlap table.
        let s = sched(10_000);
        let m = 2usize;
        let mut z_overlap = DMatrix::<Complex64>::zeros(m + 1, m);
        z_overlap[(0, 0)] = Complex64::new(0.02, 0.001);
        z_overlap[(0, 1)] = Complex64::new(-0.015, 0.0);
        z_overlap[(1, 0)] = Complex64::new(1.0, 0.0);
        z_overlap[(2, 1)] = Complex64::new(1.0, 0.0);
        let table = crate::measurement::MatsumotoTable {
            z_overlap: z_overlap.clone(),
            psi_overlap: vec![
                Complex64::new(0.999, 0.0),
                Complex64::new(-0.02, 0.0),
                Complex64::new(-0.02, 0.0),
            ],
        };
        let n = s.n();
        let counts = OutcomeCounts::new(vec![n, 0, 0, 0], n).unwrap();
        let rec = estimate_matsumoto(&[0.1, -0.2], &counts, &table, &s).unwrap();
        for i in 0..m {
            let expected = (z_overlap[(0, i)]
                / (Complex64::new(std::f64::consts::SQRT_2, 0.0) * table.psi_overlap[0]))
            .re;
            assert_relative_eq!(rec.theta_hat[i] - rec.theta_tilde[i], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn naive_null_examples() {
        let s = DisplacementSchedule::new_relaxed(0.3, 10_000).unwrap();
        let dom = qubit_rotation_model().domain().clone();

        // p̂ = 0 returns θ̃.
        let rec =
            estimate_naive_null(0.1, &counts2(0, 1000), &s, SignRule::Plus, 500, 1000, &dom);
        assert_relative_eq!(rec.theta_hat[0], 0.1, epsilon = 1e-15);

        // Exact inversion with the plus rule.
        let p = (0.01f64).sin().powi(2);
        let total = 1u64 << 50;
        let ones = (p * total as f64).round() as u64;
        let c = OutcomeCounts::new(vec![total - ones, ones], total).unwrap();
        let rec = estimate_naive_null(0.0, &c, &s, SignRule::Plus, 500, 1000, &dom);
        assert!((rec.theta_hat[0] - 0.01).abs() < 1e-8);

        // The minus rule lands on the other side.
        let rec = estimate_naive_null(0.0, &c, &s, SignRule::Minus, 500, 1000, &dom);
        assert!((rec.theta_hat[0] + 0.01).abs() < 1e-8);
    }

    #[test]
    fn posterior_density_normalizes_and_peaks_at_mle() {
        for &(k, nt) in &[(500u64, 1000u64), (300, 1000), (5_000, 10_000)] {
            let total: f64 = adaptive_simpson(
                &|t: f64| posterior_density(k, nt, t),
                -FRAC_PI_8,
                FRAC_PI_8,
                1e-10,
            );
            assert!((total - 1.0).abs() < 1e-8, "mass {total}");

            let mle = preliminary_qubit_mle(&counts2(k, nt));
            // Numerical mode search on a fine grid.
            let mut best = (-FRAC_PI_8, 0.0f64);
            for i in 0..4001 {
                let t = -FRAC_PI_8 + (2.0 * FRAC_PI_8) * i as f64 / 4000.0;
                let d = posterior_density(k, nt, t);
                if d > best.1 {
                    best = (t, d);
                }
            }
            assert!((best.0 - mle).abs() < 1e-3, "mode {} vs mle {mle}", best.0);
        }
    }

    #[test]
    fn preliminary_concentration_qubit() {
        // Empirical out-of-confidence rate at n = 1e6, ε = 0.05 stays
        // below 1% across 10^4 trials.
        let s = sched(1_000_000);
        let theta = 0.05f64;
        let p1 = (theta - FRAC_PI_4).sin().powi(2);
        let mut oob = 0u32;
        let trials = 10_000;
        for t in 0..trials {
            let c = sample_counts(&[1.0 - p1, p1], s.n_tilde(), 9_000 + t).unwrap();
            let est = preliminary_qubit_mle(&c);
            if (est - theta).abs() > s.r_n() {
                oob += 1;
            }
        }
        let rate = oob as f64 / trials as f64;
        assert!(rate < 0.01, "out-of-confidence rate {rate}");
    }

    #[test]
    fn preliminary_generic_matches_qubit_mle() {
        let model = qubit_rotation_model();
        let scheme = PreliminaryScheme::new(&model, PreliminaryBases::RealImagPair).unwrap();
        assert_eq!(scheme.bases().len(), 1, "real model needs no imaginary partner");

        let mut rng = crate::rng::seeded_rng(5);
        let counts = scheme.simulate_counts(&model, &[0.07], 20_000, &mut rng).unwrap();
        let generic = scheme.estimate(&model, &counts).unwrap()[0];
        // The Householder basis in d=2 is exactly the stage-one basis of
        // the closed-form inversion; outcome 1 of that basis is the
        // (|0>-|1>)/√2 direction with probability sin²(θ-π/4).
        let direct = preliminary_qubit_mle(&counts[0]);
        assert!((generic - direct).abs() < 1e-5, "generic {generic} vs direct {direct}");
    }

    #[test]
    fn preliminary_generic_concentrates_on_full_qubit() {
        let model = local_qudit_model(2).unwrap();
        let scheme = PreliminaryScheme::new(&model, PreliminaryBases::RealImagPair).unwrap();
        assert_eq!(scheme.bases().len(), 2);
        let mut hits = 0;
        let trials = 100;
        for t in 0..trials {
            let mut rng = crate::rng::trial_rng(31, 10_000, t);
            let counts = scheme.simulate_counts(&model, &[0.0, 0.0], 10_000, &mut rng).unwrap();
            let est = scheme.estimate(&model, &counts).unwrap();
            let norm = est.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 0.05 {
                hits += 1;
            }
        }
        assert!(hits >= 99, "only {hits}/100 runs concentrated");
    }

    #[test]
    fn preliminary_generic_standard_rate() {
        // MSE slope vs stage-one size within ±0.15 of -1.
        let model = local_qudit_model(2).unwrap();
        let scheme = PreliminaryScheme::new(&model, PreliminaryBases::RealImagPair).unwrap();
        let theta = [0.12, -0.08];
        let sizes = [1_000u64, 10_000, 100_000];
        let mut mses = Vec::new();
        for (si, &nt) in sizes.iter().enumerate() {
            let mut acc = 0.0;
            let trials = 200;
            for t in 0..trials {
                let mut rng = crate::rng::trial_rng(77, nt, si as u64 * 1000 + t);
                let counts = scheme.simulate_counts(&model, &theta, nt, &mut rng).unwrap();
                let est = scheme.estimate(&model, &counts).unwrap();
                acc += est
                    .iter()
                    .zip(&theta)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / trials as f64;
            }
            mses.push(acc);
        }
        let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = mses.iter().map(|&m| m.ln()).collect();
        let fit = crate::stats::ols_line(&xs, &ys).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.15, "slope {}", fit.slope);
    }

    #[test]
    fn reasonable_mass_is_bounded_below() {
        // Two-sided tail mass beyond τ_n = n^{-1/2+ε/4} admits a fixed
        // lower bound across stage-one sizes (mid-domain estimate).
        let eps = 0.05f64;
        for &nt in &[1_000u64, 10_000, 100_000] {
            let n = (nt as f64).powf(1.0 / (1.0 - eps));
            let tau = n.powf(-0.5 + eps / 4.0);
            let mass = posterior_two_sided_mass(nt / 2, nt, tau);
            assert!(mass >= 0.05, "mass {mass} at n_tilde {nt}");
        }
    }

    #[test]
    fn naive_vs_displaced_single_sample_size() {
        // At fixed n the displaced scheme beats the naive null by a wide
        // margin on squared error (sanity check of the pipeline wiring).
        let n = 100_000u64;
        let s = sched(n);
        let model = qubit_rotation_model();
        let dom = model.domain().clone();
        let theta = 0.04f64;
        let mut naive_mse = 0.0;
        let mut disp_mse = 0.0;
        let trials = 400;
        for t in 0..trials {
            let mut rng = crate::rng::trial_rng(123, n, t);
            let p_prelim = (theta - FRAC_PI_4).sin().powi(2);
            let c1 = sample_counts_with_rng(&[1.0 - p_prelim, p_prelim], s.n_tilde(), &mut rng)
                .unwrap();
            let tilde = preliminary_qubit_mle(&c1);

            let p_null = (theta - tilde).sin().powi(2);
            let c_null =
                sample_counts_with_rng(&[1.0 - p_null, p_null], n, &mut rng).unwrap();
            let rec = estimate_naive_null(
                tilde,
                &c_null,
                &s,
                SignRule::Plus,
                c1.counts()[1],
                s.n_tilde(),
                &dom,
            );
            naive_mse += (rec.theta_hat[0] - theta).powi(2) / trials as f64;

            let basis = displaced_basis_qubit(tilde, &s);
            let p_disp = measurement_probs(&basis, &model.state(&[theta]).unwrap()).unwrap();
            let c_disp = sample_counts_with_rng(&p_disp, n, &mut rng).unwrap();
            let rec = estimate_displaced_qubit(tilde, &c_disp, &s);
            disp_mse += (rec.theta_hat[0] - theta).powi(2) / trials as f64;
        }
        assert!(
            naive_mse > 3.0 * disp_mse,
            "naive {naive_mse} vs displaced {disp_mse}"
        );
    }
}
