//! Quantum and classical Fisher information for pure-state models,
//! symmetric logarithmic derivatives, and the saturation conditions for
//! the quantum Cramér-Rao bound under a projective measurement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::models::PureStateModel;
use crate::quantum::{HermitianOp, ProjectiveBasis};
use crate::tol;
use crate::{Error, Result};

/// Quantum Fisher information matrix,
/// `F_ij = 4 Re <∂_i ψ|∂_j ψ> - 4 Re(<ψ|∂_j ψ><∂_i ψ|ψ>)`.
pub fn qfi_pure(model: &PureStateModel, theta: &[f64]) -> Result<DMatrix<f64>> {
    let derivs = model.projected_derivatives(theta)?;
    let m = model.param_dim();
    let mut f = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let val = 4.0 * derivs[i].dotc(&derivs[j]).re;
            f[(i, j)] = val;
            f[(j, i)] = val;
        }
    }
    Ok(f)
}

/// Symmetric logarithmic derivatives
/// `L_j = 2(|∂_j ψ><ψ| + |ψ><∂_j ψ|)` with gauge-projected derivatives.
/// The Lyapunov residual `∂_j ρ - (L_j ρ + ρ L_j)/2` is verified to 1e-8.
pub fn sld_pure(model: &PureStateModel, theta: &[f64]) -> Result<Vec<HermitianOp>> {
    let psi = model.state(theta)?;
    let derivs = model.projected_derivatives(theta)?;
    let a = psi.amplitudes();
    let rho = a * a.adjoint();
    let mut out = Vec::with_capacity(derivs.len());
    for d in &derivs {
        let l_mat = (d * a.adjoint() + a * d.adjoint()) * Complex64::new(2.0, 0.0);
        let drho = d * a.adjoint() + a * d.adjoint();
        let resid = (&l_mat * &rho + &rho * &l_mat) * Complex64::new(0.5, 0.0) - drho;
        let resid_max = crate::quantum::max_abs(&resid);
        if resid_max > tol::ITERATIVE {
            return Err(Error::NumericalFailure {
                detail: format!("Lyapunov residual {resid_max:e}"),
            });
        }
        out.push(HermitianOp::new(l_mat)?);
    }
    Ok(out)
}

/// Classical Fisher information of a projective measurement,
/// `I_ij = Σ_k ∂_i p(k) ∂_j p(k) / p(k)` over outcomes with
/// `p(k)` above the zero-probability threshold.
pub fn cfi(basis: &ProjectiveBasis, model: &PureStateModel, theta: &[f64]) -> Result<DMatrix<f64>> {
    if basis.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: basis.dim() });
    }
    let psi = model.state(theta)?;
    let derivs = model.projected_derivatives(theta)?;
    let m = model.param_dim();
    let mut info = DMatrix::zeros(m, m);
    for v in basis.vectors() {
        let amp = v.amplitudes().dotc(psi.amplitudes());
        let p = amp.norm_sqr();
        if p <= tol::ZERO_PROB {
            continue;
        }
        let dp: Vec<f64> =
            derivs.iter().map(|d| 2.0 * (v.amplitudes().dotc(d) * amp.conj()).re).collect();
        for i in 0..m {
            for j in 0..m {
                info[(i, j)] += dp[i] * dp[j] / p;
            }
        }
    }
    Ok(info)
}

/// Antisymmetric compatibility matrix `Im <∂_i ψ|∂_j ψ>` (gauge-projected
/// derivatives) and whether all entries vanish to 1e-8. A multiparameter
/// pure-state model saturates the Cramér-Rao bound iff this vanishes.
pub fn compatibility(model: &PureStateModel, theta: &[f64]) -> Result<(DMatrix<f64>, bool)> {
    let derivs = model.projected_derivatives(theta)?;
    let m = model.param_dim();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = derivs[i].dotc(&derivs[j]).im;
        }
    }
    let ok = k.amax() < tol::ITERATIVE;
    Ok((k, ok))
}

/// Saturation check for a single outcome of a projective measurement.
#[derive(Debug, Clone, Serialize)]
pub struct QcrbOutcomeCheck {
    pub outcome: usize,
    pub prob: f64,
    /// `λ = <v|ψ> / <v|Lψ>` when defined (positive-probability branch).
    pub lambda_re: Option<f64>,
    pub lambda_im: Option<f64>,
    /// Violation magnitude for this outcome: relative imaginary part of λ
    /// on the positive-probability branch, `|<v|Lψ>|²` on the
    /// zero-probability branch.
    pub margin: f64,
    pub ok: bool,
}

/// Per-outcome saturation report for a one-parameter model.
#[derive(Debug, Clone, Serialize)]
pub struct QcrbReport {
    pub outcomes: Vec<QcrbOutcomeCheck>,
    pub achievable: bool,
    pub worst_margin: f64,
}

/// Check whether a projective measurement saturates the quantum
/// Cramér-Rao bound of a one-parameter pure-state model. For each outcome
/// with positive probability there must be a real λ with
/// `<v|ψ> = λ <v|Lψ>`; outcomes with zero probability must carry no
/// information, `|<v|Lψ>|² = 0`.
pub fn qcrb_conditions(
    basis: &ProjectiveBasis,
    model: &PureStateModel,
    theta: &[f64],
) -> Result<QcrbReport> {
    if model.param_dim() != 1 {
        return Err(Error::InvalidArgument {
            detail: "saturation checker handles one-parameter models; use `compatibility` for \
                     multiparameter models"
                .into(),
        });
    }
    let psi = model.state(theta)?;
    let sld = sld_pure(model, theta)?.remove(0);
    let l_psi: DVector<Complex64> = sld.matrix() * psi.amplitudes();

    let mut outcomes = Vec::with_capacity(basis.dim());
    let mut worst: f64 = 0.0;
    for (i, v) in basis.vectors().iter().enumerate() {
        let z = v.amplitudes().dotc(psi.amplitudes());
        let w = v.amplitudes().dotc(&l_psi);
        let p = z.norm_sqr();
        let check = if p > tol::ZERO_PROB {
            if w.norm() < tol::ZERO_PROB {
                // <v|Lψ> = 0 with <v|ψ> != 0: no λ exists.
                QcrbOutcomeCheck {
                    outcome: i,
                    prob: p,
                    lambda_re: None,
                    lambda_im: None,
                    margin: z.norm(),
                    ok: false,
                }
            } else {
                let lambda = z / w;
                let margin = lambda.im.abs() / lambda.norm().max(1e-300);
                QcrbOutcomeCheck {
                    outcome: i,
                    prob: p,
                    lambda_re: Some(lambda.re),
                    lambda_im: Some(lambda.im),
                    margin,
                    ok: margin < tol::ITERATIVE,
                }
            }
        } else {
            // Tr(M_i L ρ L) = |<v|Lψ>|² must vanish.
            let margin = w.norm_sqr();
            QcrbOutcomeCheck {
                outcome: i,
                prob: p,
                lambda_re: None,
                lambda_im: None,
                margin,
                ok: margin < tol::ALGEBRAIC,
            }
        };
        worst = worst.max(check.margin * if check.ok { 0.0 } else { 1.0 });
        outcomes.push(check);
    }
    let achievable = outcomes.iter().all(|c| c.ok);
    Ok(QcrbReport { outcomes, achievable, worst_margin: worst })
}

/// Bundle of Fisher quantities for one model point and one measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherReport {
    pub qfi: Vec<Vec<f64>>,
    pub cfi: Vec<Vec<f64>>,
    pub compat: Vec<Vec<f64>>,
    pub achievable: bool,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Build a [`FisherReport`], verifying positive semidefiniteness of both
/// information matrices and the ordering `cfi ⪯ qfi`.
pub fn fisher_report(
    model: &PureStateModel,
    theta: &[f64],
    basis: &ProjectiveBasis,
) -> Result<FisherReport> {
    let qfi = qfi_pure(model, theta)?;
    let cfi_m = cfi(basis, model, theta)?;
    let (compat, achievable) = compatibility(model, theta)?;
    if min_symmetric_eigenvalue(&qfi) < -tol::ALGEBRAIC
        || min_symmetric_eigenvalue(&cfi_m) < -tol::ALGEBRAIC
    {
        return Err(Error::NumericalFailure { detail: "information matrix not PSD".into() });
    }
    let gap = &qfi - &cfi_m;
    if min_symmetric_eigenvalue(&gap) < -tol::ITERATIVE {
        return Err(Error::NumericalFailure {
            detail: "classical information exceeds quantum information".into(),
        });
    }
    Ok(FisherReport {
        qfi: to_rows(&qfi),
        cfi: to_rows(&cfi_m),
        compat: to_rows(&compat),
        achievable,
    })
}
