//! Parametric pure-state families and the local linearization used by the
//! measurement constructions.
//!
//! Built-in models:
//! * [`qubit_rotation_model`] — one-parameter family
//!   `cos θ |0> + sin θ |1>` on Θ = (-π/8, π/8);
//! * [`local_qudit_model`] — full local chart of a d-level pure state,
//!   2(d-1) parameters, `exp(-i Σ_k (u1_k σy_k - u2_k σx_k)) |0>`;
//! * [`real_rotation_model`] — (d-1)-parameter family with all-real
//!   amplitudes, `exp(-i Σ_k θ_k σy_k) |0>` (compatible multiparameter
//!   model whose Cramér-Rao bound is saturable).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::quantum::{complete_basis, HermitianOp, ProjectiveBasis, StateVector};
use crate::tol;
use crate::{Error, Result};

type StateFn = Arc<dyn Fn(&[f64]) -> DVector<Complex64> + Send + Sync>;
type DerivFn = Arc<dyn Fn(&[f64]) -> Vec<DVector<Complex64>> + Send + Sync>;

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::InvalidArgument { detail: "invalid domain box".into() });
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta.iter().zip(&self.lo).all(|(t, l)| t >= l)
            && theta.iter().zip(&self.hi).all(|(t, h)| t <= h)
    }

    /// Clamp into the closure of the box.
    pub fn clamp(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&t, (&l, &h))| t.clamp(l, h))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| 0.5 * (l + h)).collect()
    }

    /// Uniform draw over the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| rng.gen_range(l..h)).collect()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
}

/// Parametric family of pure states with an optional analytic derivative.
/// Without one, derivatives fall back to fourth-order central finite
/// differences with step 1e-5.
#[derive(Clone)]
pub struct PureStateModel {
    name: String,
    dim: usize,
    param_dim: usize,
    state_fn: StateFn,
    derivative_fn: Option<DerivFn>,
    domain: Domain,
}

impl std::fmt::Debug for PureStateModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PureStateModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("param_dim", &self.param_dim)
            .finish()
    }
}

const FD_STEP: f64 = 1e-5;

impl PureStateModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        param_dim: usize,
        state_fn: StateFn,
        derivative_fn: Option<DerivFn>,
        domain: Domain,
    ) -> Result<Self> {
        if domain.dim() != param_dim {
            return Err(Error::DimensionMismatch { expected: param_dim, got: domain.dim() });
        }
        Ok(Self { name: name.into(), dim, param_dim, state_fn, derivative_fn, domain })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Evaluate the state, checking normalization.
    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        if theta.len() != self.param_dim {
            return Err(Error::DimensionMismatch { expected: self.param_dim, got: theta.len() });
        }
        StateVector::new((self.state_fn)(theta))
    }

    /// Raw parameter derivatives of the state vector, one per parameter.
    /// Analytic when available, otherwise fourth-order central differences.
    pub fn derivatives(&self, theta: &[f64]) -> Result<Vec<DVector<Complex64>>> {
        if theta.len() != self.param_dim {
            return Err(Error::DimensionMismatch { expected: self.param_dim, got: theta.len() });
        }
        if let Some(df) = &self.derivative_fn {
            return Ok(df(theta));
        }
        let mut out = Vec::with_capacity(self.param_dim);
        for j in 0..self.param_dim {
            let shifted = |s: f64| {
                let mut t = theta.to_vec();
                t[j] += s;
                (self.state_fn)(&t)
            };
            let d = (shifted(-2.0 * FD_STEP) - shifted(2.0 * FD_STEP)
                + (shifted(FD_STEP) - shifted(-FD_STEP)) * Complex64::new(8.0, 0.0))
                / Complex64::new(12.0 * FD_STEP, 0.0);
            out.push(d);
        }
        Ok(out)
    }

    /// Gauge-projected derivatives, orthogonal to the state.
    pub fn projected_derivatives(&self, theta: &[f64]) -> Result<Vec<DVector<Complex64>>> {
        let psi = self.state(theta)?;
        Ok(self
            .derivatives(theta)?
            .into_iter()
            .map(|d| project_derivative_gauge(&psi, &d))
            .collect())
    }
}

/// `dψ - <ψ|dψ> ψ`: removes the component along the state so that
/// `<ψ|dψ> = 0` afterwards.
pub fn project_derivative_gauge(psi: &StateVector, dpsi: &DVector<Complex64>) -> DVector<Complex64> {
    let overlap = psi.amplitudes().dotc(dpsi);
    dpsi - psi.amplitudes() * overlap
}

/// Numerically stable `sin(r)/r`.
fn sinc(r: f64) -> f64 {
    if r.abs() < 1e-6 {
        1.0 - r * r / 6.0
    } else {
        r.sin() / r
    }
}

/// `cos θ |0> + sin θ |1>` on Θ = (-π/8, π/8); analytic derivative.
pub fn qubit_rotation_model() -> PureStateModel {
    let state: StateFn = Arc::new(|theta: &[f64]| {
        let t = theta[0];
        DVector::from_column_slice(&[Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0)])
    });
    let deriv: DerivFn = Arc::new(|theta: &[f64]| {
        let t = theta[0];
        vec![DVector::from_column_slice(&[
            Complex64::new(-t.sin(), 0.0),
            Complex64::new(t.cos(), 0.0),
        ])]
    });
    let dom = Domain::new(vec![-std::f64::consts::FRAC_PI_8], vec![std::f64::consts::FRAC_PI_8])
        .unwrap();
    PureStateModel::new("qubit_rotation", 2, 1, state, Some(deriv), dom).unwrap()
}

/// Parameter box half-width keeping the chart inside the hemisphere where
/// the `|0>` amplitude stays positive (rotation angle below π/4).
fn chart_halfwidth(param_dim: usize) -> f64 {
    (0.75 / (param_dim as f64).sqrt()).min(0.35)
}

/// Local chart of a completely unknown d-level pure state: parameters
/// `u = (u1^1, u2^1, ..., u1^{d-1}, u2^{d-1})` and state
/// `exp(-i Σ_k (u1^k σy_k - u2^k σx_k)) |0>`, which evaluates in closed
/// form to `cos r |0> + sinc(r) Σ_k w_k |k>` with `w_k = u1^k + i u2^k`.
pub fn local_qudit_model(d: usize) -> Result<PureStateModel> {
    if d < 2 {
        return Err(Error::InvalidArgument { detail: format!("dimension {d} < 2") });
    }
    let m = 2 * (d - 1);
    let state: StateFn = Arc::new(move |u: &[f64]| {
        let w: Vec<Complex64> =
            (0..d - 1).map(|k| Complex64::new(u[2 * k], u[2 * k + 1])).collect();
        let r = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut amps = DVector::zeros(d);
        amps[0] = Complex64::new(r.cos(), 0.0);
        let s = sinc(r);
        for k in 0..d - 1 {
            amps[k + 1] = w[k] * s;
        }
        amps
    });
    let hw = chart_halfwidth(m);
    let dom = Domain::new(vec![-hw; m], vec![hw; m])?;
    PureStateModel::new(format!("local_qudit:{d}"), d, m, state, None, dom)
}

/// Real rotation family: `exp(-i Σ_k θ_k σy_k) |0>` with d-1 real
/// parameters and all-real amplitudes. All parameters can be estimated
/// simultaneously at the Cramér-Rao bound.
pub fn real_rotation_model(d: usize) -> Result<PureStateModel> {
    if d < 2 {
        return Err(Error::InvalidArgument { detail: format!("dimension {d} < 2") });
    }
    let m = d - 1;
    let state: StateFn = Arc::new(move |theta: &[f64]| {
        let r = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut amps = DVector::zeros(d);
        amps[0] = Complex64::new(r.cos(), 0.0);
        let s = sinc(r);
        for k in 0..m {
            amps[k + 1] = Complex64::new(theta[k] * s, 0.0);
        }
        amps
    });
    let hw = chart_halfwidth(m);
    let dom = Domain::new(vec![-hw; m], vec![hw; m])?;
    PureStateModel::new(format!("real_rotation:{d}"), d, m, state, None, dom)
}

/// Local reparametrization `u ↦ ψ(θ̃ + u/√n)` around a base point.
#[derive(Debug, Clone)]
pub struct LocalChart<'a> {
    model: &'a PureStateModel,
    base: Vec<f64>,
    n: f64,
}

impl<'a> LocalChart<'a> {
    pub fn new(model: &'a PureStateModel, base: Vec<f64>, n: u64) -> Result<Self> {
        if base.len() != model.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.param_dim(),
                got: base.len(),
            });
        }
        Ok(Self { model, base, n: n as f64 })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// State at local parameter `u`.
    pub fn state_at(&self, u: &[f64]) -> Result<StateVector> {
        let theta: Vec<f64> =
            self.base.iter().zip(u).map(|(&b, &ui)| b + ui / self.n.sqrt()).collect();
        self.model.state(&theta)
    }
}

/// Linearization of a model at a point: an orthonormal basis whose first
/// vector is the (phase-fixed) state, the complex coefficient matrix
/// `c_kj = <k|∂_j ψ>` of the gauge-projected derivatives, and the rotation
/// generators `S_j = Σ_k (Re c_kj σy_k - Im c_kj σx_k)` it induces.
#[derive(Debug, Clone)]
pub struct LinearizedModel {
    basis: ProjectiveBasis,
    c: DMatrix<Complex64>,
    generators: Vec<HermitianOp>,
}

impl LinearizedModel {
    pub fn basis(&self) -> &ProjectiveBasis {
        &self.basis
    }

    /// `(d-1) x m` coefficient matrix.
    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn generators(&self) -> &[HermitianOp] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn param_dim(&self) -> usize {
        self.c.ncols()
    }

    /// State of the linearized family at local parameter `u` (unit sample
    /// size scaling handled by the caller): `exp(-i Σ_j u_j S_j) |b_0>`.
    pub fn linearized_state(&self, u: &[f64]) -> Result<StateVector> {
        let dim = self.dim();
        let mut g = DMatrix::<Complex64>::zeros(dim, dim);
        for (j, s) in self.generators.iter().enumerate() {
            g += s.matrix() * Complex64::new(u[j], 0.0);
        }
        let gen = HermitianOp::new(g)?;
        crate::quantum::apply_exp_generator(&gen, 1.0, self.basis.vector(0))
    }
}

/// Generators `S_j` built from a coefficient matrix in a given basis.
fn generators_from_coefficients(
    basis: &ProjectiveBasis,
    c: &DMatrix<Complex64>,
) -> Result<Vec<HermitianOp>> {
    let dim = basis.dim();
    let m = c.ncols();
    let mut gens = Vec::with_capacity(m);
    for j in 0..m {
        let mut g = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..dim - 1 {
            let cq = c[(k, j)].re;
            let cp = c[(k, j)].im;
            let b0 = basis.vector(0).amplitudes();
            let bk = basis.vector(k + 1).amplitudes();
            // sigma_y = i|k><0| - i|0><k|, sigma_x = |k><0| + |0><k| in the
            // basis vectors.
            let ket_bra = bk * b0.adjoint();
            let bra_ket = b0 * bk.adjoint();
            g += (&ket_bra - &bra_ket) * Complex64::new(0.0, cq);
            g -= (&ket_bra + &bra_ket) * Complex64::new(cp, 0.0);
        }
        gens.push(HermitianOp::new(g)?);
    }
    Ok(gens)
}

/// Linearize `model` at `theta`: complete the (phase-fixed) state to a
/// basis, project derivatives onto the orthogonal complement of the state
/// and read off the coefficient matrix. Errors if the stacked real matrix
/// `[Re C; Im C]` has rank below the parameter dimension (the parameter
/// would not be identifiable from the local state).
pub fn linearize_at(model: &PureStateModel, theta: &[f64]) -> Result<LinearizedModel> {
    let psi = model.state(theta)?.phase_fixed();
    let basis = complete_basis(std::slice::from_ref(&psi), model.dim())?;
    let derivs = model.projected_derivatives(theta)?;
    let d = model.dim();
    let m = model.param_dim();
    let mut c = DMatrix::<Complex64>::zeros(d - 1, m);
    for (j, dv) in derivs.iter().enumerate() {
        for k in 1..d {
            c[(k - 1, j)] = basis.vector(k).amplitudes().dotc(dv);
        }
    }
    // Identifiability: rank of C viewed as a real 2(d-1) x m matrix.
    let mut real_c = DMatrix::<f64>::zeros(2 * (d - 1), m);
    for k in 0..d - 1 {
        for j in 0..m {
            real_c[(k, j)] = c[(k, j)].re;
            real_c[(k + d - 1, j)] = c[(k, j)].im;
        }
    }
    let svals = real_c.svd(false, false).singular_values;
    let smax = svals.max();
    if svals.iter().any(|&s| s < tol::RANK_REL * smax) || svals.len() < m || smax == 0.0 {
        return Err(Error::RankDeficient {
            detail: format!("coefficient matrix rank below {m}"),
        });
    }
    let generators = generators_from_coefficients(&basis, &c)?;
    Ok(LinearizedModel { basis, c, generators })
}

/// State in the chart defined by a basis: `cos r |b_0> + sinc(r) Σ w_k
/// |b_k>` for complex chart coordinates `w`.
pub fn chart_state(basis: &ProjectiveBasis, w: &[Complex64]) -> Result<StateVector> {
    if w.len() != basis.dim() - 1 {
        return Err(Error::DimensionMismatch { expected: basis.dim() - 1, got: w.len() });
    }
    let r = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let s = sinc(r);
    let mut amps = basis.vector(0).amplitudes() * Complex64::new(r.cos(), 0.0);
    for (k, &wk) in w.iter().enumerate() {
        amps += basis.vector(k + 1).amplitudes() * (wk * s);
    }
    StateVector::normalized(amps)
}

/// Invert [`chart_state`]: recover the chart coordinates of a state lying
/// in the hemisphere `|<b_0|ψ>| > 0` (up to global phase).
pub fn chart_inverse(basis: &ProjectiveBasis, psi: &StateVector) -> Result<Vec<Complex64>> {
    let d = basis.dim();
    let a0 = crate::quantum::inner_product(basis.vector(0), psi)?;
    if a0.norm() < 1e-9 {
        return Err(Error::VanishingOverlap {
            detail: "state orthogonal to the chart center".into(),
        });
    }
    let phase = a0.conj() / a0.norm();
    let r = a0.norm().clamp(-1.0, 1.0).acos();
    let scale = if r < 1e-12 { 1.0 } else { r / r.sin() };
    let mut w = Vec::with_capacity(d - 1);
    for k in 1..d {
        let ak = crate::quantum::inner_product(basis.vector(k), psi)? * phase;
        w.push(ak * scale);
    }
    Ok(w)
}
