//! Construction of the measurement bases used by the two-stage
//! estimators: exact null bases, the displaced qubit basis, the Bures
//! pair, the ancilla-assisted general scheme driven by a Holevo solution,
//! and the rotated real-coefficient basis that saturates the Cramér-Rao
//! bound.
//!
//! All constructions rotate an orthonormal basis containing the
//! (phase-fixed) reference state by the exact matrix exponential of a
//! small generator with angle `δ_n = n^{-1/2+3ε}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::gaussian::HolevoSolution;
use crate::models::{LinearizedModel, PureStateModel};
use crate::quantum::{complete_basis, exp_generator, HermitianOp, ProjectiveBasis, StateVector};
use crate::tol;
use crate::{Error, Result};

/// Sample-size schedule of the two-stage procedure with displacement
/// exponent ε: stage one uses `ñ = ⌈n^{1-ε}⌉` samples, the measurement
/// basis is rotated by `δ_n = n^{-1/2+3ε}` (so `√n δ_n = Δ_n = n^{3ε}`),
/// and the stage-one confidence radius is `r_n = n^{-1/2+ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementSchedule {
    epsilon: f64,
    n: u64,
    n_tilde: u64,
    delta_n: f64,
    big_delta_n: f64,
    r_n: f64,
}

impl DisplacementSchedule {
    /// Schedule with the exponent restricted to (0, 1/10), the range for
    /// which the displaced-null estimators are asymptotically optimal.
    pub fn new(epsilon: f64, n: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.1) {
            return Err(Error::InvalidArgument {
                detail: format!("epsilon {epsilon} outside (0, 1/10)"),
            });
        }
        Self::build(epsilon, n)
    }

    /// Schedule with the exponent allowed up to 0.45. Only the stage-one
    /// quantities (`ñ`, `r_n`) are meaningful in this regime; it exists so
    /// the naive-null negative result can be demonstrated at sample sizes
    /// where the divergence is visible.
    pub fn new_relaxed(epsilon: f64, n: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.45) {
            return Err(Error::InvalidArgument {
                detail: format!("epsilon {epsilon} outside (0, 0.45]"),
            });
        }
        Self::build(epsilon, n)
    }

    fn build(epsilon: f64, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument { detail: "sample size below 2".into() });
        }
        let nf = n as f64;
        let big_delta_n = nf.powf(3.0 * epsilon);
        let delta_n = big_delta_n / nf.sqrt();
        let sched = Self {
            epsilon,
            n,
            n_tilde: nf.powf(1.0 - epsilon).ceil() as u64,
            delta_n,
            big_delta_n,
            r_n: nf.powf(-0.5 + epsilon),
        };
        // δ_n √n = Δ_n by construction; δ_n/r_n = n^{2ε} > 1 restores
        // identifiability inside the confidence interval.
        debug_assert!((sched.delta_n * nf.sqrt() - big_delta_n).abs() <= 1e-12 * big_delta_n);
        debug_assert!(sched.delta_n > sched.r_n);
        Ok(sched)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Stage-one sample size `⌈n^{1-ε}⌉`.
    pub fn n_tilde(&self) -> u64 {
        self.n_tilde
    }

    /// Basis rotation angle `δ_n = n^{-1/2+3ε}`.
    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    /// `Δ_n = √n δ_n = n^{3ε}`.
    pub fn big_delta_n(&self) -> f64 {
        self.big_delta_n
    }

    /// Stage-one confidence radius `n^{-1/2+ε}`.
    pub fn r_n(&self) -> f64 {
        self.r_n
    }
}

/// Basis whose first vector is the (phase-fixed) model state at the
/// reference parameter, completed deterministically.
pub fn null_basis(model: &PureStateModel, theta_ref: &[f64]) -> Result<ProjectiveBasis> {
    let psi = model.state(theta_ref)?.phase_fixed();
    complete_basis(&[psi], model.dim())
}

/// Rotated qubit basis `{exp(-i τ σ_y)|0>, exp(-i τ σ_y)|1>}` at
/// `τ = θ̃ + δ_n`.
pub fn displaced_basis_qubit(theta_ref: f64, sched: &DisplacementSchedule) -> ProjectiveBasis {
    let u = exp_generator(&HermitianOp::sigma_y_pair(2, 0, 1), theta_ref + sched.delta_n());
    ProjectiveBasis::canonical(2).rotated(&u).expect("rotation preserves orthonormality")
}

/// Generator `Σ_k coeff_k · σ(v_0, v_k)` acting between the vectors of a
/// basis, with σ of the y type (`i|k><0| - i|0><k|`) or x type.
fn collective_generator(
    basis: &ProjectiveBasis,
    coeffs: &[f64],
    y_type: bool,
) -> Result<HermitianOp> {
    let dim = basis.dim();
    let b0 = basis.vector(0).amplitudes();
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, &c) in coeffs.iter().enumerate() {
        let bk = basis.vector(k + 1).amplitudes();
        let ket_bra = bk * b0.adjoint();
        let bra_ket = b0 * bk.adjoint();
        if y_type {
            g += (&ket_bra - &bra_ket) * Complex64::new(0.0, c);
        } else {
            g += (&ket_bra + &bra_ket) * Complex64::new(c, 0.0);
        }
    }
    HermitianOp::new(g)
}

/// The two displaced bases of the full-state (Bures) scheme: the base
/// basis rotated by `exp(-i δ_n Σ_k σ_y^k)` and by `exp(+i δ_n Σ_k σ_x^k)`.
/// The first reads out the real parts of the local coordinates, the
/// second the imaginary parts.
pub fn displaced_bases_bures(
    base: &ProjectiveBasis,
    sched: &DisplacementSchedule,
) -> Result<(ProjectiveBasis, ProjectiveBasis)> {
    let d = base.dim();
    if d < 2 {
        return Err(Error::InvalidArgument { detail: "need dimension at least 2".into() });
    }
    let ones = vec![1.0; d - 1];
    let gy = collective_generator(base, &ones, true)?;
    let gx = collective_generator(base, &ones, false)?;
    let b1 = base.rotated(&exp_generator(&gy, sched.delta_n()))?;
    let b2 = base.rotated(&exp_generator(&gx, -sched.delta_n()))?;
    Ok((b1, b2))
}

/// Map a quadrature vector of the (possibly doubled) Gaussian system to
/// the corresponding vector in `C^d ⊗ C^d`: the complex amplitude on
/// system mode `k` multiplies `|k> ⊗ |0'>`, the amplitude on ancilla mode
/// `k` multiplies `|0> ⊗ |k'>`.
fn clt_vector(quad: &DVector<Complex64>, d: usize) -> DVector<Complex64> {
    let modes = d - 1;
    let mut v = DVector::zeros(d * d);
    for k in 0..modes {
        v[(k + 1) * d] = quad[k]; // |k+1> ⊗ |0'>
        v[k + 1] = quad[modes + k]; // |0> ⊗ |k+1'>
    }
    v
}

fn general_rotated_vectors(
    lin: &LinearizedModel,
    holevo: &HolevoSolution,
    sched: &DisplacementSchedule,
) -> Result<(ProjectiveBasis, Vec<DVector<Complex64>>)> {
    let d = lin.dim();
    let m = holevo.quad_vectors.len();
    if holevo.quad_vectors.iter().any(|q| q.len() != 2 * (d - 1)) {
        return Err(Error::DimensionMismatch {
            expected: 2 * (d - 1),
            got: holevo.quad_vectors.first().map(|q| q.len()).unwrap_or(0),
        });
    }
    let dim = d * d;
    // Reference vector |0~> = |psi_ref> ⊗ |0'> in the linearization basis;
    // we work in the product of the lin basis with the canonical ancilla
    // basis, so |0~> is the tensor of basis vector 0 with e_0.
    let anc0 = StateVector::basis_state(d, 0);
    let tilde0 = lin_vector_tensor(lin, 0, &anc0);

    // CLT vectors |k~> from the quadrature rows of the Holevo solution.
    let mut tilde: Vec<StateVector> = vec![tilde0];
    for q in &holevo.quad_vectors {
        let v = clt_vector(q, d);
        // Components are expressed in the product of the lin basis with
        // the canonical ancilla basis; expand into the ambient basis.
        let ambient = expand_in_lin_basis(lin, &v);
        tilde.push(StateVector::new(ambient).map_err(|_| Error::NotOrthonormal {
            max_dev: (1.0 - clt_norm(&v)).abs(),
        })?);
    }
    // Orthonormality under the CLT inner product; a failure here signals
    // an inconsistent Holevo solution.
    for (i, a) in tilde.iter().enumerate() {
        for (j, b) in tilde.iter().enumerate() {
            let ov = crate::quantum::inner_product(a, b)?;
            let target = if i == j { 1.0 } else { 0.0 };
            if (ov - Complex64::new(target, 0.0)).norm() > tol::ALGEBRAIC {
                return Err(Error::NotOrthonormal {
                    max_dev: (ov - Complex64::new(target, 0.0)).norm(),
                });
            }
        }
    }

    let basis = complete_basis(&tilde, dim)?;
    // Rotate by exp(-i δ Σ_k σ_y^{k~}) built on the first m+1 vectors.
    let ones = vec![1.0; m];
    let gen = collective_generator_on(&basis.vectors()[..=m], &ones, dim)?;
    let rotated = basis.rotated(&exp_generator(&gen, sched.delta_n()))?;

    let z_vectors: Vec<DVector<Complex64>> = tilde[1..]
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut z = DVector::<Complex64>::zeros(dim);
            for (k, v) in tilde[1..].iter().enumerate() {
                z += v.amplitudes() * Complex64::new(holevo.t[(i, k)], 0.0);
            }
            z
        })
        .collect();
    Ok((rotated, z_vectors))
}

fn collective_generator_on(
    vectors: &[StateVector],
    coeffs: &[f64],
    dim: usize,
) -> Result<HermitianOp> {
    let b0 = vectors[0].amplitudes();
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, &c) in coeffs.iter().enumerate() {
        let bk = vectors[k + 1].amplitudes();
        let ket_bra = bk * b0.adjoint();
        let bra_ket = b0 * bk.adjoint();
        g += (&ket_bra - &bra_ket) * Complex64::new(0.0, c);
    }
    HermitianOp::new(g)
}

/// Tensor of lin-basis vector `k` with an ancilla state.
fn lin_vector_tensor(lin: &LinearizedModel, k: usize, anc: &StateVector) -> StateVector {
    lin.basis().vector(k).tensor(anc)
}

fn clt_norm(v: &DVector<Complex64>) -> f64 {
    v.norm()
}

/// Expand a vector expressed in (lin basis) ⊗ (canonical ancilla) into the
/// ambient canonical basis of `C^{d²}`.
fn expand_in_lin_basis(lin: &LinearizedModel, coeffs: &DVector<Complex64>) -> DVector<Complex64> {
    let d = lin.dim();
    let mut out = DVector::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            let c = coeffs[a * d + b];
            if c.norm() == 0.0 {
                continue;
            }
            let va = lin.basis().vector(a).amplitudes();
            for i in 0..d {
                out[i * d + b] += c * va[i];
            }
        }
    }
    out
}

/// Ancilla-assisted displaced-null basis on `C^d ⊗ C^d` for a general
/// model: the quadrature vectors of the Holevo solution are mapped to
/// orthonormal vectors `|k~>` spanning
/// `span{|k>⊗|0'>, |0>⊗|k'>}`, completed to a basis and rotated by
/// `exp(-i δ_n Σ_k σ_y^{k~})`. Outcome `k ∈ {1..m}` carries the signal;
/// the estimator reads only those frequencies.
pub fn displaced_basis_general(
    lin: &LinearizedModel,
    holevo: &HolevoSolution,
    sched: &DisplacementSchedule,
) -> Result<ProjectiveBasis> {
    Ok(general_rotated_vectors(lin, holevo, sched)?.0)
}

/// Rotated real-coefficient basis that saturates the Cramér-Rao bound for
/// models with (phase-alignable) real derivative overlaps. Returns the
/// basis together with the aligned real coefficient matrix `C`
/// (`c_{kj} = <k|∂_j ψ>`); errors if some row of the complex coefficient
/// matrix has entries of genuinely different phases, or if a rotation
/// coefficient vanishes.
pub fn qcrb_basis(
    lin: &LinearizedModel,
    g: &[f64],
    sched: &DisplacementSchedule,
) -> Result<(ProjectiveBasis, DMatrix<f64>)> {
    let d = lin.dim();
    let m = lin.param_dim();
    if g.len() != d - 1 {
        return Err(Error::DimensionMismatch { expected: d - 1, got: g.len() });
    }
    if g.contains(&0.0) {
        return Err(Error::InvalidArgument { detail: "rotation coefficients must be nonzero".into() });
    }
    let c = lin.coefficients();
    // Per-row phase alignment: multiply |k> by a unit phase making the
    // k-th row real (largest entry made real positive). Feasible iff the
    // row has a constant complex phase.
    let mut vectors: Vec<StateVector> = vec![lin.basis().vector(0).clone()];
    let mut c_real = DMatrix::<f64>::zeros(d - 1, m);
    for k in 0..d - 1 {
        let row: Vec<Complex64> = (0..m).map(|j| c[(k, j)]).collect();
        let (mut max_abs, mut max_j) = (0.0f64, 0usize);
        for (j, z) in row.iter().enumerate() {
            if z.norm() > max_abs {
                max_abs = z.norm();
                max_j = j;
            }
        }
        let phase = if max_abs < tol::ZERO_PROB {
            Complex64::new(1.0, 0.0)
        } else {
            row[max_j].conj() / max_abs
        };
        let mut row_norm = 0.0f64;
        let mut imag_dev = 0.0f64;
        for (j, z) in row.iter().enumerate() {
            let aligned = z * phase;
            c_real[(k, j)] = aligned.re;
            row_norm = row_norm.max(aligned.norm());
            imag_dev = imag_dev.max(aligned.im.abs());
        }
        if imag_dev > tol::ITERATIVE * row_norm.max(1.0) {
            return Err(Error::NoRealBasis {
                detail: format!("row {k} has non-constant phase (imag dev {imag_dev:e})"),
            });
        }
        let v = lin.basis().vector(k + 1).amplitudes() * phase;
        vectors.push(StateVector::new(v)?);
    }
    // rank(C) = m is required for the estimator's normal equations.
    let svals = c_real.clone().svd(false, false).singular_values;
    if svals.len() < m || svals.min() < tol::RANK_REL * svals.max() {
        return Err(Error::RankDeficient { detail: "real coefficient matrix rank below m".into() });
    }
    let aligned = crate::quantum::ProjectiveBasis::new(vectors)?;
    let gen = collective_generator(&aligned, g, true)?;
    let rotated = aligned.rotated(&exp_generator(&gen, sched.delta_n()))?;
    Ok((rotated, c_real))
}

/// Coefficient table for the one-shot-optimal estimator built on the
/// rotated basis: overlaps of the rotated vectors with the optimal
/// observable vectors `|z_i>` and with the reference state.
#[derive(Debug, Clone)]
pub struct MatsumotoTable {
    /// `(m+1) x m`: row `k` holds `<b_k|z_i>` for `k = 0..m`.
    pub z_overlap: DMatrix<Complex64>,
    /// `<b_k|ψ_ref ⊗ 0'>` for `k = 0..m`.
    pub psi_overlap: Vec<Complex64>,
}

/// The rotated vectors of [`displaced_basis_general`] together with the
/// overlap table needed by the one-shot-form estimator. Requires a
/// nonzero rotation; at `δ_n = 0` the reference-state overlaps of the
/// signal vectors vanish and no estimator exists.
pub fn matsumoto_basis(
    lin: &LinearizedModel,
    holevo: &HolevoSolution,
    sched: &DisplacementSchedule,
) -> Result<(ProjectiveBasis, MatsumotoTable)> {
    let (basis, z_vectors) = general_rotated_vectors(lin, holevo, sched)?;
    let m = holevo.quad_vectors.len();
    let d = lin.dim();
    let anc0 = StateVector::basis_state(d, 0);
    let psi_ref = lin_vector_tensor(lin, 0, &anc0);

    let mut z_overlap = DMatrix::<Complex64>::zeros(m + 1, m);
    let mut psi_overlap = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let bk = basis.vector(k);
        let ov = crate::quantum::inner_product(bk, &psi_ref)?;
        if ov.norm() < tol::ZERO_PROB {
            return Err(Error::VanishingOverlap {
                detail: format!("<b_{k}|psi_ref> = 0; the rotation angle must be nonzero"),
            });
        }
        psi_overlap.push(ov);
        for (i, z) in z_vectors.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (idx, zc) in z.iter().enumerate() {
                s += bk.amplitudes()[idx].conj() * zc;
            }
            z_overlap[(k, i)] = s;
        }
    }
    Ok((basis, MatsumotoTable { z_overlap, psi_overlap }))
}
