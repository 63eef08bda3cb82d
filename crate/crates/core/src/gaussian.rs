//! Gaussian shift models and the Holevo bound.
//!
//! A pure Gaussian shift model on `d-1` modes is a family of coherent
//! states `|C u>` with unknown mean parameter `u ∈ R^m`. For a positive
//! weight matrix `W` the optimal weighted quadratic risk is
//!
//! ```text
//! H  =  min_B  1/2 ( Tr(W B Bᵀ) + Tr|√W B Ω Bᵀ √W| )     s.t.  B D = 1
//! ```
//!
//! over real `m x 2(d-1)` matrices, where `D` is the real displacement
//! map and `Ω` the symplectic form. The minimizer yields commuting
//! observables `Z = B R + B' R'` on the system extended by an ancilla in
//! the vacuum; this module computes `B`, the ancilla block `B'`, the
//! change of basis `T` onto vacuum quadratures, and the quadrature
//! vectors consumed by the measurement-design layer.
//!
//! A coherent-state companion sampler (quadratures, displaced photon
//! counting, counting-based homodyne estimate) is included for
//! cross-checks of the discrete constructions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, Normal, Poisson};

use crate::optim::{nelder_mead, NmOptions};
use crate::rng::{derive_seed, seeded_rng};
use crate::tol;
use crate::{Error, Result};

/// Symplectic form on `2n` coordinates ordered `(Q_1..Q_n, P_1..P_n)`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(k, n_modes + k)] = 1.0;
        o[(n_modes + k, k)] = -1.0;
    }
    o
}

/// Gaussian shift model `u ↦ |C u>` plus a weight matrix for the risk.
#[derive(Debug, Clone)]
pub struct GaussianShiftModel {
    modes: usize,
    c: DMatrix<Complex64>,
    d: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl GaussianShiftModel {
    /// Build from the complex displacement map `C` (rows = modes,
    /// columns = parameters) and weight `W`. The real displacement map is
    /// `D_{k,j} = √2 Re C_{kj}`, `D_{k+modes,j} = √2 Im C_{kj}`; it must
    /// have full column rank for the parameter to be identifiable.
    pub fn new(c: DMatrix<Complex64>, w: DMatrix<f64>) -> Result<Self> {
        let modes = c.nrows();
        let m = c.ncols();
        if w.nrows() != m || w.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: w.nrows() });
        }
        if (w.clone() - w.transpose()).amax() > tol::ALGEBRAIC {
            return Err(Error::InvalidArgument { detail: "weight matrix not symmetric".into() });
        }
        if w.clone().symmetric_eigen().eigenvalues.min() <= 0.0 {
            return Err(Error::InvalidArgument { detail: "weight matrix not positive".into() });
        }
        let mut d = DMatrix::zeros(2 * modes, m);
        for k in 0..modes {
            for j in 0..m {
                d[(k, j)] = std::f64::consts::SQRT_2 * c[(k, j)].re;
                d[(modes + k, j)] = std::f64::consts::SQRT_2 * c[(k, j)].im;
            }
        }
        let svals = d.clone().svd(false, false).singular_values;
        if svals.len() < m || svals.min() < tol::RANK_REL * svals.max() {
            return Err(Error::RankDeficient { detail: "displacement map rank below m".into() });
        }
        Ok(Self { modes, c, d, w })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn param_dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn displacement_complex(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn displacement_real(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn weight(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Mean of the canonical coordinates at parameter `u` (`= D u`).
    pub fn mean_quadratures(&self, u: &[f64]) -> DVector<f64> {
        &self.d * DVector::from_column_slice(u)
    }

    /// Coherent state at parameter `u`.
    pub fn coherent_state(&self, u: &[f64]) -> CoherentState {
        let uv = DVector::from_column_slice(u);
        let z = &self.c * uv.map(|x| Complex64::new(x, 0.0));
        CoherentState { z: z.iter().copied().collect() }
    }
}

/// Solution of the constrained risk minimization.
#[derive(Debug, Clone)]
pub struct HolevoSolution {
    /// Minimal weighted risk `1/2 (Tr(W B Bᵀ) + Tr|√W B Ω Bᵀ √W|)`.
    pub value: f64,
    /// Optimal system block, `m x 2(d-1)`, with `B D = 1`.
    pub b: DMatrix<f64>,
    /// Ancilla block with `B' Ω B'ᵀ = -B Ω Bᵀ`; absent when the optimal
    /// observables already commute on the system alone.
    pub b_prime: Option<DMatrix<f64>>,
    /// Invertible map with `[B | B'] = T Q̃` for orthonormal quadrature
    /// rows `Q̃`; the limit covariance of the estimator is `T Tᵀ / 2`.
    pub t: DMatrix<f64>,
    /// Quadrature vectors as complex amplitudes per mode: entry `k` holds
    /// the `Q_k + i P_k` coefficient for system modes, entry `modes + k`
    /// the same for ancilla modes.
    pub quad_vectors: Vec<DVector<Complex64>>,
    /// Final objective value of each restart (optimizer diagnostics).
    pub restart_values: Vec<f64>,
}

impl HolevoSolution {
    pub fn uses_ancilla(&self) -> bool {
        self.b_prime.is_some()
    }
}

fn sym_sqrt(w: &DMatrix<f64>, inverse: bool) -> DMatrix<f64> {
    let eig = w.clone().symmetric_eigen();
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| if inverse { 1.0 / l.sqrt() } else { l.sqrt() }),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Subgradient of the nuclear norm: `U Vᵀ` from the SVD.
fn nuclear_subgradient(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    &u * &vt
}

struct Objective<'a> {
    w: &'a DMatrix<f64>,
    s: DMatrix<f64>, // W^{1/2}
    omega: DMatrix<f64>,
    b0: DMatrix<f64>,
    null: DMatrix<f64>, // columns span ker(Dᵀ)
}

impl<'a> Objective<'a> {
    fn b_of(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        if k.ncols() == 0 {
            self.b0.clone()
        } else {
            &self.b0 + k * self.null.transpose()
        }
    }

    fn value_of_b(&self, b: &DMatrix<f64>) -> f64 {
        let smooth = (self.w * b * b.transpose()).trace();
        let m = &self.s * b * &self.omega * b.transpose() * &self.s;
        0.5 * (smooth + nuclear_norm(&m))
    }

    fn value(&self, k: &DMatrix<f64>) -> f64 {
        self.value_of_b(&self.b_of(k))
    }

    fn gradient(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let b = self.b_of(k);
        let m = &self.s * &b * &self.omega * b.transpose() * &self.s;
        let g = nuclear_subgradient(&m);
        let grad_b =
            self.w * &b + (&self.s * (g.transpose() - &g) * &self.s * &b * &self.omega) * 0.5;
        grad_b * &self.null
    }
}

/// Orthonormalize `cols` (two Gram-Schmidt passes) and extend to an
/// orthonormal basis of `R^dim` with canonical candidates; the extension
/// spans the orthogonal complement of the input.
fn orthonormal_completion(cols: &[DVector<f64>], dim: usize) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let push_orth = |basis: &mut Vec<DVector<f64>>, v: &DVector<f64>| -> bool {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dot(&r);
                r -= b * c;
            }
        }
        let n = r.norm();
        if n > 1e-10 {
            basis.push(r / n);
            true
        } else {
            false
        }
    };
    for v in cols {
        push_orth(&mut basis, v);
    }
    let seeded = basis.len();
    while basis.len() < dim {
        let mut best: Option<(f64, usize)> = None;
        for k in 0..dim {
            let mut r = DVector::zeros(dim);
            r[k] = 1.0;
            for b in &basis {
                let c = b.dot(&r);
                r -= b * c;
            }
            let n = r.norm();
            if best.is_none_or(|(bn, _)| n > bn + 1e-15) {
                best = Some((n, k));
            }
        }
        let (_, k) = best.unwrap();
        let mut r = DVector::zeros(dim);
        r[k] = 1.0;
        push_orth(&mut basis, &r);
    }
    basis.split_off(seeded)
}

/// Ancilla block `B'` with `B' Ω B'ᵀ = -M` minimizing `Tr(W B' B'ᵀ)`
/// (equal to `Tr|√W M √W|`), realized on `n_modes` vacuum ancilla modes.
fn ancilla_block(
    m_mat: &DMatrix<f64>,
    w: &DMatrix<f64>,
    n_modes: usize,
) -> Result<DMatrix<f64>> {
    let m = m_mat.nrows();
    let s = sym_sqrt(w, false);
    let s_inv = sym_sqrt(w, true);
    let mt = &s * m_mat * &s; // antisymmetric
    let a = mt.transpose() * &mt; // = -Mt^2, symmetric PSD
    let eig = a.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.max().max(0.0);

    let mut pairs: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new();
    let mut used: Vec<DVector<f64>> = Vec::new();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    for &i in &order {
        let lam2 = eig.eigenvalues[i].max(0.0);
        if lam2 <= 1e-18 * lam_max.max(1.0) {
            continue;
        }
        let mut x: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        for u in &used {
            let c = u.dot(&x);
            x -= u * c;
        }
        let norm = x.norm();
        if norm < 1e-8 {
            continue; // eigenvector already covered by a previous pair
        }
        x /= norm;
        let lam = lam2.sqrt();
        let y = &mt * &x / lam;
        used.push(x.clone());
        used.push(y.clone());
        pairs.push((x, y, lam));
    }
    if pairs.len() > n_modes {
        return Err(Error::NumericalFailure {
            detail: format!("need {} ancilla modes, have {n_modes}", pairs.len()),
        });
    }
    // B-tilde rows live on ancilla coordinates (Q'_i, P'_i); block i of
    // magnitude lam maps to sqrt(lam) on Q'_i (x-row) and P'_i (y-row).
    let mut b_tilde = DMatrix::<f64>::zeros(m, 2 * n_modes);
    for (i, (x, y, lam)) in pairs.iter().enumerate() {
        let c = lam.sqrt();
        for r in 0..m {
            b_tilde[(r, i)] += c * x[r];
            b_tilde[(r, n_modes + i)] += c * y[r];
        }
    }
    let b_prime = &s_inv * b_tilde;
    // Consistency: the constructed block must cancel the commutator and
    // cost exactly the nuclear term.
    let omega = symplectic_form(n_modes);
    let resid = (&b_prime * &omega * b_prime.transpose() + m_mat).amax();
    if resid > tol::ITERATIVE {
        return Err(Error::NumericalFailure {
            detail: format!("ancilla commutator residual {resid:e}"),
        });
    }
    Ok(b_prime)
}

/// Orthonormalize the rows of `z` and express them as `T` times the
/// orthonormal rows; errors if the rows are linearly dependent.
fn extract_t(z: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = z.nrows();
    let mut q_rows: Vec<DVector<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut r: DVector<f64> = z.row(j).transpose();
        for _ in 0..2 {
            for q in &q_rows {
                let c = q.dot(&r);
                r -= q * c;
            }
        }
        let n = r.norm();
        if n < 1e-10 {
            return Err(Error::RankDeficient { detail: "observable rows linearly dependent".into() });
        }
        q_rows.push(r / n);
    }
    let mut q = DMatrix::zeros(m, z.ncols());
    for (j, row) in q_rows.iter().enumerate() {
        q.set_row(j, &row.transpose());
    }
    let t = z * q.transpose();
    let recon = (&t * &q - z).amax();
    if recon > tol::ITERATIVE {
        return Err(Error::NumericalFailure {
            detail: format!("quadrature reconstruction residual {recon:e}"),
        });
    }
    Ok((t, q))
}

fn quad_vectors_from_rows(
    q: &DMatrix<f64>,
    modes: usize,
    ancilla: bool,
) -> Vec<DVector<Complex64>> {
    let m = q.nrows();
    (0..m)
        .map(|j| {
            DVector::from_fn(2 * modes, |idx, _| {
                if idx < modes {
                    Complex64::new(q[(j, idx)], q[(j, modes + idx)])
                } else if ancilla {
                    let k = idx - modes;
                    Complex64::new(q[(j, 2 * modes + k)], q[(j, 3 * modes + k)])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

fn finalize_solution(
    model: &GaussianShiftModel,
    b: DMatrix<f64>,
    value: f64,
    restart_values: Vec<f64>,
) -> Result<HolevoSolution> {
    let modes = model.modes();
    let omega = symplectic_form(modes);
    let s = sym_sqrt(model.weight(), false);
    let m_comm = &b * &omega * b.transpose();
    let nuc = nuclear_norm(&(&s * &m_comm * &s));

    let (b_prime, z) = if nuc > 1e-10 {
        let bp = ancilla_block(&m_comm, model.weight(), modes)?;
        let mut z = DMatrix::zeros(b.nrows(), 4 * modes);
        z.view_mut((0, 0), (b.nrows(), 2 * modes)).copy_from(&b);
        z.view_mut((0, 2 * modes), (b.nrows(), 2 * modes)).copy_from(&bp);
        (Some(bp), z)
    } else {
        (None, b.clone())
    };

    // Commutativity of the combined observables under the (doubled)
    // symplectic form.
    let full_omega = if b_prime.is_some() {
        let mut o = DMatrix::zeros(4 * modes, 4 * modes);
        o.view_mut((0, 0), (2 * modes, 2 * modes)).copy_from(&omega);
        o.view_mut((2 * modes, 2 * modes), (2 * modes, 2 * modes)).copy_from(&omega);
        o
    } else {
        omega.clone()
    };
    let comm = (&z * &full_omega * z.transpose()).amax();
    if comm > tol::ITERATIVE {
        return Err(Error::NumericalFailure { detail: format!("commutator residual {comm:e}") });
    }

    let (t, q) = extract_t(&z)?;
    let quad_vectors = quad_vectors_from_rows(&q, modes, b_prime.is_some());

    // BD = 1 must hold at the reported solution.
    let constraint = (&b * model.displacement_real() - DMatrix::<f64>::identity(b.nrows(), b.nrows()))
        .amax();
    if constraint > tol::ITERATIVE {
        return Err(Error::NumericalFailure {
            detail: format!("constraint residual {constraint:e}"),
        });
    }

    Ok(HolevoSolution { value, b, b_prime, t, quad_vectors, restart_values })
}

/// Minimize the weighted Gaussian risk over `B D = 1`.
///
/// The feasible set is parameterized as `B = B0 + K Nᵀ` with
/// `B0 = (DᵀD)⁻¹Dᵀ` and `N` an orthonormal basis of `ker(Dᵀ)`, which
/// keeps the constraint exact at every iterate. Each restart runs
/// normalized subgradient descent (nuclear-norm subgradient `U Vᵀ`, step
/// `s0/k`, stop when the best value stalls at relative 1e-10 over 50
/// iterations) followed by a Nelder-Mead polish; the reported solution is
/// the best restart. Restart 0 starts at `K = 0`, so the result is never
/// worse than the minimum-norm feasible point.
pub fn holevo_bound_gaussian(model: &GaussianShiftModel) -> Result<HolevoSolution> {
    let modes = model.modes();
    let m = model.param_dim();
    let d = model.displacement_real();
    let dtd = d.transpose() * d;
    let dtd_inv = dtd.clone().try_inverse().ok_or_else(|| Error::RankDeficient {
        detail: "DᵀD not invertible".into(),
    })?;
    let b0 = &dtd_inv * d.transpose();

    let d_cols: Vec<DVector<f64>> = (0..m).map(|j| d.column(j).into_owned()).collect();
    let null_cols = orthonormal_completion(&d_cols, 2 * modes);
    let kdim = null_cols.len();
    let mut null = DMatrix::zeros(2 * modes, kdim);
    for (j, c) in null_cols.iter().enumerate() {
        null.set_column(j, c);
    }

    let obj = Objective {
        w: model.weight(),
        s: sym_sqrt(model.weight(), false),
        omega: symplectic_form(modes),
        b0: b0.clone(),
        null,
    };

    if kdim == 0 {
        let value = obj.value_of_b(&b0);
        return finalize_solution(model, b0, value, vec![value]);
    }

    let n_restarts = 20usize;
    let scale = 0.5 * (1.0 + b0.amax());
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    let mut restart_values = Vec::with_capacity(n_restarts + 1);

    for r in 0..=n_restarts {
        let mut k = if r == 0 {
            DMatrix::zeros(m, kdim)
        } else {
            let mut rng = seeded_rng(derive_seed(0x484f_4c45_564f, &[r as u64]));
            let normal = Normal::new(0.0, scale / ((m * kdim) as f64).sqrt()).unwrap();
            DMatrix::from_fn(m, kdim, |_, _| normal.sample(&mut rng))
        };

        let mut best_f = obj.value(&k);
        let mut best_k = k.clone();
        let mut last_improve = 0usize;
        let s0 = scale;
        for iter in 1..=3000usize {
            let g = obj.gradient(&k);
            let gn = g.norm();
            if gn < 1e-14 {
                break;
            }
            k -= g * (s0 / (iter as f64) / gn);
            let f = obj.value(&k);
            if f < best_f * (1.0 - 1e-10) - 1e-300 {
                best_f = f;
                best_k = k.clone();
                last_improve = iter;
            }
            if iter - last_improve > 50 {
                break;
            }
        }

        // Polish: the subgradient schedule stalls near kinks; a simplex
        // refinement recovers the remaining digits.
        let flat: Vec<f64> = best_k.iter().copied().collect();
        let obj_ref = &obj;
        let (polished, f_polished) = nelder_mead(
            |x: &[f64]| obj_ref.value(&DMatrix::from_column_slice(m, kdim, x)),
            &flat,
            &NmOptions {
                max_iter: 2000 + 500 * m * kdim,
                initial_step: 0.02 * scale,
                f_tol: 1e-14,
                x_tol: 1e-9,
            },
        );
        let k_final = DMatrix::from_column_slice(m, kdim, &polished);
        let f_final = f_polished.min(best_f);
        restart_values.push(f_final);
        if best.as_ref().is_none_or(|(bf, _)| f_final < *bf) {
            let kk = if f_polished <= best_f { k_final } else { best_k };
            best = Some((f_final, kk));
        }
    }

    let (value, k_best) = best.unwrap();
    let spread = restart_values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - restart_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread > 1e-3 * value.abs().max(1e-12) {
        return Err(Error::NumericalFailure {
            detail: format!(
                "restarts disagree: best value {value}, spread {spread:e}, gradient norm {:e}",
                obj.gradient(&k_best).norm()
            ),
        });
    }
    let b = obj.b_of(&k_best);
    finalize_solution(model, b, value, restart_values)
}

/// Closed-form optimal measurement when the Cramér-Rao bound is
/// attainable (`Dᵀ Ω D = 0`): measure `Z = Σ⁻¹ Dᵀ R` with `Σ = DᵀD`.
/// The observables commute, are unbiased, and have covariance `Σ⁻¹/2`.
pub fn optimal_quadratures_achievable(model: &GaussianShiftModel) -> Result<HolevoSolution> {
    let d = model.displacement_real();
    let omega = symplectic_form(model.modes());
    let twist = (d.transpose() * &omega * d).amax();
    if twist > tol::ALGEBRAIC {
        return Err(Error::NotAchievable { detail: format!("DᵀΩD max entry {twist:e}") });
    }
    let sigma = d.transpose() * d;
    let sigma_inv = sigma.clone().try_inverse().ok_or_else(|| Error::RankDeficient {
        detail: "Σ = DᵀD not invertible".into(),
    })?;
    let b = &sigma_inv * d.transpose();

    // The three defining properties.
    let comm = (&b * &omega * b.transpose()).amax();
    let unbiased = (&b * d - DMatrix::<f64>::identity(b.nrows(), b.nrows())).amax();
    let cov = &b * b.transpose() * 0.5;
    let cov_dev = (&cov - &sigma_inv * 0.5).amax();
    if comm > tol::ITERATIVE || unbiased > tol::ITERATIVE || cov_dev > tol::ITERATIVE {
        return Err(Error::NumericalFailure {
            detail: format!("quadrature properties violated: comm {comm:e}, bias {unbiased:e}"),
        });
    }

    let value = 0.5 * (model.weight() * &b * b.transpose()).trace();
    finalize_solution(model, b, value, vec![value])
}

/// Multimode coherent state `|z>`; in it, `Q_k ~ N(√2 Re z_k, 1/2)`,
/// `P_k ~ N(√2 Im z_k, 1/2)` and the photon number is Poisson `|z_k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub z: Vec<Complex64>,
}

impl CoherentState {
    pub fn vacuum(modes: usize) -> Self {
        Self { z: vec![Complex64::new(0.0, 0.0); modes] }
    }

    pub fn modes(&self) -> usize {
        self.z.len()
    }
}

/// Photon counts of the displaced number operators `N_k(Δ)`: mode `k`
/// yields `n_shots` i.i.d. Poisson draws with intensity `|z_k - Δ_k|²`
/// (real displacements along the Q axes).
pub fn sample_coherent_counts(
    state: &CoherentState,
    delta: &[f64],
    n_shots: usize,
    seed: u64,
) -> Result<Vec<Vec<u64>>> {
    if delta.len() != state.modes() {
        return Err(Error::DimensionMismatch { expected: state.modes(), got: delta.len() });
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(state.modes());
    for (k, &z) in state.z.iter().enumerate() {
        let intensity = (z - Complex64::new(delta[k], 0.0)).norm_sqr();
        let mut shots = Vec::with_capacity(n_shots);
        if intensity < 1e-300 {
            shots.resize(n_shots, 0);
        } else {
            let pois = Poisson::new(intensity)
                .map_err(|e| Error::NumericalFailure { detail: e.to_string() })?;
            for _ in 0..n_shots {
                shots.push(pois.sample(&mut rng) as u64);
            }
        }
        out.push(shots);
    }
    Ok(out)
}

/// Quadrature samples `(Q, P)` per mode of a coherent state.
pub fn sample_coherent_quadratures(
    state: &CoherentState,
    n_shots: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = seeded_rng(seed);
    let sd = (0.5f64).sqrt();
    let mut qs = Vec::with_capacity(state.modes());
    let mut ps = Vec::with_capacity(state.modes());
    for &z in &state.z {
        let nq = Normal::new(std::f64::consts::SQRT_2 * z.re, sd).unwrap();
        let np = Normal::new(std::f64::consts::SQRT_2 * z.im, sd).unwrap();
        qs.push((0..n_shots).map(|_| nq.sample(&mut rng)).collect());
        ps.push((0..n_shots).map(|_| np.sample(&mut rng)).collect());
    }
    (qs, ps)
}

/// Counting-based homodyne estimate from displaced photon counts:
/// `û = Δ/2 - N̄/(2Δ)`. For `Δ ≫ |u|` this estimates the Q-displacement
/// with asymptotic variance 1/4 per shot.
pub fn counting_homodyne_estimator(counts: &[u64], delta: f64) -> Result<f64> {
    if delta <= 0.0 {
        return Err(Error::InvalidArgument { detail: "displacement must be positive".into() });
    }
    if counts.is_empty() {
        return Err(Error::InvalidArgument { detail: "no counts".into() });
    }
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64;
    Ok(delta / 2.0 - mean / (2.0 * delta))
}
