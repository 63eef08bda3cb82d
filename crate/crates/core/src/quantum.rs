//! Dense complex linear algebra at small dimension: state vectors,
//! Hermitian generators, projective measurement bases, outcome
//! probabilities and multinomial sampling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::rng::seeded_rng;
use crate::tol;
use crate::{Error, Result};

/// Unit vector in `C^d`; amplitudes are dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<Complex64>,
}

impl StateVector {
    /// Build from amplitudes, checking unit norm to 1e-12.
    pub fn new(amps: DVector<Complex64>) -> Result<Self> {
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol::EXACT {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    pub fn from_slice(amps: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps))
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(v: DVector<Complex64>) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-150 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps: v / Complex64::new(norm, 0.0) })
    }

    /// Canonical basis vector `|k>`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Self { amps: v }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// Multiply by the unit phase that makes the first nonzero amplitude
    /// real positive. Fixes the global-phase gauge so constructions are
    /// reproducible.
    pub fn phase_fixed(&self) -> Self {
        for a in self.amps.iter() {
            if a.norm() > tol::EXACT {
                let phase = a.conj() / a.norm();
                return Self { amps: self.amps.map(|x| x * phase) };
            }
        }
        self.clone()
    }

    /// Tensor product `self ⊗ other`, index convention `a*d_b + b`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let (da, db) = (self.dim(), other.dim());
        let mut v = DVector::zeros(da * db);
        for a in 0..da {
            for b in 0..db {
                v[a * db + b] = self.amps[a] * other.amps[b];
            }
        }
        StateVector { amps: v }
    }
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `<a|b>` with conjugation on the first argument.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(a.amps.dotc(&b.amps))
}

/// Squared Bures distance between pure states, `2(1 - |<a|b>|)`.
pub fn bures_distance_sq(a: &StateVector, b: &StateVector) -> Result<f64> {
    let ov = inner_product(a, b)?;
    Ok(2.0 * (1.0 - ov.norm()).max(0.0))
}

/// Hermitian operator on `C^d` (checked to 1e-12 on construction).
#[derive(Debug, Clone)]
pub struct HermitianOp {
    mat: DMatrix<Complex64>,
}

impl HermitianOp {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), got: mat.ncols() });
        }
        let max_dev = max_abs(&(&mat - mat.adjoint()));
        if max_dev > tol::EXACT {
            return Err(Error::NonHermitian { max_dev });
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// Pauli-y-type generator `i|k><0| - i|0><k|` between two basis labels
    /// of the canonical basis.
    pub fn sigma_y_pair(dim: usize, zero: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, zero)] = Complex64::new(0.0, 1.0);
        m[(zero, k)] = Complex64::new(0.0, -1.0);
        Self { mat: m }
    }

    /// Pauli-x-type generator `|k><0| + |0><k|`.
    pub fn sigma_x_pair(dim: usize, zero: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, zero)] = Complex64::new(1.0, 0.0);
        m[(zero, k)] = Complex64::new(1.0, 0.0);
        Self { mat: m }
    }
}

/// Unitary `exp(-i * angle * g)` via eigendecomposition of the Hermitian
/// generator. Exact for the small dimensions used here.
pub fn exp_generator(g: &HermitianOp, angle: f64) -> DMatrix<Complex64> {
    let dim = g.dim();
    if angle == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let eig = g.mat.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        dim,
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -angle * l)),
    );
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Apply `exp(-i * angle * g)` to a state; the norm is preserved.
pub fn apply_exp_generator(g: &HermitianOp, angle: f64, v: &StateVector) -> Result<StateVector> {
    if g.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: v.dim() });
    }
    let u = exp_generator(g, angle);
    let w = &u * v.amplitudes();
    StateVector::normalized(w)
}

/// Orthonormal basis of `C^d` used as a projective measurement.
#[derive(Debug, Clone)]
pub struct ProjectiveBasis {
    vectors: Vec<StateVector>,
}

impl ProjectiveBasis {
    /// Check pairwise orthonormality and completeness to 1e-10.
    pub fn new(vectors: Vec<StateVector>) -> Result<Self> {
        let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
        if vectors.len() != dim || dim == 0 {
            return Err(Error::DimensionMismatch { expected: dim, got: vectors.len() });
        }
        let mut max_dev: f64 = 0.0;
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let ov = inner_product(a, b)?;
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((ov - Complex64::new(target, 0.0)).norm());
            }
        }
        if max_dev > tol::ALGEBRAIC {
            return Err(Error::NotOrthonormal { max_dev });
        }
        // Completeness: sum of projectors equals the identity. For a square
        // set of orthonormal vectors this follows, but we verify anyway.
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for v in &vectors {
            let a = v.amplitudes();
            sum += a * a.adjoint();
        }
        let dev = max_abs(&(&sum - DMatrix::<Complex64>::identity(dim, dim)));
        if dev > tol::ALGEBRAIC {
            return Err(Error::NotOrthonormal { max_dev: dev });
        }
        Ok(Self { vectors })
    }

    pub fn canonical(dim: usize) -> Self {
        Self { vectors: (0..dim).map(|k| StateVector::basis_state(dim, k)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &StateVector {
        &self.vectors[i]
    }

    /// Apply a unitary to every basis vector.
    pub fn rotated(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        let vecs = self
            .vectors
            .iter()
            .map(|v| StateVector::normalized(u * v.amplitudes()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vecs)
    }
}

/// Outcome probabilities `p(i) = |<v_i|state>|^2`, normalized exactly.
pub fn measurement_probs(basis: &ProjectiveBasis, state: &StateVector) -> Result<Vec<f64>> {
    if basis.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: state.dim() });
    }
    let mut probs: Vec<f64> =
        basis.vectors.iter().map(|v| v.amps.dotc(&state.amps).norm_sqr()).collect();
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol::ALGEBRAIC {
        return Err(Error::InvalidProbabilities { detail: format!("sum {sum} != 1") });
    }
    for p in &mut probs {
        *p /= sum;
    }
    Ok(probs)
}

/// Counts per outcome from repeated sampling of one distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeCounts {
    counts: Vec<u64>,
    total: u64,
}

impl OutcomeCounts {
    pub fn new(counts: Vec<u64>, total: u64) -> Result<Self> {
        let sum: u64 = counts.iter().sum();
        if sum != total {
            return Err(Error::InvalidArgument {
                detail: format!("counts sum {sum} != total {total}"),
            });
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical frequency of outcome `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total as f64
    }
}

fn validate_probs(probs: &[f64]) -> Result<Vec<f64>> {
    let mut cleaned = Vec::with_capacity(probs.len());
    for &p in probs {
        if p < -tol::ALGEBRAIC || !p.is_finite() {
            return Err(Error::InvalidProbabilities { detail: format!("entry {p}") });
        }
        cleaned.push(p.max(0.0));
    }
    let sum: f64 = cleaned.iter().sum();
    if (sum - 1.0).abs() > tol::ALGEBRAIC {
        return Err(Error::InvalidProbabilities { detail: format!("sum {sum} != 1") });
    }
    for p in &mut cleaned {
        *p /= sum;
    }
    Ok(cleaned)
}

/// Multinomial draw by conditional binomials; O(k) regardless of `n`.
pub fn sample_counts_with_rng<R: Rng + ?Sized>(
    probs: &[f64],
    n: u64,
    rng: &mut R,
) -> Result<OutcomeCounts> {
    let probs = validate_probs(probs)?;
    let k = probs.len();
    let mut counts = vec![0u64; k];
    let mut remaining = n;
    let mut rest = 1.0f64;
    for i in 0..k {
        if remaining == 0 {
            break;
        }
        if i == k - 1 {
            counts[i] = remaining;
            break;
        }
        let p = (probs[i] / rest).clamp(0.0, 1.0);
        let c = if p >= 1.0 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, p)
                .map_err(|e| Error::NumericalFailure { detail: e.to_string() })?
                .sample(rng)
        };
        counts[i] = c;
        remaining -= c;
        rest -= probs[i];
        if rest <= 0.0 {
            break;
        }
    }
    let assigned: u64 = counts.iter().sum();
    if assigned < n {
        // Leftover mass from floating point truncation of `rest`.
        let last = k - 1;
        counts[last] += n - assigned;
    }
    OutcomeCounts::new(counts, n)
}

/// Multinomial draw, deterministic given `seed`.
pub fn sample_counts(probs: &[f64], n: u64, seed: u64) -> Result<OutcomeCounts> {
    let mut rng = seeded_rng(seed);
    sample_counts_with_rng(probs, n, &mut rng)
}

/// Complete a partial orthonormal set to a full basis. The input vectors
/// come first (order preserved); the completion runs Gram-Schmidt over the
/// canonical vectors, picking the largest residual first, so the result is
/// deterministic. Completed vectors get the real-positive phase convention.
pub fn complete_basis(partial: &[StateVector], dim: usize) -> Result<ProjectiveBasis> {
    if partial.len() > dim {
        return Err(Error::DimensionMismatch { expected: dim, got: partial.len() });
    }
    let mut max_dev: f64 = 0.0;
    for (i, a) in partial.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: a.dim() });
        }
        for (j, b) in partial.iter().enumerate() {
            let ov = inner_product(a, b)?;
            let target = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((ov - Complex64::new(target, 0.0)).norm());
        }
    }
    if max_dev > tol::ALGEBRAIC {
        return Err(Error::NotOrthonormal { max_dev });
    }

    let mut vectors: Vec<DVector<Complex64>> =
        partial.iter().map(|v| v.amplitudes().clone()).collect();
    while vectors.len() < dim {
        // Residual of each canonical vector against the current set.
        let mut best: Option<(f64, usize)> = None;
        for k in 0..dim {
            let mut r = DVector::<Complex64>::zeros(dim);
            r[k] = Complex64::new(1.0, 0.0);
            for v in &vectors {
                let c = v.dotc(&r);
                r -= v * c;
            }
            let norm = r.norm();
            if best.is_none_or(|(bn, _)| norm > bn + 1e-15) {
                best = Some((norm, k));
            }
        }
        let (norm, k) = best.unwrap();
        if norm < 1e-8 {
            return Err(Error::NumericalFailure {
                detail: "no canonical vector with usable residual during completion".into(),
            });
        }
        let mut r = DVector::<Complex64>::zeros(dim);
        r[k] = Complex64::new(1.0, 0.0);
        // Two Gram-Schmidt passes for numerical stability.
        for _ in 0..2 {
            for v in &vectors {
                let c = v.dotc(&r);
                r -= v * c;
            }
        }
        let new = StateVector::normalized(r)?.phase_fixed();
        vectors.push(new.amplitudes().clone());
    }
    ProjectiveBasis::new(vectors.into_iter().map(StateVector::new).collect::<Result<_>>()?)
}
