//! Numerical toolkit for optimal estimation of pure quantum states with
//! displaced-null projective measurements.
//!
//! The crate is organized in layers:
//!
//! * [`quantum`] — dense complex linear algebra at small dimension: state
//!   vectors, Hermitian generators, orthonormal measurement bases,
//!   outcome probabilities and categorical sampling.
//! * [`models`] — parametric pure-state families (qubit rotation, local
//!   qudit charts, real rotation families, user-defined models) and the
//!   linearization machinery used by the measurement constructions.
//! * [`information`] — quantum/classical Fisher information, symmetric
//!   logarithmic derivatives and the saturation conditions for the
//!   quantum Cramér-Rao bound.
//! * [`gaussian`] — Gaussian shift models, Holevo-bound minimization over
//!   constrained matrices, optimal quadratures and a coherent-state
//!   companion sampler (displaced photon counting / homodyne).
//! * [`measurement`] — the displaced-null measurement bases: qubit,
//!   Bures pair, ancilla-assisted general scheme and the rotated
//!   real-basis scheme that saturates the Cramér-Rao bound.
//! * [`estimators`] — preliminary (stage-one) estimators and all final
//!   estimators built from displaced-null counts, plus the posterior
//!   density used to certify preliminary estimators.
//! * [`stats`] — Kolmogorov-Smirnov tests, normal CDF, least squares on
//!   log-log scaling data, compensated summation.

pub mod estimators;
pub mod gaussian;
pub mod information;
pub mod measurement;
pub mod models;
pub mod optim;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod tol;

pub use estimators::{
    estimate_bures, estimate_displaced_qubit, estimate_general, estimate_matsumoto,
    estimate_naive_null, estimate_qcrb, local_estimate_from_frequency, posterior_density,
    posterior_two_sided_mass, preliminary_generic, preliminary_qubit_mle, BuresEstimate,
    EstimateRecord, PreliminaryBases, PreliminaryScheme, SignRule,
};
pub use gaussian::{
    counting_homodyne_estimator, holevo_bound_gaussian, optimal_quadratures_achievable,
    sample_coherent_counts, sample_coherent_quadratures, CoherentState, GaussianShiftModel,
    HolevoSolution,
};
pub use information::{cfi, compatibility, fisher_report, qcrb_conditions, qfi_pure, sld_pure,
    FisherReport, QcrbReport};
pub use measurement::{
    displaced_bases_bures, displaced_basis_general, displaced_basis_qubit, matsumoto_basis,
    null_basis, qcrb_basis, DisplacementSchedule, MatsumotoTable,
};
pub use models::{
    chart_inverse, chart_state, linearize_at, local_qudit_model, project_derivative_gauge,
    qubit_rotation_model, real_rotation_model, Domain, LinearizedModel, LocalChart,
    PureStateModel,
};
pub use quantum::{
    apply_exp_generator, bures_distance_sq, complete_basis, exp_generator, inner_product,
    measurement_probs, sample_counts, sample_counts_with_rng, HermitianOp, OutcomeCounts,
    ProjectiveBasis, StateVector,
};

/// Errors shared by every layer of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("operator is not Hermitian: max deviation {max_dev:e}")]
    NonHermitian { max_dev: f64 },
    #[error("vectors are not orthonormal: max deviation {max_dev:e}")]
    NotOrthonormal { max_dev: f64 },
    #[error("invalid probability vector: {detail}")]
    InvalidProbabilities { detail: String },
    #[error("rank deficient: {detail}")]
    RankDeficient { detail: String },
    #[error("model does not satisfy the achievability condition: {detail}")]
    NotAchievable { detail: String },
    #[error("no orthonormal basis with real derivative overlaps exists: {detail}")]
    NoRealBasis { detail: String },
    #[error("vanishing overlap: {detail}")]
    VanishingOverlap { detail: String },
    #[error("invalid argument: {detail}")]
    InvalidArgument { detail: String },
    #[error("numerical failure: {detail}")]
    NumericalFailure { detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
