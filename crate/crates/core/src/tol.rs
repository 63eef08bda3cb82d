//! Centralized numerical tolerances.
//!
//! Three tiers are used throughout the crate: construction-time checks on
//! exact algebraic data (1e-12), algebraic identities that accumulate a few
//! rounding steps (1e-10 / 1e-8), and statistical tolerances which live in
//! the harness and tests rather than here.

/// Construction-time tolerance for data that should be exact in f64:
/// state norms, Hermiticity, generator reconstruction.
pub const EXACT: f64 = 1e-12;

/// Tolerance for algebraic identities built from a few exact operations:
/// basis orthonormality and completeness, probability normalization.
pub const ALGEBRAIC: f64 = 1e-10;

/// Tolerance for identities that pass through an eigendecomposition or an
/// iterative solve: Lyapunov residuals, Fisher-information ordering,
/// linear-constraint residuals of the Holevo solver.
pub const ITERATIVE: f64 = 1e-8;

/// Outcomes with probability at or below this threshold contribute zero to
/// classical Fisher information sums. The sums run over outcomes with
/// strictly positive probability; floating point needs a cutoff.
pub const ZERO_PROB: f64 = 1e-14;

/// Relative singular-value threshold for rank decisions
/// (identifiability of coefficient matrices).
pub const RANK_REL: f64 = 1e-8;
