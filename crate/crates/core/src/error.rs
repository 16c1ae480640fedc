//! Crate-wide error type.

use thiserror::Error;

/// Failure modes of the semigroup pipeline.
///
/// Validation variants (`NotSymmetric`, `NotPositive`, `NotUnital`,
/// `NotMarkov`, `NotConditionallyNegative`, `NotCentral`, `NotAnAlgebra`,
/// `MissingIdentity`, `NotCompletelyPositive`, `InvalidSpec`) indicate that
/// the input does not describe a symmetric Markov generator or a legitimate
/// subalgebra. Numeric variants indicate a violated runtime invariant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NonHermitianInput(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("scalar function is undefined at eigenvalue {0:.6e}")]
    DomainViolation(f64),
    #[error("kernel is non-finite at spectral pair ({0:.6e}, {1:.6e})")]
    SingularKernel(f64, f64),
    #[error("operator has mass {0:.3e} off the support of the density")]
    SupportViolation(f64),
    #[error("kernel of the generator is not multiplicatively closed (residual {0:.3e})")]
    NotAnAlgebra(f64),
    #[error("identity is not in the subalgebra (residual {0:.3e})")]
    MissingIdentity(f64),
    #[error("conditional expectation is not completely positive (min Choi eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),
    #[error("superoperator is not self-adjoint on L2 (max deviation {0:.3e})")]
    NotSymmetric(f64),
    #[error("generator has a negative eigenvalue ({0:.3e})")]
    NotPositive(f64),
    #[error("generator does not annihilate the identity (residual {0:.3e})")]
    NotUnital(f64),
    #[error("semigroup is not completely positive at t = {t} (min Choi eigenvalue {min_eig:.3e})")]
    NotMarkov { t: f64, min_eig: f64 },
    #[error("evolution time must be nonnegative (got {0})")]
    NegativeTime(f64),
    #[error("time must be positive (got {0})")]
    NonpositiveTime(f64),
    #[error("generator has no spectral gap")]
    NoGap,
    #[error("fixed-point algebra has dimension {0}; an ergodic model is required")]
    NotErgodic(usize),
    #[error("density is not strictly positive (min eigenvalue {0:.3e})")]
    NotStrictlyPositive(f64),
    #[error("relative entropy to the fixed-point algebra is numerically zero")]
    DegenerateInput,
    #[error("rate matrix is not conditionally negative definite (eigenvalue {0:.3e})")]
    NotConditionallyNegative(f64),
    #[error("transition rates are not invariant under group translations")]
    NotCentral,
    #[error("numeric invariant violated: {0}")]
    Numeric(String),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
