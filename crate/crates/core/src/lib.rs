//! Numerical toolkit for symmetric quantum Markov semigroups on matrix
//! algebras with normalized trace.
//!
//! The crate covers the full pipeline from a generator to a modified
//! log-Sobolev (MLSI) constant estimate:
//!
//! * [`linalg`]: Hermitian eigendecompositions, matrix functions, double
//!   operator integrals, superoperators in the L2 matrix-unit basis, Choi
//!   kernels and completely bounded `L1 -> Linf` norms.
//! * [`algebra`]: fixed-point subalgebras, trace-preserving conditional
//!   expectations, and completely bounded index values for recognized
//!   inclusions.
//! * [`semigroup`]: generator validation, closed-form evolution through the
//!   spectral decomposition, gradient forms, derivations, and intertwining
//!   (curvature) checks.
//! * [`models`]: generalized depolarizing semigroups, Schur multiplier
//!   semigroups, central finite-group chains, and random unitary semigroups
//!   built from Heisenberg-Weyl projective representations.
//! * [`entropy`]: von Neumann entropy with the normalized trace, relative
//!   entropy, relative entropy to a subalgebra, Fisher information, and decay
//!   trajectories.
//! * [`constants`]: the decay-rate function kappa, completely bounded return
//!   times (exact and bounded), curvature certificates, MLSI lower bounds and
//!   ratio searches, scalar gradient-estimate checks, and heat-kernel bounds
//!   on the torus.
//! * [`oracle`]: independent quadrature and brute-force routes used by the
//!   test suites; nothing in the production paths depends on this module.
//!
//! Conventions: a density is positive semidefinite with normalized trace
//! `tau(rho) = Tr(rho)/n = 1`, so the identity matrix is the maximally mixed
//! state. All logarithms are natural.

pub mod algebra;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod constants;
pub mod models;
pub mod oracle;
pub mod sample;
pub mod semigroup;

pub use error::{Error, Result};
