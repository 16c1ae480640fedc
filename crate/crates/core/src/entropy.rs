//! Entropy functionals for the normalized trace: von Neumann entropy,
//! relative entropy (with the support condition), relative entropy to a
//! subalgebra, Fisher information, and entropy decay trajectories.

use crate::algebra::ConditionalExpectation;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, EigenDecomposition, HermitianOperator};
use crate::semigroup::SemigroupModel;

/// Eigenvalues at or below this truncation contribute `0 log 0 = 0`.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// Kernel-overlap mass above this threshold makes relative entropy infinite.
pub const SUPPORT_TOL: f64 = 1e-10;

/// A state: positive semidefinite with `tau(rho) = 1`, eigendecomposition
/// cached.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: HermitianOperator,
    eig: EigenDecomposition,
}

impl DensityOperator {
    /// Accepts eigenvalues down to `-1e-12` (relative to the largest) and a
    /// normalized trace within `1e-12` of one.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let eig = op.eig();
        let scale = eig.max().abs().max(1.0);
        if eig.min() < -1e-12 * scale {
            return Err(Error::NotPositive(eig.min()));
        }
        let t = op.tau();
        if (t - 1.0).abs() > 1e-12 {
            return Err(Error::DomainViolation(t));
        }
        Ok(Self { op, eig })
    }

    pub fn from_mat(mat: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new(mat)?)
    }

    /// The identity, the fixed point of every trace-symmetric semigroup.
    pub fn maximally_mixed(n: usize) -> Self {
        Self::new(HermitianOperator::identity(n)).expect("identity is a density")
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn mat(&self) -> &CMat {
        self.op.mat()
    }

    pub fn eig(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.min()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.eig.min() >= 1e-12
    }
}

/// Normalized trace norm of a Hermitian matrix: `tau(|x|)`.
pub fn trace_norm(x: &HermitianOperator) -> f64 {
    let eig = x.eig();
    eig.values.iter().map(|v| v.abs()).sum::<f64>() / x.dim() as f64
}

/// `H(rho) = tau(rho log rho)`, nonnegative for densities under the
/// normalized trace.
pub fn entropy(rho: &DensityOperator) -> f64 {
    let n = rho.dim() as f64;
    rho.eig()
        .values
        .iter()
        .map(|&p| if p > ENTROPY_CUTOFF { p * p.ln() } else { 0.0 })
        .sum::<f64>()
        / n
}

/// `D(rho || sigma) = tau(rho log rho - rho log sigma)`, `+inf` when the
/// support of `rho` leaks outside the support of `sigma`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> f64 {
    let n = rho.dim();
    let seig = sigma.eig();
    let scale = seig.max().abs().max(1.0);
    let kernel_cut = 1e-12 * scale;
    // mass of rho on the numerical kernel of sigma
    let rho_in_sigma_basis = seig.to_eigenbasis(rho.mat());
    let mut kernel_mass = 0.0;
    let mut cross = 0.0;
    for (j, &s) in seig.values.iter().enumerate() {
        let weight = rho_in_sigma_basis[(j, j)].re;
        if s <= kernel_cut {
            kernel_mass += weight.max(0.0);
        } else {
            cross += weight * s.ln();
        }
    }
    if kernel_mass / n as f64 > SUPPORT_TOL {
        return f64::INFINITY;
    }
    entropy(rho) - cross / n as f64
}

/// `D(rho || N) = H(rho) - H(E(rho))`, cross-checked against
/// `D(rho || E(rho))` to `1e-10`.
pub fn relative_entropy_to_algebra(
    rho: &DensityOperator,
    e: &ConditionalExpectation,
) -> Result<f64> {
    if rho.dim() != e.target().ambient_dim() {
        return Err(Error::DimensionMismatch(rho.dim(), e.target().ambient_dim()));
    }
    let projected = DensityOperator::new(HermitianOperator::enforce(&e.apply(rho.mat())))?;
    let value = entropy(rho) - entropy(&projected);
    let direct = relative_entropy(rho, &projected);
    if (value - direct).abs() > 1e-10 * value.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "entropy-difference {value} and direct relative entropy {direct} disagree"
        )));
    }
    Ok(value)
}

/// Fisher information `I(rho) = tau(A(rho) log rho)` for a strictly
/// positive state; tiny negatives inside the `-1e-10` floor are clamped.
pub fn fisher_information(model: &SemigroupModel, rho: &DensityOperator) -> Result<f64> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), model.dim()));
    }
    if rho.min_eigenvalue() < 1e-12 {
        return Err(Error::NotStrictlyPositive(rho.min_eigenvalue()));
    }
    let log_rho = rho.eig().apply_scalar(f64::ln);
    let a_rho = model.generator.apply(rho.mat());
    let value = linalg::tau(&(a_rho * log_rho)).re;
    if value < -1e-10 {
        return Err(Error::Numeric(format!(
            "Fisher information {value:.3e} below the nonnegativity floor"
        )));
    }
    Ok(value.max(0.0))
}

/// Entropy and Fisher values of an evolving state over an ascending grid.
#[derive(Clone, Debug)]
pub struct DecayTrajectory {
    pub times: Vec<f64>,
    pub relative_entropies: Vec<f64>,
    pub fisher_values: Vec<f64>,
}

/// Tabulates `D(T_t rho || N)` and `I(T_t rho)` over the grid; the entropy
/// column must be nonincreasing within `1e-10` slack.
pub fn decay_trajectory(
    model: &SemigroupModel,
    rho: &DensityOperator,
    t_grid: &[f64],
) -> Result<DecayTrajectory> {
    if t_grid.is_empty() || t_grid[0] < 0.0 {
        return Err(Error::InvalidSpec(
            "time grid must be nonempty and start at t >= 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpec("time grid must be strictly ascending".into()));
    }
    let mut ds = Vec::with_capacity(t_grid.len());
    let mut is = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let state = DensityOperator::new(model.evolve(rho.op(), t)?)?;
        let d = relative_entropy_to_algebra(&state, &model.cond_exp)?;
        let i = fisher_information(model, &state)?;
        if let Some(&prev) = ds.last() {
            if d > prev + 1e-10 {
                return Err(Error::Numeric(format!(
                    "relative entropy increased from {prev} to {d} along the trajectory"
                )));
            }
        }
        ds.push(d);
        is.push(i);
    }
    Ok(DecayTrajectory {
        times: t_grid.to_vec(),
        relative_entropies: ds,
        fisher_values: is,
    })
}
