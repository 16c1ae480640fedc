//! Symmetric Markov semigroups `T_t = exp(-At)` on `M_n`: generator
//! validation, closed-form evolution, gradient forms, derivations, and
//! intertwining checks against extended semigroups.
//!
//! A valid generator is self-adjoint for the normalized trace, positive
//! semidefinite as an operator on L2, annihilates the identity, and
//! generates completely positive maps. The last point does not follow from
//! the first three and is checked on a fixed grid of times through Choi
//! kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{fixed_point_algebra, ConditionalExpectation, Subalgebra};
use crate::error::{Error, Result};
use crate::linalg::{
    self, c, ci, commutator, identity, l2_norm, max_abs, CMat, EigenDecomposition,
    HermitianOperator, Superoperator,
};

/// Times at which complete positivity of the semigroup is spot-checked.
pub const MARKOV_CHECK_TIMES: [f64; 3] = [0.01, 0.1, 1.0];

/// Relative tolerance for the structural generator checks.
pub const GENERATOR_TOL: f64 = 1e-10;

/// Pass threshold for derivation and intertwining residuals.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// A validated generator with its cached spectral decomposition.
#[derive(Clone, Debug)]
pub struct Generator {
    superop: Superoperator,
    eig: EigenDecomposition,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.superop.dim()
    }

    pub fn superop(&self) -> &Superoperator {
        &self.superop
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        self.superop.apply(x)
    }

    /// Eigenvalues of the generator on L2, ascending.
    pub fn spectrum(&self) -> &[f64] {
        &self.eig.values
    }

    /// Smallest nonzero eigenvalue; `NoGap` when the generator vanishes.
    pub fn spectral_gap(&self) -> Result<f64> {
        let scale = self.eig.max().abs().max(1.0);
        let gap = self
            .eig
            .values
            .iter()
            .copied()
            .filter(|v| *v > GENERATOR_TOL * scale)
            .fold(f64::INFINITY, f64::min);
        if gap.is_finite() {
            Ok(gap)
        } else {
            Err(Error::NoGap)
        }
    }

    /// The map `exp(-At)` through the cached decomposition.
    pub fn semigroup_superop(&self, t: f64) -> Result<Superoperator> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let mat = self.eig.apply_scalar(|v| (-v * t).exp());
        Superoperator::new(self.dim(), mat)
    }

    pub fn apply_semigroup(&self, x: &CMat, t: f64) -> Result<CMat> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let v = linalg::vec_op(x);
        let vt = self.eig.to_eigenbasis_vec(&v, t);
        Ok(linalg::unvec_op(&vt, self.dim()))
    }
}

impl EigenDecomposition {
    /// `U exp(-diag t) U^* v` without forming the full matrix.
    fn to_eigenbasis_vec(&self, v: &linalg::CVec, t: f64) -> linalg::CVec {
        let coeffs = self.vectors.adjoint() * v;
        let scaled = linalg::CVec::from_fn(self.values.len(), |i, _| {
            coeffs[i] * c((-self.values[i] * t).exp())
        });
        &self.vectors * scaled
    }
}

/// Validates the four structural properties and caches the decomposition.
pub fn validate_generator(superop: Superoperator) -> Result<Generator> {
    let n = superop.dim();
    let scale = max_abs(superop.matrix()).max(1.0);

    let sym = superop.symmetry_deviation();
    if sym > GENERATOR_TOL * scale {
        return Err(Error::NotSymmetric(sym));
    }

    let eig = linalg::eig_hermitian(&linalg::hermitize(superop.matrix()))?;
    if eig.min() < -GENERATOR_TOL * scale {
        return Err(Error::NotPositive(eig.min()));
    }

    let on_identity = max_abs(&superop.apply(&identity(n)));
    if on_identity > GENERATOR_TOL * scale {
        return Err(Error::NotUnital(on_identity));
    }

    let gen = Generator { superop, eig };
    for &t in &MARKOV_CHECK_TIMES {
        let choi = gen.semigroup_superop(t)?.choi();
        let min = choi.min_eigenvalue();
        if min < -GENERATOR_TOL * max_abs(choi.matrix()).max(1.0) {
            return Err(Error::NotMarkov { t, min_eig: min });
        }
    }
    Ok(gen)
}

/// Applies `exp(-At)` to a state, enforcing trace preservation.
pub fn evolve(
    gen: &Generator,
    state: &HermitianOperator,
    t: f64,
) -> Result<HermitianOperator> {
    if state.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(state.dim(), gen.dim()));
    }
    let out = gen.apply_semigroup(state.mat(), t)?;
    let drift = (linalg::tau(&out).re - state.tau()).abs();
    if drift > 1e-12 * state.tau().abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "trace drift {drift:.3e} under evolution"
        )));
    }
    Ok(HermitianOperator::enforce(&out))
}

/// Carre du champ `Gamma(x, y) = (A(x)^* y + x^* A(y) - A(x^* y)) / 2`.
pub fn gradient_form(gen: &Generator, x: &CMat, y: &CMat) -> CMat {
    let ax = gen.apply(x);
    let ay = gen.apply(y);
    let axy = gen.apply(&(x.adjoint() * y));
    (ax.adjoint() * y + x.adjoint() * ay - axy).map(|z| z * c(0.5))
}

/// Dirichlet form `<x, A y>` in L2.
pub fn dirichlet_form(gen: &Generator, x: &CMat, y: &CMat) -> Complex64 {
    linalg::l2_inner(x, &gen.apply(y))
}

/// How a derivation component acts.
#[derive(Clone, Debug)]
pub enum DerivationKind {
    /// `delta_k(x) = scale * i [V_k, x]`.
    Commutators { scale: f64, vs: Vec<CMat> },
    /// `delta_k(x) = i (x (.) D_k)` for antisymmetric real difference
    /// matrices `D_k`; `(.)` is the entrywise product.
    SchurMultipliers { ds: Vec<CMat> },
}

/// A derivation representing the gradient form as
/// `Gamma(x, y) = sum_k w_k delta_k(x)^* delta_k(y)`.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub kind: DerivationKind,
    /// Component weights `w_k`, one per component.
    pub weights: Vec<f64>,
    /// Classical carriers represent the gradient form on the diagonal
    /// subalgebra only: checks sample diagonal arguments, and the module
    /// expectation (here the diagonal projection) is applied to
    /// `delta(x)^* delta(y)` before comparing with `Gamma`.
    pub restrict_to_diagonal: bool,
}

impl Derivation {
    pub fn components(&self) -> usize {
        match &self.kind {
            DerivationKind::Commutators { vs, .. } => vs.len(),
            DerivationKind::SchurMultipliers { ds } => ds.len(),
        }
    }

    /// Values of all components on `x`.
    pub fn apply(&self, x: &CMat) -> Vec<CMat> {
        match &self.kind {
            DerivationKind::Commutators { scale, vs } => vs
                .iter()
                .map(|v| commutator(v, x).map(|z| z * ci(*scale)))
                .collect(),
            DerivationKind::SchurMultipliers { ds } => ds
                .iter()
                .map(|d| x.component_mul(d).map(|z| z * ci(1.0)))
                .collect(),
        }
    }

    /// `sum_k w_k delta_k(x)^* delta_k(y)`.
    pub fn carre(&self, x: &CMat, y: &CMat) -> CMat {
        let n = x.nrows();
        let dx = self.apply(x);
        let dy = self.apply(y);
        let mut out = CMat::zeros(n, n);
        for ((a, b), &w) in dx.iter().zip(dy.iter()).zip(self.weights.iter()) {
            out += (a.adjoint() * b).map(|z| z * c(w));
        }
        out
    }
}

/// Residual report for a structural check; `passed` compares against
/// `RESIDUAL_TOL`.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub samples: usize,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= RESIDUAL_TOL
    }
}

/// Checks that the derivation represents the gradient form and satisfies
/// the Leibniz rule on seeded random arguments.
pub fn verify_derivation(
    gen: &Generator,
    derivation: &Derivation,
    samples: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let n = gen.dim();
    if derivation.weights.len() != derivation.components() {
        return Err(Error::InvalidSpec(format!(
            "derivation has {} components but {} weights",
            derivation.components(),
            derivation.weights.len()
        )));
    }
    let mut rng = crate::sample::rng(seed);
    let mut worst: f64 = 0.0;
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> CMat {
        if derivation.restrict_to_diagonal {
            let d = crate::sample::random_diagonal_density_strict(n, 1.0, rng);
            d.mat() - identity(n)
        } else {
            crate::sample::random_hermitian(n, rng)
        }
    };
    for _ in 0..samples {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let gamma = gradient_form(gen, &x, &y);
        let mut carre = derivation.carre(&x, &y);
        if derivation.restrict_to_diagonal {
            // Module expectation onto the carrier algebra.
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        carre[(j, k)] = c(0.0);
                    }
                }
            }
        }
        let scale = max_abs(&gamma).max(1.0);
        worst = worst.max(max_abs(&(carre - &gamma)) / scale);

        // Leibniz rule on each component
        let xy = &x * &y;
        let dxy = derivation.apply(&xy);
        let dx = derivation.apply(&x);
        let dy = derivation.apply(&y);
        for k in 0..derivation.components() {
            let expect = &dx[k] * &y + &x * &dy[k];
            let dev = max_abs(&(&dxy[k] - &expect)) / max_abs(&expect).max(1.0);
            worst = worst.max(dev);
        }
    }
    Ok(ResidualReport {
        max_residual: worst,
        samples,
    })
}

/// Semigroup acting on derivation components in an intertwining check.
#[derive(Clone, Debug)]
pub enum Extension {
    /// Components are left untouched.
    Identity,
    /// The model's own semigroup acts on each component.
    ModelTensorIdentity,
    /// `y -> sum_r k_t(r) U_r y U_r^*` with the kernel row of a classical
    /// chain, one weight per unitary.
    RandomUnitary {
        unitaries: Vec<CMat>,
        chain: ClassicalChain,
    },
}

impl Extension {
    pub fn apply(&self, gen: &Generator, y: &CMat, t: f64) -> Result<CMat> {
        match self {
            Extension::Identity => Ok(y.clone()),
            Extension::ModelTensorIdentity => gen.apply_semigroup(y, t),
            Extension::RandomUnitary { unitaries, chain } => {
                if unitaries.len() != chain.size() {
                    return Err(Error::DimensionMismatch(unitaries.len(), chain.size()));
                }
                let kernel = chain.heat_kernel(t)?;
                let n = y.nrows();
                let mut out = CMat::zeros(n, n);
                for (r, u) in unitaries.iter().enumerate() {
                    out += (u * y * u.adjoint()).map(|z| z * c(kernel[(0, r)]));
                }
                Ok(out)
            }
        }
    }
}

/// Checks `delta_k(T_t x) = e^{-lambda t} That_t(delta_k x)` on seeded
/// random arguments over a grid of times.
pub fn verify_intertwining(
    gen: &Generator,
    derivation: &Derivation,
    extension: &Extension,
    lambda: f64,
    times: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let n = gen.dim();
    let mut rng = crate::sample::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = if derivation.restrict_to_diagonal {
            crate::sample::random_diagonal_density_strict(n, 1.0, &mut rng)
                .mat()
                .clone()
        } else {
            crate::sample::random_hermitian(n, &mut rng)
        };
        let dx = derivation.apply(&x);
        let base: f64 = dx.iter().map(l2_norm).sum::<f64>().max(1.0);
        for &t in times {
            let xt = gen.apply_semigroup(&x, t)?;
            let lhs = derivation.apply(&xt);
            let decay = c((-lambda * t).exp());
            for k in 0..derivation.components() {
                let rhs = extension.apply(gen, &dx[k], t)?.map(|z| z * decay);
                worst = worst.max(max_abs(&(&lhs[k] - rhs)) / base);
            }
        }
    }
    Ok(ResidualReport {
        max_residual: worst,
        samples: samples * times.len(),
    })
}

/// Symmetric Markov chain on a finite set, stored through its Laplacian.
#[derive(Clone, Debug)]
pub struct ClassicalChain {
    laplacian: DMatrix<f64>,
}

impl ClassicalChain {
    /// Requires a symmetric Laplacian with nonpositive off-diagonal entries
    /// and vanishing row sums.
    pub fn new(laplacian: DMatrix<f64>) -> Result<Self> {
        let m = laplacian.nrows();
        if laplacian.ncols() != m {
            return Err(Error::DimensionMismatch(laplacian.nrows(), laplacian.ncols()));
        }
        let scale = laplacian.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let mut sym_dev = 0.0f64;
        for j in 0..m {
            for k in 0..m {
                sym_dev = sym_dev.max((laplacian[(j, k)] - laplacian[(k, j)]).abs());
                if j != k && laplacian[(j, k)] > GENERATOR_TOL * scale {
                    return Err(Error::InvalidSpec(format!(
                        "positive off-diagonal Laplacian entry {} at ({j}, {k})",
                        laplacian[(j, k)]
                    )));
                }
            }
        }
        if sym_dev > GENERATOR_TOL * scale {
            return Err(Error::NotSymmetric(sym_dev));
        }
        for j in 0..m {
            let row: f64 = (0..m).map(|k| laplacian[(j, k)]).sum();
            if row.abs() > GENERATOR_TOL * scale {
                return Err(Error::NotUnital(row.abs()));
            }
        }
        Ok(Self { laplacian })
    }

    pub fn size(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Stochastic matrix `exp(-tA)`.
    pub fn heat_kernel(&self, t: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let se = nalgebra::SymmetricEigen::new(self.laplacian.clone());
        let m = self.size();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            let decay = (-se.eigenvalues[i] * t).exp();
            let v = se.eigenvectors.column(i);
            for j in 0..m {
                for k in 0..m {
                    out[(j, k)] += decay * v[j] * v[k];
                }
            }
        }
        Ok(out)
    }

    /// Commutative `L1 -> Linf` norm of `T_t - E`: the uniform measure makes
    /// this `max_{x,y} |m k_t(x, y) - 1|`, and complete and plain bounded
    /// norms agree on a commutative algebra.
    pub fn deviation_norm_1_inf(&self, t: f64) -> Result<f64> {
        let m = self.size() as f64;
        let kernel = self.heat_kernel(t)?;
        Ok(kernel
            .iter()
            .fold(0.0f64, |acc, &k| acc.max((m * k - 1.0).abs())))
    }

    /// Smallest nonzero Laplacian eigenvalue.
    pub fn spectral_gap(&self) -> Result<f64> {
        let se = nalgebra::SymmetricEigen::new(self.laplacian.clone());
        let scale = se.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        let gap = se
            .eigenvalues
            .iter()
            .copied()
            .filter(|v| *v > GENERATOR_TOL * scale)
            .fold(f64::INFINITY, f64::min);
        if gap.is_finite() {
            Ok(gap)
        } else {
            Err(Error::NoGap)
        }
    }
}

/// Which construction produced a model; drives defaults for return-time
/// bounds and curvature certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Depolarizing,
    SchurMultiplier,
    GroupChain,
    PauliRandomUnitary,
    Custom,
}

/// State space a model's densities live on.
#[derive(Clone, Debug)]
pub enum Carrier {
    Quantum,
    /// The model is a classical chain embedded on the diagonal; states are
    /// diagonal and norms are computed commutatively.
    Classical(ClassicalChain),
}

/// A validated semigroup with its fixed-point structure.
#[derive(Clone, Debug)]
pub struct SemigroupModel {
    pub kind: ModelKind,
    pub generator: Generator,
    pub fixed_algebra: Subalgebra,
    pub cond_exp: ConditionalExpectation,
    pub carrier: Carrier,
}

impl SemigroupModel {
    pub fn new(superop: Superoperator, kind: ModelKind, carrier: Carrier) -> Result<Self> {
        let generator = validate_generator(superop)?;
        let fixed_algebra = fixed_point_algebra(generator.superop(), GENERATOR_TOL)?;
        let cond_exp = ConditionalExpectation::new(fixed_algebra.clone())?;
        Ok(Self {
            kind,
            generator,
            fixed_algebra,
            cond_exp,
            carrier,
        })
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn is_ergodic(&self) -> bool {
        self.fixed_algebra.is_trivial()
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.carrier, Carrier::Classical(_))
    }

    pub fn evolve(&self, state: &HermitianOperator, t: f64) -> Result<HermitianOperator> {
        evolve(&self.generator, state, t)
    }

    /// `T_t - E` as a superoperator.
    pub fn deviation_superop(&self, t: f64) -> Result<Superoperator> {
        let st = self.generator.semigroup_superop(t)?;
        let mat = st.matrix() - self.cond_exp.superop().matrix();
        Superoperator::new(self.dim(), mat)
    }
}
