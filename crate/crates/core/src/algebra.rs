//! Unital *-subalgebras of `M_n`, trace-preserving conditional expectations,
//! and completely bounded index values for recognized inclusions.
//!
//! A subalgebra is stored through an orthonormal basis for the normalized
//! trace inner product. The L2-orthogonal projection onto a unital
//! *-subalgebra is automatically the unique trace-preserving conditional
//! expectation, so the projection built from the basis is completely
//! positive and unital whenever the basis really spans such an algebra;
//! `verify` checks the algebraic closure directly and the expectation
//! constructor re-checks the structural flags of the assembled map.

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, identity, l2_inner, max_abs, CMat, Superoperator, Verified,
};

/// Product-closure tolerance used by [`Subalgebra::verify`].
pub const ALGEBRA_TOL: f64 = 1e-8;

/// A linear subspace of `M_n` given by an orthonormal basis, intended to be
/// a unital *-subalgebra.
#[derive(Clone, Debug)]
pub struct Subalgebra {
    ambient_dim: usize,
    basis: Vec<CMat>,
}

impl Subalgebra {
    /// Scalar multiples of the identity.
    pub fn scalars(n: usize) -> Self {
        Self {
            ambient_dim: n,
            basis: vec![identity(n)],
        }
    }

    /// All diagonal matrices; basis `sqrt(n) e_jj`.
    pub fn diagonal(n: usize) -> Self {
        let s = (n as f64).sqrt();
        let basis = (0..n)
            .map(|j| {
                let mut b = CMat::zeros(n, n);
                b[(j, j)] = c(s);
                b
            })
            .collect();
        Self {
            ambient_dim: n,
            basis,
        }
    }

    /// The factor `1_k (x) M_m` inside `M_n`, `n = k * m`, with the
    /// row-major composite index `(a1, a2) -> a1*m + a2`.
    pub fn tensor_factor(k: usize, m: usize) -> Self {
        let n = k * m;
        let s = (m as f64).sqrt();
        let mut basis = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                let mut unit = CMat::zeros(m, m);
                unit[(a, b)] = c(s);
                basis.push(linalg::kron(&identity(k), &unit));
            }
        }
        Self {
            ambient_dim: n,
            basis,
        }
    }

    /// Orthonormalizes a spanning set by modified Gram-Schmidt in the
    /// normalized trace inner product, dropping near-dependent members.
    pub fn from_spanning_set(n: usize, span: &[CMat]) -> Result<Self> {
        let mut basis: Vec<CMat> = Vec::new();
        for x in span {
            if x.nrows() != n || x.ncols() != n {
                return Err(Error::DimensionMismatch(x.nrows(), n));
            }
            let mut v = x.clone();
            for b in &basis {
                let coeff = l2_inner(b, &v);
                v -= b * coeff;
            }
            let norm = linalg::l2_norm(&v);
            if norm > 1e-10 * max_abs(x).max(1.0) {
                basis.push(v / c(norm));
            }
        }
        Ok(Self {
            ambient_dim: n,
            basis,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Linear dimension of the subalgebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// L2-orthogonal projection onto the span of the basis.
    pub fn project(&self, x: &CMat) -> CMat {
        let n = self.ambient_dim;
        let mut out = CMat::zeros(n, n);
        for b in &self.basis {
            out += b * l2_inner(b, x);
        }
        out
    }

    /// Distance from `x` to the subalgebra in max-entry norm.
    pub fn distance(&self, x: &CMat) -> f64 {
        max_abs(&(x - self.project(x)))
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// Whether the subalgebra is the scalars.
    pub fn is_trivial(&self) -> bool {
        self.dim() == 1 && self.distance(&identity(self.ambient_dim)) <= 1e-10
    }

    /// Checks that the span is a unital *-subalgebra: contains the identity,
    /// is closed under adjoints, and is closed under products.
    pub fn verify(&self) -> Result<()> {
        let one = identity(self.ambient_dim);
        let id_dev = self.distance(&one);
        if id_dev > 1e-10 {
            return Err(Error::MissingIdentity(id_dev));
        }
        for b in &self.basis {
            let adj = b.adjoint();
            let dev = self.distance(&adj);
            if dev > ALGEBRA_TOL {
                return Err(Error::NotAnAlgebra(dev));
            }
        }
        for bi in &self.basis {
            for bj in &self.basis {
                let prod = bi * bj;
                let dev = self.distance(&prod);
                if dev > ALGEBRA_TOL * max_abs(&prod).max(1.0) {
                    return Err(Error::NotAnAlgebra(dev));
                }
            }
        }
        Ok(())
    }
}

/// Trace-preserving conditional expectation onto a verified subalgebra.
#[derive(Clone, Debug)]
pub struct ConditionalExpectation {
    superop: Superoperator,
    target: Subalgebra,
}

impl ConditionalExpectation {
    /// Verifies the target is a unital *-subalgebra, assembles the
    /// L2 projection, and checks the assembled map is symmetric, completely
    /// positive, and unital.
    pub fn new(target: Subalgebra) -> Result<Self> {
        target.verify()?;
        let superop = Superoperator::from_map(target.ambient_dim(), |x| target.project(x))
            .with_verified_flags();
        if superop.flags.trace_symmetric != Verified::True {
            return Err(Error::NotSymmetric(superop.symmetry_deviation()));
        }
        if superop.flags.completely_positive != Verified::True {
            return Err(Error::NotCompletelyPositive(
                superop.choi().min_eigenvalue().min(0.0).abs(),
            ));
        }
        if superop.flags.unital != Verified::True {
            let one = identity(target.ambient_dim());
            return Err(Error::NotUnital(max_abs(&(superop.apply(&one) - one))));
        }
        Ok(Self { superop, target })
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        self.target.project(x)
    }

    pub fn superop(&self) -> &Superoperator {
        &self.superop
    }

    pub fn target(&self) -> &Subalgebra {
        &self.target
    }
}

/// Kernel of a symmetric generator as a subalgebra.
///
/// Eigenvectors of the representing matrix with `|lambda| <= tol_zero *
/// max(1, |spectrum|)` span the fixed-point space; for a valid generator this
/// space is automatically a unital *-subalgebra, and the closure is verified
/// before returning.
pub fn fixed_point_algebra(generator: &Superoperator, tol_zero: f64) -> Result<Subalgebra> {
    let n = generator.dim();
    let scale = hermitian_spectral_scale(generator)?;
    let eig = linalg::eig_hermitian(&linalg::hermitize(generator.matrix()))?;
    let cut = tol_zero * scale.max(1.0);
    let mut span = Vec::new();
    for (i, &v) in eig.values.iter().enumerate() {
        if v.abs() <= cut {
            let col = eig.vectors.column(i).clone_owned();
            // vec-orthonormal columns become tau-orthonormal after sqrt(n)
            span.push(linalg::unvec_op(&col, n) * c((n as f64).sqrt()));
        }
    }
    let alg = Subalgebra {
        ambient_dim: n,
        basis: span,
    };
    alg.verify()?;
    Ok(alg)
}

fn hermitian_spectral_scale(generator: &Superoperator) -> Result<f64> {
    let dev = generator.symmetry_deviation();
    if dev > 1e-10 * max_abs(generator.matrix()).max(1.0) {
        return Err(Error::NotSymmetric(dev));
    }
    Ok(max_abs(generator.matrix()))
}

/// Structure of a recognized inclusion `N` in `M_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InclusionPattern {
    Scalars,
    FullDiagonal,
    TensorFactor { k: usize, m: usize },
    Unrecognized,
}

/// Completely bounded index of an inclusion, `exact` when the pattern is
/// recognized; otherwise the scalar-inclusion value is reported as an upper
/// bound.
#[derive(Clone, Copy, Debug)]
pub struct CbIndex {
    pub value: f64,
    pub exact: bool,
    pub pattern: InclusionPattern,
}

/// Completely bounded index `D_cb(M_n || N)` for the recognized patterns:
/// `2 log n` for the scalars, `log n` for the full diagonal, `2 log k` for
/// `1_k (x) M_m`. Any subalgebra contains the scalars, so `2 log n` is a
/// valid upper bound in the unrecognized case.
pub fn cb_index(target: &Subalgebra) -> CbIndex {
    let n = target.ambient_dim();
    let tol = 1e-10;
    if target.dim() == 1 && target.is_trivial() {
        return CbIndex {
            value: 2.0 * (n as f64).ln(),
            exact: true,
            pattern: InclusionPattern::Scalars,
        };
    }
    if target.dim() == n && target.basis().iter().all(|b| is_diagonal(b, tol)) {
        return CbIndex {
            value: (n as f64).ln(),
            exact: true,
            pattern: InclusionPattern::FullDiagonal,
        };
    }
    for m in 1..=n {
        if n % m != 0 || target.dim() != m * m {
            continue;
        }
        let k = n / m;
        if matches_tensor_factor(target, k, m, tol) {
            return CbIndex {
                value: 2.0 * (k as f64).ln(),
                exact: true,
                pattern: InclusionPattern::TensorFactor { k, m },
            };
        }
    }
    CbIndex {
        value: 2.0 * (n as f64).ln(),
        exact: false,
        pattern: InclusionPattern::Unrecognized,
    }
}

fn is_diagonal(b: &CMat, tol: f64) -> bool {
    let scale = max_abs(b).max(1.0);
    for j in 0..b.nrows() {
        for k in 0..b.ncols() {
            if j != k && b[(j, k)].norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Whether every basis element has the block form `1_k (x) y`: extract `y`
/// from the leading block and compare the rebuilt matrix entrywise.
fn matches_tensor_factor(target: &Subalgebra, k: usize, m: usize, tol: f64) -> bool {
    for b in target.basis() {
        let y = CMat::from_fn(m, m, |a2, b2| b[(a2, b2)]);
        let rebuilt = linalg::kron(&identity(k), &y);
        if max_abs(&(b - rebuilt)) > tol * max_abs(b).max(1.0) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, partial_trace, tau, TracedFactor};
    use crate::oracle;
    use crate::sample;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_projection_is_normalized_trace() {
        let mut rng = sample::rng(31);
        let x = sample::random_ginibre(3, &mut rng);
        let e = ConditionalExpectation::new(Subalgebra::scalars(3)).unwrap();
        let p = e.apply(&x);
        assert!(max_abs(&(p - identity(3) * tau(&x))) < 1e-12);
    }

    #[test]
    fn diagonal_projection_keeps_the_diagonal() {
        let mut rng = sample::rng(32);
        let x = sample::random_ginibre(4, &mut rng);
        let e = ConditionalExpectation::new(Subalgebra::diagonal(4)).unwrap();
        let p = e.apply(&x);
        for j in 0..4 {
            for k in 0..4 {
                let expect = if j == k { x[(j, j)] } else { c(0.0) };
                assert!((p[(j, k)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_factor_projection_is_partial_trace() {
        let mut rng = sample::rng(33);
        let x = sample::random_ginibre(6, &mut rng);
        let e = ConditionalExpectation::new(Subalgebra::tensor_factor(2, 3)).unwrap();
        let p = e.apply(&x);
        let reduced = partial_trace(&x, 2, 3, TracedFactor::First).unwrap();
        assert!(max_abs(&(p - kron(&identity(2), &reduced))) < 1e-12);
    }

    #[test]
    fn expectation_is_idempotent_and_modular() {
        let mut rng = sample::rng(34);
        let alg = Subalgebra::tensor_factor(2, 2);
        let e = ConditionalExpectation::new(alg.clone()).unwrap();
        let x = sample::random_ginibre(4, &mut rng);
        assert!(max_abs(&(e.apply(&e.apply(&x)) - e.apply(&x))) < 1e-12);
        // module property: E(x a) = E(x) a for a in the algebra
        for a in alg.basis() {
            let lhs = e.apply(&(&x * a));
            let rhs = e.apply(&x) * a;
            assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }
    }

    #[test]
    fn expectation_flags_are_verified() {
        let e = ConditionalExpectation::new(Subalgebra::diagonal(3)).unwrap();
        assert_eq!(e.superop().flags.trace_symmetric, Verified::True);
        assert_eq!(e.superop().flags.completely_positive, Verified::True);
        assert_eq!(e.superop().flags.unital, Verified::True);
    }

    #[test]
    fn span_without_identity_is_rejected() {
        let mut unit = CMat::zeros(2, 2);
        unit[(0, 0)] = c(1.0);
        let alg = Subalgebra::from_spanning_set(2, &[unit]).unwrap();
        assert!(matches!(alg.verify(), Err(Error::MissingIdentity(_))));
    }

    #[test]
    fn span_not_closed_under_adjoints_is_rejected() {
        let mut raiser = CMat::zeros(2, 2);
        raiser[(0, 1)] = c(1.0);
        let alg = Subalgebra::from_spanning_set(2, &[identity(2), raiser]).unwrap();
        assert!(matches!(alg.verify(), Err(Error::NotAnAlgebra(_))));
    }

    #[test]
    fn projection_span_passes_verification() {
        // span{1, e_00} inside M_3 is a unital *-subalgebra
        let mut p = CMat::zeros(3, 3);
        p[(0, 0)] = c(1.0);
        let alg = Subalgebra::from_spanning_set(3, &[identity(3), p]).unwrap();
        assert_eq!(alg.dim(), 2);
        alg.verify().unwrap();
    }

    #[test]
    fn fixed_points_of_depolarizing_generator_are_scalars() {
        let gen = Superoperator::from_map(3, |x| x - identity(3) * tau(x));
        let alg = fixed_point_algebra(&gen, 1e-10).unwrap();
        assert_eq!(alg.dim(), 1);
        assert!(alg.is_trivial());
    }

    #[test]
    fn fixed_points_of_dephasing_generator_are_diagonal() {
        let gen = Superoperator::from_map(4, |x| {
            let mut d = CMat::zeros(4, 4);
            for j in 0..4 {
                d[(j, j)] = x[(j, j)];
            }
            x - d
        });
        let alg = fixed_point_algebra(&gen, 1e-10).unwrap();
        assert_eq!(alg.dim(), 4);
        let idx = cb_index(&alg);
        assert_eq!(idx.pattern, InclusionPattern::FullDiagonal);
    }

    #[test]
    fn cb_index_of_recognized_patterns() {
        let s = cb_index(&Subalgebra::scalars(5));
        assert_relative_eq!(s.value, 2.0 * 5.0f64.ln(), epsilon = 1e-14);
        assert!(s.exact);

        let d = cb_index(&Subalgebra::diagonal(7));
        assert_relative_eq!(d.value, 7.0f64.ln(), epsilon = 1e-14);
        assert!(d.exact);

        let t = cb_index(&Subalgebra::tensor_factor(2, 2));
        assert_relative_eq!(t.value, 2.0 * 2.0f64.ln(), epsilon = 1e-14);
        assert!(t.exact);
        assert_eq!(t.pattern, InclusionPattern::TensorFactor { k: 2, m: 2 });

        // the full algebra is the k = 1 factor and has index zero
        let full = cb_index(&Subalgebra::tensor_factor(1, 3));
        assert_relative_eq!(full.value, 0.0, epsilon = 1e-14);
        assert!(full.exact);
    }

    #[test]
    fn cb_index_of_unrecognized_inclusion_is_an_upper_bound() {
        // span{1, X} is maximal abelian but not entrywise diagonal
        let mut x = CMat::zeros(2, 2);
        x[(0, 1)] = c(1.0);
        x[(1, 0)] = c(1.0);
        let alg = Subalgebra::from_spanning_set(2, &[identity(2), x]).unwrap();
        alg.verify().unwrap();
        let idx = cb_index(&alg);
        assert!(!idx.exact);
        assert_eq!(idx.pattern, InclusionPattern::Unrecognized);
        assert_relative_eq!(idx.value, 2.0 * 2.0f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn tensor_factor_index_matches_max_relative_entropy_witness() {
        // the tau-normalized maximally entangled state attains the index
        let alg = Subalgebra::tensor_factor(2, 2);
        let e = ConditionalExpectation::new(alg.clone()).unwrap();
        let mut phi = CMat::zeros(4, 4);
        for a in [0usize, 3] {
            for b in [0usize, 3] {
                phi[(a, b)] = c(2.0);
            }
        }
        let rho = crate::linalg::HermitianOperator::new(phi.clone()).unwrap();
        let sigma = crate::linalg::HermitianOperator::new(e.apply(&phi)).unwrap();
        let attained = oracle::max_relative_entropy(&rho, &sigma);
        assert_relative_eq!(attained, cb_index(&alg).value, epsilon = 1e-10);
    }
}
