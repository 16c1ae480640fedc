//! Dense Hermitian linear algebra over matrix algebras with normalized trace.
//!
//! Conventions, used consistently across the crate:
//!
//! * `M_n` carries the normalized trace `tau(x) = Tr(x)/n`; the L2 inner
//!   product is `<x, y> = tau(x^* y)`.
//! * A superoperator on `M_n` is stored as an `n^2 x n^2` complex matrix in
//!   the matrix-unit basis with the row-major pairing `(j, k) -> j*n + k`:
//!   column `(l, m)` holds `vec(T(e_lm))`. The matrix-unit basis scaled by
//!   `sqrt(n)` is orthonormal in L2, and the representing matrix is the same
//!   in either scaling, so trace-symmetry of the map is exactly Hermitianity
//!   of its matrix.
//! * Choi kernels are normalized by `T(a) = (tau (x) id)(C_T (a (x) 1))`, so
//!   the kernel of the trace conditional expectation is `1 (x) 1` and the
//!   kernel of the identity map is rank one with operator norm `n^2`. With
//!   this normalization the completely bounded `L1 -> Linf` norm of a map is
//!   the operator norm of its kernel.
//! * `[rho]` denotes multiplication by the weight `int_0^1 rho^s x rho^{1-s}
//!   ds`, realized as a double operator integral with the logarithmic-mean
//!   kernel `J(x, y) = (x - y) / (log x - log y)`, `J(x, x) = x`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-12;
/// Eigenvalues closer than this fraction of the spectral diameter are treated
/// as equal when a kernel diagonal is substituted.
pub const CLUSTER_TOL: f64 = 1e-12;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn ci(im: f64) -> Complex64 {
    Complex64::new(0.0, im)
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * c(0.5))
}

/// Max-entry deviation of `m` from its own adjoint.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Row-major vectorization; index `(j, k) -> j*n + k`.
pub fn vec_op(x: &CMat) -> CVec {
    let n = x.nrows();
    CVec::from_fn(n * n, |i, _| x[(i / n, i % n)])
}

pub fn unvec_op(v: &CVec, n: usize) -> CMat {
    CMat::from_fn(n, n, |j, k| v[j * n + k])
}

/// Normalized trace `Tr(x)/n`.
pub fn tau(x: &CMat) -> Complex64 {
    let n = x.nrows();
    x.diagonal().sum() / c(n as f64)
}

/// L2 inner product `tau(x^* y)`.
pub fn l2_inner(x: &CMat, y: &CMat) -> Complex64 {
    let n = x.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            s += x[(j, k)].conj() * y[(j, k)];
        }
    }
    s / c(n as f64)
}

pub fn l2_norm(x: &CMat) -> f64 {
    l2_inner(x, x).re.max(0.0).sqrt()
}

/// A validated Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    dim: usize,
    mat: CMat,
}

impl HermitianOperator {
    /// Rejects inputs whose Hermiticity deviation exceeds
    /// `HERM_TOL * max(1, |input|_max)`.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        let dev = hermiticity_deviation(&mat);
        if dev > HERM_TOL * max_abs(&mat).max(1.0) {
            return Err(Error::NonHermitianInput(dev));
        }
        Ok(Self {
            dim: mat.nrows(),
            mat: hermitize(&mat),
        })
    }

    /// Symmetrizes the input instead of rejecting it; for results of
    /// numerically Hermitian computations.
    pub fn enforce(mat: &CMat) -> Self {
        Self {
            dim: mat.nrows(),
            mat: hermitize(mat),
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            dim: n,
            mat: CMat::from_fn(n, n, |j, k| if j == k { c(d[j]) } else { c(0.0) }),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            dim: n,
            mat: identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn tau(&self) -> f64 {
        tau(&self.mat).re
    }

    pub fn eig(&self) -> EigenDecomposition {
        eig_hermitian(&self.mat).expect("validated Hermitian matrix")
    }
}

/// Spectral decomposition `H = U diag(values) U^*` with ascending eigenvalues
/// and matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `U f(diag) U^*` for a real scalar map over the spectrum.
    pub fn apply_scalar(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let u = &self.vectors;
        let mut scaled = u.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let fv = c(f(v));
            for j in 0..n {
                scaled[(j, k)] *= fv;
            }
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply_scalar(|x| x)
    }

    /// Conjugates `x` into the eigenbasis: `U^* x U`.
    pub fn to_eigenbasis(&self, x: &CMat) -> CMat {
        self.vectors.adjoint() * x * &self.vectors
    }

    pub fn from_eigenbasis(&self, x: &CMat) -> CMat {
        &self.vectors * x * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eig_hermitian(mat: &CMat) -> Result<EigenDecomposition> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
    }
    let dev = hermiticity_deviation(mat);
    if dev > HERM_TOL * max_abs(mat).max(1.0) {
        return Err(Error::NonHermitianInput(dev));
    }
    let n = mat.nrows();
    let se = nalgebra::SymmetricEigen::new(hermitize(mat));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |j, k| se.eigenvectors[(j, idx[k])]);
    Ok(EigenDecomposition { values, vectors })
}

/// `f(H)` through the spectral decomposition. The scalar map must be finite
/// on the whole spectrum.
pub fn matrix_function(
    h: &HermitianOperator,
    f: impl Fn(f64) -> f64,
) -> Result<HermitianOperator> {
    let eig = h.eig();
    for &v in &eig.values {
        if !f(v).is_finite() {
            return Err(Error::DomainViolation(v));
        }
    }
    Ok(HermitianOperator::enforce(&eig.apply_scalar(f)))
}

/// A bivariate spectral kernel with an explicit diagonal. The diagonal is
/// substituted whenever two eigenvalues fall in the same numerical cluster.
pub trait BivariateKernel {
    fn off_diag(&self, x: f64, y: f64) -> f64;
    fn diag(&self, x: f64) -> f64;
}

/// `log(x/y)` with full relative accuracy for nearby positive arguments.
fn log_ratio(x: f64, y: f64) -> f64 {
    let d = x - y;
    if d.abs() < 0.5 * y.abs() {
        (d / y).ln_1p()
    } else {
        (x / y).ln()
    }
}

/// Logarithmic mean `J(x, y) = (x - y)/(log x - log y)`, `J(x, x) = x`.
pub struct LogMean;

impl BivariateKernel for LogMean {
    fn off_diag(&self, x: f64, y: f64) -> f64 {
        (x - y) / log_ratio(x, y)
    }
    fn diag(&self, x: f64) -> f64 {
        x
    }
}

/// Reciprocal logarithmic mean `(log x - log y)/(x - y)`, diagonal `1/x`.
pub struct LogMeanInv;

impl BivariateKernel for LogMeanInv {
    fn off_diag(&self, x: f64, y: f64) -> f64 {
        log_ratio(x, y) / (x - y)
    }
    fn diag(&self, x: f64) -> f64 {
        1.0 / x
    }
}

/// Divided difference of a scalar map: `(f(x) - f(y))/(x - y)` off the
/// diagonal and `f'(x)` on it.
pub struct DividedDifference<F, G> {
    pub f: F,
    pub fprime: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> BivariateKernel for DividedDifference<F, G> {
    fn off_diag(&self, x: f64, y: f64) -> f64 {
        ((self.f)(x) - (self.f)(y)) / (x - y)
    }
    fn diag(&self, x: f64) -> f64 {
        (self.fprime)(x)
    }
}

/// Arbitrary kernel given by two closures.
pub struct RawKernel<F, G> {
    pub off: F,
    pub diag: G,
}

impl<F: Fn(f64, f64) -> f64, G: Fn(f64) -> f64> BivariateKernel for RawKernel<F, G> {
    fn off_diag(&self, x: f64, y: f64) -> f64 {
        (self.off)(x, y)
    }
    fn diag(&self, x: f64) -> f64 {
        (self.diag)(x)
    }
}

/// `sum_{j,k} F(p_j, p_k) P_j X P_k` in the eigenbasis of `rho`.
///
/// Eigenvalues closer than `CLUSTER_TOL` times the spectral diameter share a
/// cluster and receive the kernel diagonal.
pub fn double_operator_integral(
    rho: &HermitianOperator,
    kernel: &impl BivariateKernel,
    x: &CMat,
) -> Result<CMat> {
    let n = rho.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch(x.nrows(), n));
    }
    let eig = rho.eig();
    let diameter = eig.max() - eig.min();
    let ctol = CLUSTER_TOL * diameter;
    let mut xt = eig.to_eigenbasis(x);
    for j in 0..n {
        for k in 0..n {
            let (pj, pk) = (eig.values[j], eig.values[k]);
            let f = if (pj - pk).abs() <= ctol {
                kernel.diag(0.5 * (pj + pk))
            } else {
                kernel.off_diag(pj, pk)
            };
            if !f.is_finite() {
                return Err(Error::SingularKernel(pj, pk));
            }
            xt[(j, k)] *= c(f);
        }
    }
    Ok(eig.from_eigenbasis(&xt))
}

fn require_positive_definite(rho: &HermitianOperator) -> Result<()> {
    let min = rho.eig().min();
    if min <= 0.0 {
        return Err(Error::DomainViolation(min));
    }
    Ok(())
}

/// `[rho] x = int_0^1 rho^s x rho^{1-s} ds`, the logarithmic-mean weighting.
pub fn chi_bracket(rho: &HermitianOperator, x: &CMat) -> Result<CMat> {
    require_positive_definite(rho)?;
    double_operator_integral(rho, &LogMean, x)
}

/// Inverse weighting `[rho]^{-1} x`.
pub fn chi_bracket_inv(rho: &HermitianOperator, x: &CMat) -> Result<CMat> {
    require_positive_definite(rho)?;
    double_operator_integral(rho, &LogMeanInv, x)
}

/// Weighted inner product `<xi, [rho] eta> = int_0^1 tau(xi^* rho^{1-s} eta
/// rho^s) ds` for a density `rho`.
///
/// Components of `xi` or `eta` off the support of `rho` carry zero weight;
/// if their mass exceeds `1e-10` relative to the operator the input is
/// rejected as a `SupportViolation`.
pub fn weighted_inner(rho: &HermitianOperator, xi: &CMat, eta: &CMat) -> Result<Complex64> {
    let n = rho.dim();
    if xi.nrows() != n || eta.nrows() != n {
        return Err(Error::DimensionMismatch(xi.nrows(), n));
    }
    let eig = rho.eig();
    let scale = eig.max().abs().max(1.0);
    if eig.min() < -1e-12 * scale {
        return Err(Error::Numeric(format!(
            "weight is not positive semidefinite (min eigenvalue {:.3e})",
            eig.min()
        )));
    }
    let supp_tol = 1e-12 * scale;
    let kernel: Vec<bool> = eig.values.iter().map(|&p| p <= supp_tol).collect();
    let xt = eig.to_eigenbasis(xi);
    let et = eig.to_eigenbasis(eta);
    if kernel.iter().any(|&k| k) {
        for m in [&xt, &et] {
            let total: f64 = m.iter().map(|z| z.norm_sqr()).sum();
            let mut off = 0.0;
            for j in 0..n {
                for k in 0..n {
                    if kernel[j] || kernel[k] {
                        off += m[(j, k)].norm_sqr();
                    }
                }
            }
            if off > 1e-10 * total.max(1e-300) {
                return Err(Error::SupportViolation(off.sqrt()));
            }
        }
    }
    let j_kernel = LogMean;
    let diameter = eig.max() - eig.min();
    let ctol = CLUSTER_TOL * diameter;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            if kernel[j] || kernel[k] {
                continue;
            }
            let (pj, pk) = (eig.values[j], eig.values[k]);
            let w = if (pj - pk).abs() <= ctol {
                j_kernel.diag(0.5 * (pj + pk))
            } else {
                j_kernel.off_diag(pj, pk)
            };
            s += c(w) * xt[(j, k)].conj() * et[(j, k)];
        }
    }
    Ok(s / c(n as f64))
}

/// Verification state of a structural property.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verified {
    True,
    False,
    Unchecked,
}

#[derive(Clone, Copy, Debug)]
pub struct SuperopFlags {
    pub trace_symmetric: Verified,
    pub completely_positive: Verified,
    pub unital: Verified,
}

impl SuperopFlags {
    pub fn unchecked() -> Self {
        Self {
            trace_symmetric: Verified::Unchecked,
            completely_positive: Verified::Unchecked,
            unital: Verified::Unchecked,
        }
    }
}

/// A linear map on `M_n` in the matrix-unit basis.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    mat: CMat,
    pub flags: SuperopFlags,
}

impl Superoperator {
    pub fn new(dim: usize, mat: CMat) -> Result<Self> {
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(mat.nrows(), dim * dim));
        }
        Ok(Self {
            dim,
            mat,
            flags: SuperopFlags::unchecked(),
        })
    }

    /// Assembles the matrix column by column from the action on matrix units.
    pub fn from_map(dim: usize, map: impl Fn(&CMat) -> CMat) -> Self {
        let d2 = dim * dim;
        let mut mat = CMat::zeros(d2, d2);
        for l in 0..dim {
            for m in 0..dim {
                let mut unit = CMat::zeros(dim, dim);
                unit[(l, m)] = c(1.0);
                let img = vec_op(&map(&unit));
                mat.set_column(l * dim + m, &img);
            }
        }
        Self {
            dim,
            mat,
            flags: SuperopFlags::unchecked(),
        }
    }

    pub fn identity_map(dim: usize) -> Self {
        Self {
            dim,
            mat: CMat::identity(dim * dim, dim * dim),
            flags: SuperopFlags::unchecked(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        unvec_op(&(&self.mat * vec_op(x)), self.dim)
    }

    /// Max-entry deviation from L2 self-adjointness.
    pub fn symmetry_deviation(&self) -> f64 {
        hermiticity_deviation(&self.mat)
    }

    /// Deviation from `T(x^*) = T(x)^*`.
    pub fn star_preservation_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let a = self.mat[(j * n + k, l * n + m)];
                        let b = self.mat[(k * n + j, m * n + l)].conj();
                        dev = dev.max((a - b).norm());
                    }
                }
            }
        }
        dev
    }

    /// Choi kernel `n * sum_{j,k} e_jk (x) T(e_jk)`.
    pub fn choi(&self) -> ChoiMatrix {
        let n = self.dim;
        let nf = c(n as f64);
        let mut mat = CMat::zeros(n * n, n * n);
        for a in 0..n {
            for cc in 0..n {
                let col = self.mat.column(a * n + cc).clone_owned();
                let y = unvec_op(&col, n);
                for b in 0..n {
                    for d in 0..n {
                        mat[(a * n + b, cc * n + d)] = nf * y[(b, d)];
                    }
                }
            }
        }
        ChoiMatrix { dim: n, mat }
    }

    /// Extends to `T (x) id_m` acting on `M_{n*m}` with the row-major
    /// composite index `(a1, a2) -> a1*m + a2`.
    pub fn tensor_with_identity(&self, m: usize) -> Superoperator {
        let n = self.dim;
        let big = n * m;
        Superoperator::from_map(big, |x| {
            let mut out = CMat::zeros(big, big);
            // act on the first factor slice by slice
            for a2 in 0..m {
                for b2 in 0..m {
                    let slice = CMat::from_fn(n, n, |a1, b1| x[(a1 * m + a2, b1 * m + b2)]);
                    let img = self.apply(&slice);
                    for a1 in 0..n {
                        for b1 in 0..n {
                            out[(a1 * m + a2, b1 * m + b2)] = img[(a1, b1)];
                        }
                    }
                }
            }
            out
        })
    }

    /// Computes all three structural flags at tolerance `1e-10`.
    pub fn with_verified_flags(mut self) -> Self {
        let scale = max_abs(&self.mat).max(1.0);
        let sym = self.symmetry_deviation() <= 1e-10 * scale;
        let one = identity(self.dim);
        let unital = max_abs(&(self.apply(&one) - &one)) <= 1e-10 * scale;
        let choi = self.choi();
        let cp = choi.hermiticity_deviation() <= 1e-10 * scale.max(choi.scale())
            && choi.min_eigenvalue() >= -1e-10 * choi.scale();
        let v = |b: bool| if b { Verified::True } else { Verified::False };
        self.flags = SuperopFlags {
            trace_symmetric: v(sym),
            completely_positive: v(cp),
            unital: v(unital),
        };
        self
    }
}

/// Choi kernel of a superoperator, an `n^2 x n^2` matrix.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    dim: usize,
    mat: CMat,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    fn scale(&self) -> f64 {
        max_abs(&self.mat).max(1.0)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian(&hermitize(&self.mat))
            .expect("hermitized matrix")
            .min()
    }

    /// Operator norm: largest absolute eigenvalue for Hermitian kernels,
    /// largest singular value otherwise.
    pub fn operator_norm(&self) -> f64 {
        if self.hermiticity_deviation() <= 1e-10 * self.scale() {
            let eig = eig_hermitian(&hermitize(&self.mat)).expect("hermitized matrix");
            eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
        } else {
            let gram = self.mat.adjoint() * &self.mat;
            eig_hermitian(&hermitize(&gram))
                .expect("gram matrix")
                .max()
                .max(0.0)
                .sqrt()
        }
    }
}

/// Completely bounded `L1 -> Linf` norm via the operator norm of the Choi
/// kernel.
pub fn cb_norm_1_to_inf(t: &Superoperator) -> f64 {
    t.choi().operator_norm()
}

/// Which tensor factor a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracedFactor {
    First,
    Second,
}

/// Partial trace on `M_n (x) M_m` with the traced factor averaged, so a
/// density maps to a density.
pub fn partial_trace(x: &CMat, n: usize, m: usize, factor: TracedFactor) -> Result<CMat> {
    if x.nrows() != n * m || x.ncols() != n * m {
        return Err(Error::DimensionMismatch(x.nrows(), n * m));
    }
    match factor {
        TracedFactor::First => {
            let mut out = CMat::zeros(m, m);
            for a2 in 0..m {
                for b2 in 0..m {
                    let mut s = Complex64::new(0.0, 0.0);
                    for a1 in 0..n {
                        s += x[(a1 * m + a2, a1 * m + b2)];
                    }
                    out[(a2, b2)] = s / c(n as f64);
                }
            }
            Ok(out)
        }
        TracedFactor::Second => {
            let mut out = CMat::zeros(n, n);
            for a1 in 0..n {
                for b1 in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for a2 in 0..m {
                        s += x[(a1 * m + a2, b1 * m + a2)];
                    }
                    out[(a1, b1)] = s / c(m as f64);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::sample;
    use approx::assert_relative_eq;

    fn witness() -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&[1.5, 0.75, 0.75])
    }

    fn trace_superop(n: usize) -> Superoperator {
        // E_tau(x) = tau(x) 1
        Superoperator::from_map(n, |x| identity(n) * tau(x))
    }

    #[test]
    fn eigenvalues_sorted_ascending() {
        let eig = witness().eig();
        assert_relative_eq!(eig.values[0], 0.75, epsilon = 1e-14);
        assert_relative_eq!(eig.values[1], 0.75, epsilon = 1e-14);
        assert_relative_eq!(eig.values[2], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn eigendecomposition_reconstructs_and_is_unitary() {
        let mut rng = sample::rng(11);
        let h = HermitianOperator::enforce(&sample::random_hermitian(6, &mut rng));
        let eig = h.eig();
        assert!(max_abs(&(eig.reconstruct() - h.mat())) < 1e-10);
        let gram = eig.vectors.adjoint() * &eig.vectors;
        assert!(max_abs(&(gram - identity(6))) < 1e-12);
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let mut m = identity(2);
        m[(0, 1)] = c(1.0);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NonHermitianInput(_))
        ));
    }

    #[test]
    fn matrix_log_exp_round_trip() {
        let mut rng = sample::rng(7);
        let rho = sample::random_density_strict(5, 0.8, &mut rng);
        let lg = matrix_function(&rho, f64::ln).unwrap();
        let back = matrix_function(&lg, f64::exp).unwrap();
        assert!(max_abs(&(back.mat() - rho.mat())) < 1e-11);
    }

    #[test]
    fn matrix_log_of_witness_is_diagonal_closed_form() {
        let lg = matrix_function(&witness(), f64::ln).unwrap();
        let expect =
            HermitianOperator::from_real_diagonal(&[1.5f64.ln(), 0.75f64.ln(), 0.75f64.ln()]);
        assert!(max_abs(&(lg.mat() - expect.mat())) < 1e-14);
    }

    #[test]
    fn log_of_singular_matrix_is_domain_violation() {
        let rho = HermitianOperator::from_real_diagonal(&[2.0, 0.0]);
        assert!(matches!(
            matrix_function(&rho, f64::ln),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn doi_constant_kernel_is_identity() {
        let mut rng = sample::rng(3);
        let rho = sample::random_density_strict(4, 0.7, &mut rng);
        let x = sample::random_hermitian(4, &mut rng);
        let k = RawKernel {
            off: |_, _| 1.0,
            diag: |_| 1.0,
        };
        let y = double_operator_integral(&rho, &k, &x).unwrap();
        assert!(max_abs(&(y - x)) < 1e-12);
    }

    #[test]
    fn doi_left_multiplication_kernel() {
        let mut rng = sample::rng(4);
        let rho = sample::random_density_strict(4, 0.7, &mut rng);
        let x = sample::random_hermitian(4, &mut rng);
        let k = RawKernel {
            off: |a: f64, _| a,
            diag: |a: f64| a,
        };
        let y = double_operator_integral(&rho, &k, &x).unwrap();
        assert!(max_abs(&(y - rho.mat() * &x)) < 1e-12);
    }

    #[test]
    fn doi_log_divided_difference_chain_rule() {
        // the divided difference of log maps i[B, rho] to i[B, log rho]
        let mut rng = sample::rng(5);
        let rho = sample::random_density_strict(5, 0.6, &mut rng);
        let b = sample::random_hermitian(5, &mut rng);
        let db = commutator(&b, rho.mat()).map(|z| z * ci(1.0));
        let out = double_operator_integral(&rho, &LogMeanInv, &db).unwrap();
        let lg = matrix_function(&rho, f64::ln).unwrap();
        let expect = commutator(&b, lg.mat()).map(|z| z * ci(1.0));
        assert!(max_abs(&(out - expect)) < 1e-9);
    }

    #[test]
    fn chi_bracket_round_trip() {
        let mut rng = sample::rng(6);
        let rho = sample::random_density_strict(5, 0.9, &mut rng);
        let x = sample::random_hermitian(5, &mut rng);
        let y = chi_bracket(&rho, &x).unwrap();
        let back = chi_bracket_inv(&rho, &y).unwrap();
        assert!(max_abs(&(back - x)) < 1e-9);
    }

    #[test]
    fn chi_bracket_of_commuting_argument_is_multiplication() {
        let rho = witness();
        let x = rho.mat() * rho.mat();
        let y = chi_bracket(&rho, &x).unwrap();
        assert!(max_abs(&(y - rho.mat() * &x)) < 1e-12);
    }

    #[test]
    fn weighted_inner_matches_quadrature() {
        let mut rng = sample::rng(8);
        for trial in 0..100 {
            let n = 2 + (trial % 5);
            let rho = sample::random_density_strict(n, 0.8, &mut rng);
            let xi = sample::random_ginibre(n, &mut rng);
            let eta = sample::random_ginibre(n, &mut rng);
            let fast = weighted_inner(&rho, &xi, &eta).unwrap();
            let slow = oracle::weighted_inner_quadrature(&rho, &xi, &eta, 64);
            assert!(
                (fast - slow).norm() < 1e-8 * (1.0 + slow.norm()),
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn weighted_inner_at_identity_is_l2() {
        let mut rng = sample::rng(9);
        let xi = sample::random_ginibre(4, &mut rng);
        let eta = sample::random_ginibre(4, &mut rng);
        let got = weighted_inner(&HermitianOperator::identity(4), &xi, &eta).unwrap();
        assert!((got - l2_inner(&xi, &eta)).norm() < 1e-12);
    }

    #[test]
    fn weighted_inner_is_positive_semidefinite() {
        let mut rng = sample::rng(10);
        for _ in 0..20 {
            let rho = sample::random_density_strict(4, 1.0, &mut rng);
            let xi = sample::random_ginibre(4, &mut rng);
            let v = weighted_inner(&rho, &xi, &xi).unwrap();
            assert!(v.im.abs() < 1e-12);
            assert!(v.re >= -1e-12);
        }
    }

    #[test]
    fn weighted_inner_detects_support_violation() {
        let rho = HermitianOperator::from_real_diagonal(&[2.0, 0.0]);
        let mut xi = CMat::zeros(2, 2);
        xi[(1, 1)] = c(1.0);
        assert!(matches!(
            weighted_inner(&rho, &xi, &xi),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn choi_of_trace_expectation_is_identity_kernel() {
        for n in [2usize, 3, 4] {
            let e = trace_superop(n);
            let choi = e.choi();
            assert!(max_abs(&(choi.matrix() - identity(n * n))) < 1e-12);
            assert_relative_eq!(cb_norm_1_to_inf(&e), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn choi_of_identity_map_is_rank_one_with_norm_dim_squared() {
        for n in [2usize, 3] {
            let id = Superoperator::identity_map(n);
            let choi = id.choi();
            let eig = eig_hermitian(choi.matrix()).unwrap();
            let big: Vec<f64> = eig.values.iter().copied().filter(|v| v.abs() > 1e-9).collect();
            assert_eq!(big.len(), 1);
            assert_relative_eq!(big[0], (n * n) as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn cb_norm_of_centered_identity() {
        for n in [2usize, 3, 4] {
            let map = Superoperator::from_map(n, |x| x - identity(n) * tau(x));
            let norm = cb_norm_1_to_inf(&map);
            assert_relative_eq!(norm, (n * n - 1) as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn trace_symmetric_star_preserving_map_has_hermitian_choi() {
        let mut rng = sample::rng(12);
        let k = sample::random_ginibre(3, &mut rng);
        let kt = k.adjoint();
        let map = Superoperator::from_map(3, |x| &k * x * &kt + &kt * x * &k);
        assert!(map.symmetry_deviation() < 1e-12);
        assert!(map.star_preservation_deviation() < 1e-12);
        assert!(map.choi().hermiticity_deviation() < 1e-12);
        // Hermitian input, Hermitian output
        let h = sample::random_hermitian(3, &mut rng);
        assert!(hermiticity_deviation(&map.apply(&h)) < 1e-10);
    }

    #[test]
    fn verified_flags_on_trace_expectation() {
        let e = trace_superop(3).with_verified_flags();
        assert_eq!(e.flags.trace_symmetric, Verified::True);
        assert_eq!(e.flags.completely_positive, Verified::True);
        assert_eq!(e.flags.unital, Verified::True);
    }

    #[test]
    fn tensor_with_identity_acts_on_first_factor() {
        let mut rng = sample::rng(13);
        let e = trace_superop(2);
        let big = e.tensor_with_identity(3);
        let a = sample::random_hermitian(2, &mut rng);
        let b = sample::random_hermitian(3, &mut rng);
        let x = kron(&a, &b);
        let expect = kron(&(identity(2) * tau(&a)), &b);
        assert!(max_abs(&(big.apply(&x) - expect)) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_states() {
        let mut rng = sample::rng(14);
        let a = sample::random_density_strict(2, 0.5, &mut rng);
        let b = sample::random_density_strict(3, 0.5, &mut rng);
        let x = kron(a.mat(), b.mat());
        let first = partial_trace(&x, 2, 3, TracedFactor::First).unwrap();
        assert!(max_abs(&(first - b.mat())) < 1e-12);
        let second = partial_trace(&x, 2, 3, TracedFactor::Second).unwrap();
        assert!(max_abs(&(second - a.mat())) < 1e-12);
    }

    #[test]
    fn partial_trace_of_maximally_entangled_state_is_identity() {
        // tau-normalized maximally entangled density 4 |phi><phi| on M_2 (x) M_2
        let mut phi = CMat::zeros(4, 4);
        for a in [0usize, 3] {
            for b in [0usize, 3] {
                phi[(a, b)] = c(2.0);
            }
        }
        let red = partial_trace(&phi, 2, 2, TracedFactor::First).unwrap();
        assert!(max_abs(&(red - identity(2))) < 1e-14);
        // a tau-value 1/2 input reproduces the half-identity marginal
        let half = partial_trace(&(phi.clone() * c(0.5)), 2, 2, TracedFactor::Second).unwrap();
        assert!(max_abs(&(half - identity(2) * c(0.5))) < 1e-14);
    }

    #[test]
    fn random_trial_superop_flag_detection() {
        let mut rng = sample::rng(15);
        // a non-symmetric map is flagged
        let g = sample::random_ginibre(2, &mut rng);
        let gt = g.adjoint();
        let map = Superoperator::from_map(2, |x| &g * x * &gt).with_verified_flags();
        assert_eq!(map.flags.completely_positive, Verified::True);
        assert_eq!(map.flags.unital, Verified::False);
    }
}
