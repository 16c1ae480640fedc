//! Builders for the worked model families.
//!
//! Each builder validates its spec, assembles the generator, attaches the
//! companion structures that later analysis keys on (derivation, extension
//! semigroup, transference chain), and records the spectrum the construction
//! predicts.  Structural identities that the construction is supposed to
//! guarantee, such as the derivation representing the gradient form, are
//! checked numerically at build time and failures are reported as errors
//! rather than deferred to analysis.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::Subalgebra;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, Superoperator};
use crate::semigroup::{
    verify_derivation, verify_intertwining, Carrier, ClassicalChain, Derivation, DerivationKind,
    Extension, ModelKind, ResidualReport, SemigroupModel,
};

/// Entrywise tolerance for spec matrices (symmetry, vanishing diagonal,
/// centrality), relative to the largest entry.
pub const SPEC_ENTRY_TOL: f64 = 1e-12;

/// Declared and computed generator spectra must agree to this.
pub const SPECTRUM_TOL: f64 = 1e-10;

/// Gram eigenvalues below `-CND_TOL * scale` disqualify a cost matrix;
/// negative eigenvalues above that are treated as roundoff and clipped.
pub const CND_TOL: f64 = 1e-8;

/// Rebuilding the cost matrix from its Gram vectors must match to this.
pub const ROUNDTRIP_TOL: f64 = 1e-8;

const BUILD_SEED: u64 = 0x6d6f_64656c;
const BUILD_SAMPLES: usize = 10;
const INTERTWINING_TIMES: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

/// Multiplication table of a finite group.  Element `0` is the identity.
#[derive(Clone, Debug)]
pub struct GroupTable {
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
}

impl GroupTable {
    /// Accepts `mul[g][h] = g * h` after checking the group axioms.
    pub fn new(mul: Vec<Vec<usize>>) -> Result<Self> {
        let n = mul.len();
        if n == 0 {
            return Err(Error::InvalidSpec("empty multiplication table".into()));
        }
        for (g, row) in mul.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(row.len(), n));
            }
            for (h, &p) in row.iter().enumerate() {
                if p >= n {
                    return Err(Error::InvalidSpec(format!(
                        "product {p} out of range at ({g}, {h})"
                    )));
                }
            }
        }
        for g in 0..n {
            if mul[0][g] != g || mul[g][0] != g {
                return Err(Error::InvalidSpec("element 0 is not an identity".into()));
            }
        }
        for g in 0..n {
            let mut in_row = vec![false; n];
            let mut in_col = vec![false; n];
            for h in 0..n {
                if in_row[mul[g][h]] || in_col[mul[h][g]] {
                    return Err(Error::InvalidSpec(format!(
                        "row or column {g} repeats a product"
                    )));
                }
                in_row[mul[g][h]] = true;
                in_col[mul[h][g]] = true;
            }
        }
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    if mul[mul[g][h]][k] != mul[g][mul[h][k]] {
                        return Err(Error::InvalidSpec(format!(
                            "multiplication is not associative at ({g}, {h}, {k})"
                        )));
                    }
                }
            }
        }
        // A finite cancellative monoid is a group; the latin-square check
        // guarantees the inverse lookup succeeds.
        let inv = (0..n)
            .map(|g| (0..n).find(|&h| mul[g][h] == 0).unwrap())
            .collect();
        Ok(Self { mul, inv })
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    /// Cyclic group of order `n`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("empty multiplication table".into()));
        }
        let mul = (0..n).map(|g| (0..n).map(|h| (g + h) % n).collect()).collect();
        Self::new(mul)
    }

    /// Direct product of two cyclic groups; `(x, y)` sits at index `x * b + y`.
    pub fn cyclic_product(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::InvalidSpec("empty multiplication table".into()));
        }
        let n = a * b;
        let mul = (0..n)
            .map(|g| {
                (0..n)
                    .map(|h| {
                        let (gx, gy) = (g / b, g % b);
                        let (hx, hy) = (h / b, h % b);
                        ((gx + hx) % a) * b + (gy + hy) % b
                    })
                    .collect()
            })
            .collect();
        Self::new(mul)
    }

    /// Symmetric group on three letters; products compose permutations,
    /// applying the right factor first.
    pub fn s3() -> Self {
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [1, 2, 0],
            [2, 0, 1],
            [0, 2, 1],
            [2, 1, 0],
            [1, 0, 2],
        ];
        let compose = |p: &[usize; 3], q: &[usize; 3]| [p[q[0]], p[q[1]], p[q[2]]];
        let index = |r: [usize; 3]| perms.iter().position(|p| *p == r).unwrap();
        let mul = perms
            .iter()
            .map(|p| perms.iter().map(|q| index(compose(p, q))).collect())
            .collect();
        Self::new(mul).unwrap()
    }
}

/// The `n^2 - 1` nonidentity discrete Weyl unitaries `X^j Z^l` on `C^n`.
pub fn heisenberg_weyl(n: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for l in 0..n {
            if j != 0 || l != 0 {
                out.push(weyl_unitary(n, j, l));
            }
        }
    }
    out
}

/// `X^j Z^l` where `X` shifts the basis cyclically and `Z` multiplies by
/// powers of the primitive `n`-th root of unity.
pub fn weyl_unitary(n: usize, j: usize, l: usize) -> CMat {
    let mut p = CMat::zeros(n, n);
    for b in 0..n {
        let phase = 2.0 * std::f64::consts::PI * ((b * l) % n) as f64 / n as f64;
        p[((b + j) % n, b)] = Complex64::new(phase.cos(), phase.sin());
    }
    p
}

/// Construction-specific companions the analysis layer keys on.
#[derive(Clone, Debug)]
pub enum ModelMeta {
    Depolarizing {
        rate: f64,
    },
    Schur,
    GroupChain {
        /// Result of the build-time intertwining check at decay rate zero.
        intertwining: ResidualReport,
    },
    Pauli {
        /// The convolution chain the model transfers from.
        transference: Box<BuiltModel>,
    },
    Custom,
}

/// A validated model plus companion structures and its predicted spectrum.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub model: SemigroupModel,
    pub derivation: Option<Derivation>,
    pub extension: Option<Extension>,
    /// Generator eigenvalues the construction predicts, multiplicities
    /// included, in no particular order.
    pub declared_spectrum: Vec<f64>,
    pub meta: ModelMeta,
}

impl BuiltModel {
    /// Largest gap between the sorted declared and computed spectra.
    pub fn spectrum_deviation(&self) -> f64 {
        let computed = self.model.generator.spectrum();
        if self.declared_spectrum.len() != computed.len() {
            return f64::INFINITY;
        }
        let mut declared = self.declared_spectrum.clone();
        declared.sort_by(f64::total_cmp);
        declared
            .iter()
            .zip(computed.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// `A = rate (id - E)` for the trace-preserving conditional expectation onto
/// `target`.  With the trivial target the discrete Weyl commutator derivation
/// is attached; its representation of the gradient form is checked at build
/// time.
pub fn depolarizing(n: usize, target: Subalgebra, rate: f64) -> Result<BuiltModel> {
    if n == 0 {
        return Err(Error::InvalidSpec("zero-dimensional model".into()));
    }
    if target.ambient_dim() != n {
        return Err(Error::DimensionMismatch(target.ambient_dim(), n));
    }
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "depolarizing rate must be positive, got {rate}"
        )));
    }
    let target_dim = target.dim();
    let exp = crate::algebra::ConditionalExpectation::new(target)?;
    let gen_mat = (CMat::identity(n * n, n * n) - exp.superop().matrix()) * c(rate);
    let model = SemigroupModel::new(
        Superoperator::new(n, gen_mat)?,
        ModelKind::Depolarizing,
        Carrier::Quantum,
    )?;
    if model.fixed_algebra.dim() != target_dim {
        return Err(Error::Numeric(format!(
            "fixed-point algebra has dimension {} but the target has {}",
            model.fixed_algebra.dim(),
            target_dim
        )));
    }
    for b in exp.target().basis() {
        let d = model.fixed_algebra.distance(b);
        if d > 1e-8 {
            return Err(Error::Numeric(format!(
                "fixed-point algebra misses a target basis element by {d}"
            )));
        }
    }

    let (derivation, extension) = if exp.target().is_trivial() {
        let vs = heisenberg_weyl(n);
        let weights = vec![1.0; vs.len()];
        let der = Derivation {
            kind: DerivationKind::Commutators {
                scale: rate.sqrt() / (2.0f64.sqrt() * n as f64),
                vs,
            },
            weights,
            restrict_to_diagonal: false,
        };
        let report = verify_derivation(&model.generator, &der, BUILD_SAMPLES, BUILD_SEED)?;
        if !report.passed() {
            return Err(Error::Numeric(format!(
                "Weyl derivation residual {} exceeds tolerance",
                report.max_residual
            )));
        }
        (Some(der), Some(Extension::ModelTensorIdentity))
    } else {
        (None, None)
    };

    let mut declared = vec![0.0; target_dim];
    declared.extend(std::iter::repeat(rate).take(n * n - target_dim));
    Ok(BuiltModel {
        model,
        derivation,
        extension,
        declared_spectrum: declared,
        meta: ModelMeta::Depolarizing { rate },
    })
}

/// Cost matrix for a Schur multiplier semigroup `T_t(x) = e^{-tb} (.) x`.
#[derive(Clone, Debug)]
pub struct SchurSpec {
    pub b: DMatrix<f64>,
}

/// Builds the Schur multiplier semigroup `A(x) = b (.) x` after checking
/// that `b` is a squared-distance matrix of some point configuration: zero
/// diagonal, symmetric, and conditionally negative.  The Gram factorization
/// that witnesses this also supplies the derivation.
pub fn schur_semigroup(spec: &SchurSpec) -> Result<BuiltModel> {
    let b = &spec.b;
    let m = b.nrows();
    if m == 0 || b.ncols() != m {
        return Err(Error::DimensionMismatch(b.nrows(), b.ncols()));
    }
    let scale = b.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for j in 0..m {
        if b[(j, j)].abs() > SPEC_ENTRY_TOL * scale {
            return Err(Error::InvalidSpec(format!(
                "cost matrix has nonzero diagonal entry {} at {j}",
                b[(j, j)]
            )));
        }
        for k in 0..m {
            if (b[(j, k)] - b[(k, j)]).abs() > SPEC_ENTRY_TOL * scale {
                return Err(Error::NotSymmetric((b[(j, k)] - b[(k, j)]).abs()));
            }
            if b[(j, k)] < -SPEC_ENTRY_TOL * scale {
                return Err(Error::NotConditionallyNegative(b[(j, k)]));
            }
        }
    }

    // Centered Gram matrix -J b J / 2; conditional negativity of b is
    // positivity of this, and its factorization embeds the points.
    let j_c = DMatrix::<f64>::identity(m, m).map(|v| v) - DMatrix::from_element(m, m, 1.0 / m as f64);
    let gram = -(&j_c * b * &j_c) * 0.5;
    let se = nalgebra::SymmetricEigen::new(gram);
    let min_eig = se.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -CND_TOL * scale {
        return Err(Error::NotConditionallyNegative(min_eig));
    }
    let mut coords: Vec<Vec<f64>> = Vec::new();
    for (k, &lam) in se.eigenvalues.iter().enumerate() {
        // Roundoff-sized eigenvalues of either sign are treated as zero.
        if lam > 1e-12 * scale {
            let root = lam.sqrt();
            coords.push((0..m).map(|i| root * se.eigenvectors[(i, k)]).collect());
        }
    }
    let mut roundtrip_dev = 0.0f64;
    for i in 0..m {
        for jdx in 0..m {
            let rebuilt: f64 = coords.iter().map(|w| (w[i] - w[jdx]).powi(2)).sum();
            roundtrip_dev = roundtrip_dev.max((rebuilt - b[(i, jdx)]).abs());
        }
    }
    if roundtrip_dev > ROUNDTRIP_TOL * scale {
        return Err(Error::Numeric(format!(
            "Gram factorization rebuilds the cost matrix off by {roundtrip_dev}"
        )));
    }

    let b_complex = b.map(c);
    let model = SemigroupModel::new(
        Superoperator::from_map(m, move |x| x.component_mul(&b_complex)),
        ModelKind::SchurMultiplier,
        Carrier::Quantum,
    )?;
    let zero_entries = (0..m)
        .flat_map(|i| (0..m).map(move |k| (i, k)))
        .filter(|&(i, k)| b[(i, k)].abs() <= SPEC_ENTRY_TOL * scale)
        .count();
    if model.fixed_algebra.dim() != zero_entries {
        return Err(Error::Numeric(format!(
            "fixed-point dimension {} does not match the {} vanishing costs",
            model.fixed_algebra.dim(),
            zero_entries
        )));
    }

    let ds: Vec<CMat> = coords
        .iter()
        .map(|w| CMat::from_fn(m, m, |i, k| c(w[i] - w[k])))
        .collect();
    let weights = vec![1.0; ds.len()];
    let der = Derivation {
        kind: DerivationKind::SchurMultipliers { ds },
        weights,
        restrict_to_diagonal: false,
    };
    let report = verify_derivation(&model.generator, &der, BUILD_SAMPLES, BUILD_SEED)?;
    if !report.passed() {
        return Err(Error::Numeric(format!(
            "difference derivation residual {} exceeds tolerance",
            report.max_residual
        )));
    }

    let declared: Vec<f64> = (0..m)
        .flat_map(|i| (0..m).map(move |k| b[(i, k)]))
        .collect();
    Ok(BuiltModel {
        model,
        derivation: Some(der),
        extension: Some(Extension::ModelTensorIdentity),
        declared_spectrum: declared,
        meta: ModelMeta::Schur,
    })
}

/// Bi-invariant jump rates over a finite group.
#[derive(Clone, Debug)]
pub struct GroupChainSpec {
    pub group: GroupTable,
    /// `rates[(g, h)]` is the jump rate between distinct elements; the
    /// diagonal is ignored.
    pub rates: DMatrix<f64>,
}

/// Embeds the chain on the diagonal of the matrix algebra with off-diagonal
/// entries decohering at the largest Laplacian eigenvalue, attaches the
/// commutator derivation and the random unitary extension, and verifies
/// intertwining at decay rate zero.
pub fn group_chain(spec: &GroupChainSpec) -> Result<BuiltModel> {
    let table = &spec.group;
    let m = table.order();
    let w = &spec.rates;
    if w.nrows() != m || w.ncols() != m {
        return Err(Error::DimensionMismatch(w.nrows(), w.ncols()));
    }
    let scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for g in 0..m {
        for h in 0..m {
            if g == h {
                continue;
            }
            if w[(g, h)] < -SPEC_ENTRY_TOL * scale {
                return Err(Error::InvalidSpec(format!(
                    "negative jump rate {} at ({g}, {h})",
                    w[(g, h)]
                )));
            }
            if (w[(g, h)] - w[(h, g)]).abs() > SPEC_ENTRY_TOL * scale {
                return Err(Error::NotSymmetric((w[(g, h)] - w[(h, g)]).abs()));
            }
        }
    }
    for s in 0..m {
        for g in 0..m {
            for h in 0..m {
                if g == h {
                    continue;
                }
                let left = (w[(table.mul(s, g), table.mul(s, h))] - w[(g, h)]).abs();
                let right = (w[(table.mul(g, s), table.mul(h, s))] - w[(g, h)]).abs();
                if left > SPEC_ENTRY_TOL * scale || right > SPEC_ENTRY_TOL * scale {
                    return Err(Error::NotCentral);
                }
            }
        }
    }

    let mut lap = DMatrix::<f64>::zeros(m, m);
    for g in 0..m {
        for h in 0..m {
            if g != h {
                lap[(g, h)] = -w[(g, h)];
                lap[(g, g)] += w[(g, h)];
            }
        }
    }
    let chain = ClassicalChain::new(lap.clone())?;
    let se = nalgebra::SymmetricEigen::new(lap.clone());
    let classical_spectrum: Vec<f64> = se.eigenvalues.iter().copied().collect();
    let dephase_rate = classical_spectrum.iter().copied().fold(0.0f64, f64::max);
    if dephase_rate <= 0.0 {
        return Err(Error::NoGap);
    }

    let lap_complex = lap.map(c);
    let superop = Superoperator::from_map(m, move |x| {
        // Diagonal part follows the chain; coherences decay uniformly.
        let mut out = x.map(|z| z * c(dephase_rate));
        for i in 0..m {
            let mut v = Complex64::new(0.0, 0.0);
            for k in 0..m {
                v += lap_complex[(i, k)] * x[(k, k)];
            }
            out[(i, i)] = v;
        }
        out
    });
    let model = SemigroupModel::new(
        superop,
        ModelKind::GroupChain,
        Carrier::Classical(chain.clone()),
    )?;

    // delta(f) = i [B, f] with B holding the square roots of the rates; the
    // diagonal module expectation halves the raw product, hence weight 1/2.
    let b_mat = CMat::from_fn(m, m, |g, h| {
        if g != h {
            c(w[(g, h)].max(0.0).sqrt())
        } else {
            c(0.0)
        }
    });
    let der = Derivation {
        kind: DerivationKind::Commutators {
            scale: 1.0,
            vs: vec![b_mat],
        },
        weights: vec![0.5],
        restrict_to_diagonal: true,
    };
    let report = verify_derivation(&model.generator, &der, BUILD_SAMPLES, BUILD_SEED)?;
    if !report.passed() {
        return Err(Error::Numeric(format!(
            "chain derivation residual {} exceeds tolerance",
            report.max_residual
        )));
    }

    let unitaries: Vec<CMat> = (0..m)
        .map(|r| {
            let mut u = CMat::zeros(m, m);
            for g in 0..m {
                u[(table.mul(g, r), g)] = c(1.0);
            }
            u
        })
        .collect();
    let ext = Extension::RandomUnitary {
        unitaries,
        chain: chain.clone(),
    };
    let intertwining = verify_intertwining(
        &model.generator,
        &der,
        &ext,
        0.0,
        &INTERTWINING_TIMES,
        6,
        BUILD_SEED,
    )?;
    if !intertwining.passed() {
        return Err(Error::Numeric(format!(
            "right-shift extension misses intertwining by {}",
            intertwining.max_residual
        )));
    }

    let mut declared = classical_spectrum;
    declared.extend(std::iter::repeat(dephase_rate).take(m * m - m));
    Ok(BuiltModel {
        model,
        derivation: Some(der),
        extension: Some(ext),
        declared_spectrum: declared,
        meta: ModelMeta::GroupChain { intertwining },
    })
}

/// Jump rates over nonidentity discrete Weyl labels.
#[derive(Clone, Debug)]
pub struct PauliSpec {
    pub m: usize,
    /// `rates[(j, l)]` weights conjugation by `X^j Z^l`; the identity label
    /// `(0, 0)` must carry no rate.
    pub rates: DMatrix<f64>,
}

/// `A(rho) = sum_(j,l) rates[(j, l)] (rho - P rho P^*)` over the discrete
/// Weyl unitaries, together with the convolution chain on the label group
/// it transfers from.  The generator is trace-symmetric exactly when the
/// rates are symmetric under label inversion.
pub fn pauli_random_unitary(spec: &PauliSpec) -> Result<BuiltModel> {
    let m = spec.m;
    if m < 2 {
        return Err(Error::InvalidSpec(format!(
            "Weyl model needs dimension at least 2, got {m}"
        )));
    }
    if spec.rates.nrows() != m || spec.rates.ncols() != m {
        return Err(Error::DimensionMismatch(spec.rates.nrows(), m));
    }
    let scale = spec.rates.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if spec.rates[(0, 0)].abs() > SPEC_ENTRY_TOL * scale {
        return Err(Error::InvalidSpec(
            "identity label must carry no rate".into(),
        ));
    }
    let mut jumps: Vec<(f64, CMat)> = Vec::new();
    let mut total = 0.0;
    for j in 0..m {
        for l in 0..m {
            let r = spec.rates[(j, l)];
            if r < -SPEC_ENTRY_TOL * scale {
                return Err(Error::InvalidSpec(format!(
                    "negative rate {r} at label ({j}, {l})"
                )));
            }
            if (j != 0 || l != 0) && r > 0.0 {
                jumps.push((r, weyl_unitary(m, j, l)));
                total += r;
            }
        }
    }
    let superop = Superoperator::from_map(m, move |x| {
        let mut out = x.map(|z| z * c(total));
        for (r, p) in &jumps {
            out -= (p * x * p.adjoint()).map(|z| z * c(*r));
        }
        out
    });
    let model = SemigroupModel::new(superop, ModelKind::PauliRandomUnitary, Carrier::Quantum)?;

    // Convolution chain on the label group; the symplectic pairing matches
    // its spectrum with the generator's.
    let group = GroupTable::cyclic_product(m, m)?;
    let mut w = DMatrix::<f64>::zeros(m * m, m * m);
    for g in 0..m * m {
        for h in 0..m * m {
            if g != h {
                let d = group.mul(group.inv(g), h);
                w[(g, h)] = spec.rates[(d / m, d % m)];
            }
        }
    }
    let transference = group_chain(&GroupChainSpec {
        group,
        rates: w,
    })?;
    let declared = match &transference.model.carrier {
        Carrier::Classical(chain) => {
            let se = nalgebra::SymmetricEigen::new(chain.laplacian().clone());
            se.eigenvalues.iter().copied().collect()
        }
        Carrier::Quantum => unreachable!("group chains always carry a classical chain"),
    };
    Ok(BuiltModel {
        model,
        derivation: None,
        extension: None,
        declared_spectrum: declared,
        meta: ModelMeta::Pauli {
            transference: Box::new(transference),
        },
    })
}

/// Wraps a raw generator matrix; all validation happens in the model
/// constructor.
pub fn custom_superoperator(dim: usize, mat: CMat) -> Result<BuiltModel> {
    let superop = Superoperator::new(dim, mat)?;
    let model = SemigroupModel::new(superop, ModelKind::Custom, Carrier::Quantum)?;
    let declared = model.generator.spectrum().to_vec();
    Ok(BuiltModel {
        model,
        derivation: None,
        extension: None,
        declared_spectrum: declared,
        meta: ModelMeta::Custom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::DensityOperator;
    use crate::linalg::{identity, max_abs, tau};
    use approx::assert_relative_eq;

    #[test]
    fn cyclic_tables_are_groups() {
        let z4 = GroupTable::cyclic(4).unwrap();
        assert_eq!(z4.order(), 4);
        assert_eq!(z4.mul(1, 3), 0);
        assert_eq!(z4.inv(3), 1);
        let z6 = GroupTable::cyclic_product(2, 3).unwrap();
        assert_eq!(z6.order(), 6);
        // (1, 2) + (1, 1) = (0, 0)
        assert_eq!(z6.mul(1 * 3 + 2, 1 * 3 + 1), 0);
    }

    #[test]
    fn s3_is_a_nonabelian_group() {
        let g = GroupTable::s3();
        assert_eq!(g.order(), 6);
        let mut noncommuting = false;
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(g.mul(g.inv(a), g.mul(a, b)), b);
                if g.mul(a, b) != g.mul(b, a) {
                    noncommuting = true;
                }
            }
        }
        assert!(noncommuting);
    }

    #[test]
    fn broken_table_is_rejected() {
        assert!(matches!(
            GroupTable::new(vec![vec![0, 1], vec![1, 1]]),
            Err(Error::InvalidSpec(_))
        ));
        // Z4 with one associativity-breaking swap
        let mut mul: Vec<Vec<usize>> = (0..4usize)
            .map(|g| (0..4).map(|h| (g + h) % 4).collect())
            .collect();
        mul[2][1] = 1;
        mul[2][3] = 3;
        assert!(GroupTable::new(mul).is_err());
    }

    #[test]
    fn weyl_unitaries_are_unitary_and_traceless() {
        for n in 2..=4 {
            let ps = heisenberg_weyl(n);
            assert_eq!(ps.len(), n * n - 1);
            for p in &ps {
                assert!(max_abs(&(p.adjoint() * p - identity(n))) < 1e-12);
                assert!(tau(p).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ergodic_depolarizing_carries_a_verified_derivation() {
        let built = depolarizing(2, Subalgebra::scalars(2), 1.5).unwrap();
        assert!(built.model.is_ergodic());
        assert_eq!(built.derivation.as_ref().unwrap().components(), 3);
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
        assert_relative_eq!(
            built.model.generator.spectral_gap().unwrap(),
            1.5,
            epsilon = 1e-10
        );
        let built3 = depolarizing(3, Subalgebra::scalars(3), 0.7).unwrap();
        assert_eq!(built3.derivation.as_ref().unwrap().components(), 8);
        assert!(built3.spectrum_deviation() < SPECTRUM_TOL);
    }

    #[test]
    fn block_depolarizing_fixes_the_declared_factor() {
        let built = depolarizing(4, Subalgebra::tensor_factor(2, 2), 2.0).unwrap();
        assert_eq!(built.model.fixed_algebra.dim(), 4);
        assert!(built.derivation.is_none());
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
        let zeros = built
            .model
            .generator
            .spectrum()
            .iter()
            .filter(|v| v.abs() < 1e-10)
            .count();
        assert_eq!(zeros, 4);
    }

    #[test]
    fn depolarizing_rejects_bad_rates() {
        assert!(depolarizing(2, Subalgebra::scalars(2), 0.0).is_err());
        assert!(depolarizing(2, Subalgebra::scalars(2), -1.0).is_err());
        assert!(depolarizing(3, Subalgebra::scalars(2), 1.0).is_err());
    }

    #[test]
    fn two_point_schur_model() {
        let built = schur_semigroup(&SchurSpec {
            b: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        })
        .unwrap();
        assert_eq!(built.model.fixed_algebra.dim(), 2);
        assert_eq!(built.derivation.as_ref().unwrap().components(), 1);
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
        assert_relative_eq!(
            built.model.generator.spectral_gap().unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn gram_generated_costs_round_trip() {
        // Squared distances of points in R^3 are conditionally negative by
        // construction.
        let mut rng = crate::sample::rng(0xbead);
        use rand::Rng;
        let m = 5;
        let pts: Vec<[f64; 3]> = (0..m)
            .map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let b = DMatrix::from_fn(m, m, |i, j| {
            (0..3).map(|k| (pts[i][k] - pts[j][k]).powi(2)).sum()
        });
        let built = schur_semigroup(&SchurSpec { b }).unwrap();
        assert!(built.derivation.as_ref().unwrap().components() <= 3);
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
        // Generic points leave only the diagonal fixed
        assert_eq!(built.model.fixed_algebra.dim(), m);
    }

    #[test]
    fn schur_rejects_non_embeddable_costs() {
        // Violates the triangle bound between points 0 and 2.
        let bad = schur_semigroup(&SchurSpec {
            b: DMatrix::from_row_slice(
                3,
                3,
                &[0.0, 1.0, 9.0, 1.0, 0.0, 1.0, 9.0, 1.0, 0.0],
            ),
        });
        assert!(matches!(bad, Err(Error::NotConditionallyNegative(_))));
        let negative = schur_semigroup(&SchurSpec {
            b: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]),
        });
        assert!(matches!(
            negative,
            Err(Error::NotConditionallyNegative(_))
        ));
    }

    #[test]
    fn schur_rejects_asymmetry_and_nonzero_diagonal() {
        let asym = schur_semigroup(&SchurSpec {
            b: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]),
        });
        assert!(matches!(asym, Err(Error::NotSymmetric(_))));
        let diag = schur_semigroup(&SchurSpec {
            b: DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.0]),
        });
        assert!(matches!(diag, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn two_point_chain_matches_depolarizing() {
        let built = group_chain(&GroupChainSpec {
            group: GroupTable::cyclic(2).unwrap(),
            rates: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        })
        .unwrap();
        assert!(built.model.is_classical());
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
        let depo = depolarizing(2, Subalgebra::scalars(2), 2.0).unwrap();
        let diff = built.model.generator.superop().matrix()
            - depo.model.generator.superop().matrix();
        assert!(max_abs(&diff) < 1e-12);
        match &built.meta {
            ModelMeta::GroupChain { intertwining } => assert!(intertwining.passed()),
            _ => panic!("wrong meta"),
        }
    }

    #[test]
    fn uniform_chains_have_complete_graph_gaps() {
        let z3 = group_chain(&GroupChainSpec {
            group: GroupTable::cyclic(3).unwrap(),
            rates: DMatrix::from_fn(3, 3, |g, h| if g != h { 1.0 } else { 0.0 }),
        })
        .unwrap();
        match &z3.model.carrier {
            Carrier::Classical(chain) => {
                assert_relative_eq!(chain.spectral_gap().unwrap(), 3.0, epsilon = 1e-10)
            }
            _ => panic!("chain carrier expected"),
        }
        let s3 = group_chain(&GroupChainSpec {
            group: GroupTable::s3(),
            rates: DMatrix::from_fn(6, 6, |g, h| if g != h { 1.0 } else { 0.0 }),
        })
        .unwrap();
        assert!(s3.spectrum_deviation() < SPECTRUM_TOL);
        assert_relative_eq!(
            s3.model.generator.spectral_gap().unwrap(),
            6.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn one_sided_invariance_is_rejected() {
        // Rates seeing only one transposition are left- but not
        // right-invariant on S3.
        let table = GroupTable::s3();
        let t0 = 3;
        let rates = DMatrix::from_fn(6, 6, |g, h| {
            if g != h && table.mul(table.inv(g), h) == t0 {
                1.0
            } else {
                0.0
            }
        });
        let bad = group_chain(&GroupChainSpec {
            group: table,
            rates,
        });
        assert!(matches!(bad, Err(Error::NotCentral)));
    }

    #[test]
    fn chain_kernels_convolve() {
        let table = GroupTable::cyclic(5).unwrap();
        let phi = [0.0, 1.0, 0.3, 0.3, 1.0];
        let rates = DMatrix::from_fn(5, 5, |g, h| phi[table.mul(table.inv(g), h)]);
        let built = group_chain(&GroupChainSpec {
            group: GroupTable::cyclic(5).unwrap(),
            rates,
        })
        .unwrap();
        let chain = match &built.model.carrier {
            Carrier::Classical(chain) => chain.clone(),
            _ => panic!("chain carrier expected"),
        };
        let (t, s) = (0.3, 0.45);
        let kt = chain.heat_kernel(t).unwrap();
        let ks = chain.heat_kernel(s).unwrap();
        let kts = chain.heat_kernel(t + s).unwrap();
        for r in 0..5 {
            let conv: f64 = (0..5)
                .map(|h| kt[(0, h)] * ks[(0, table.mul(table.inv(h), r))])
                .sum();
            assert_relative_eq!(conv, kts[(0, r)], epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_weyl_rates_depolarize() {
        for m in 2..=3 {
            let rates = DMatrix::from_fn(m, m, |j, l| if j == 0 && l == 0 { 0.0 } else { 1.0 });
            let built = pauli_random_unitary(&PauliSpec { m, rates }).unwrap();
            let depo = depolarizing(m, Subalgebra::scalars(m), (m * m) as f64).unwrap();
            let diff = built.model.generator.superop().matrix()
                - depo.model.generator.superop().matrix();
            assert!(max_abs(&diff) < 1e-10);
            assert!(built.spectrum_deviation() < SPECTRUM_TOL);
        }
    }

    #[test]
    fn inversion_asymmetric_rates_are_rejected() {
        let mut rates = DMatrix::<f64>::zeros(3, 3);
        rates[(1, 0)] = 1.0;
        // label (2, 0) is the inverse of (1, 0) and carries no rate
        let bad = pauli_random_unitary(&PauliSpec { m: 3, rates });
        assert!(matches!(bad, Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn sparse_weyl_rates_enlarge_the_fixed_algebra() {
        let mut rates = DMatrix::<f64>::zeros(2, 2);
        rates[(1, 0)] = 1.0;
        let built = pauli_random_unitary(&PauliSpec { m: 2, rates }).unwrap();
        assert!(!built.model.is_ergodic());
        assert_eq!(built.model.fixed_algebra.dim(), 2);
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
    }

    #[test]
    fn transference_intertwines_and_dominates() {
        let m = 2;
        let rates = DMatrix::from_fn(m, m, |j, l| if j == 0 && l == 0 { 0.0 } else { 1.0 });
        let built = pauli_random_unitary(&PauliSpec { m, rates }).unwrap();
        let chain = match &built.meta {
            ModelMeta::Pauli { transference } => match &transference.model.carrier {
                Carrier::Classical(chain) => chain.clone(),
                _ => panic!("chain carrier expected"),
            },
            _ => panic!("wrong meta"),
        };
        let order = m * m;
        // Strictly positive classical density with mean one.
        let f0: Vec<f64> = vec![1.9, 0.5, 1.2, 0.4];
        assert_relative_eq!(f0.iter().sum::<f64>() / order as f64, 1.0, epsilon = 1e-12);
        // All Weyl unitaries, identity included, indexed like the label group.
        let us: Vec<CMat> = (0..order).map(|g| weyl_unitary(m, g / m, g % m)).collect();
        let rho0 = CMat::from_fn(m, m, |a, b| {
            if a == 0 && b == 0 {
                c(m as f64)
            } else {
                c(0.0)
            }
        });
        let transfer = |f: &[f64]| -> CMat {
            let mut out = CMat::zeros(m, m);
            for (g, u) in us.iter().enumerate() {
                out += (u * &rho0 * u.adjoint()).map(|z| z * c(f[g] / order as f64));
            }
            out
        };
        for t in [0.0, 0.2, 1.0] {
            let kernel = chain.heat_kernel(t).unwrap();
            let ft: Vec<f64> = (0..order)
                .map(|g| (0..order).map(|h| kernel[(g, h)] * f0[h]).sum())
                .collect();
            // Transfer commutes with time evolution
            let lhs = built
                .model
                .evolve(
                    &crate::linalg::HermitianOperator::new(transfer(&f0)).unwrap(),
                    t,
                )
                .unwrap();
            let rhs = transfer(&ft);
            assert!(max_abs(&(lhs.mat() - &rhs)) < 1e-8);
            // Data processing: quantum relative entropy to the trace is
            // bounded by the classical one.
            let d_classical: f64 = ft
                .iter()
                .map(|v| if *v > 0.0 { v * v.ln() } else { 0.0 })
                .sum::<f64>()
                / order as f64;
            let rho_t = DensityOperator::from_mat(rhs).unwrap();
            let d_quantum = crate::entropy::entropy(&rho_t);
            assert!(d_quantum <= d_classical + 1e-10);
        }
    }

    #[test]
    fn custom_wrapper_accepts_a_valid_generator() {
        let depo = depolarizing(2, Subalgebra::scalars(2), 1.0).unwrap();
        let built =
            custom_superoperator(2, depo.model.generator.superop().matrix().clone()).unwrap();
        assert_eq!(built.model.kind, ModelKind::Custom);
        assert!(built.spectrum_deviation() < SPECTRUM_TOL);
    }
}
