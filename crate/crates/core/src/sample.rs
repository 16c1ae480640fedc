//! Seeded random matrix ensembles for tests and search starting points.
//!
//! Everything is driven by an explicit `ChaCha8Rng` so runs are reproducible
//! across platforms for a fixed seed.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, hermitize, matrix_function, tau, CMat, HermitianOperator};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with iid standard complex Gaussian entries.
pub fn random_ginibre(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// GUE-style Hermitian matrix, entries of order one.
pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    hermitize(&random_ginibre(n, rng))
}

/// Strictly positive density `exp(spread * H) / tau(exp(spread * H))`.
///
/// `spread` controls conditioning: small values stay near the identity,
/// larger ones produce strongly skewed spectra.
pub fn random_density_strict(n: usize, spread: f64, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let h = HermitianOperator::enforce(&(random_hermitian(n, rng) * c(spread)));
    let e = matrix_function(&h, f64::exp).expect("exp is entire");
    let z = e.tau();
    HermitianOperator::enforce(&(e.mat() / c(z)))
}

/// Strictly positive diagonal density with the same construction on a random
/// real diagonal.
pub fn random_diagonal_density_strict(
    n: usize,
    spread: f64,
    rng: &mut ChaCha8Rng,
) -> HermitianOperator {
    let h: Vec<f64> = (0..n)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            (spread * g).exp()
        })
        .collect();
    let mean: f64 = h.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = h.iter().map(|v| v / mean).collect();
    HermitianOperator::from_real_diagonal(&d)
}

/// Random CPTP map from a Ginibre Kraus family normalized by the inverse
/// square root of its completeness sum.
pub fn random_cptp(n: usize, kraus_count: usize, rng: &mut ChaCha8Rng) -> crate::linalg::Superoperator {
    let raw: Vec<CMat> = (0..kraus_count).map(|_| random_ginibre(n, rng)).collect();
    let mut s = CMat::zeros(n, n);
    for k in &raw {
        s += k.adjoint() * k;
    }
    let s = HermitianOperator::enforce(&s);
    let inv_sqrt = matrix_function(&s, |p| 1.0 / p.sqrt()).expect("full-rank Kraus sum");
    let kraus: Vec<CMat> = raw.iter().map(|k| k * inv_sqrt.mat()).collect();
    crate::linalg::Superoperator::from_map(n, move |x| {
        let mut out = CMat::zeros(n, n);
        for k in &kraus {
            out += k * x * k.adjoint();
        }
        out
    })
}

/// Traceless Hermitian direction of unit L2 norm, for observable probes.
pub fn random_traceless_direction(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let h = random_hermitian(n, rng);
    let centered = &h - CMat::identity(n, n) * tau(&h);
    let norm = crate::linalg::l2_norm(&centered);
    centered / c(norm.max(1e-300))
}
