//! The entropy-decay constant pipeline.
//!
//! A model's modified log-Sobolev constant is assembled from two
//! ingredients: a curvature certificate (intertwining at a known rate, a
//! numerically verified gradient estimate, or an assumption) and a
//! completely bounded return time, either computed exactly for ergodic
//! models or bounded through the spectral gap and the index of the
//! fixed-point inclusion.  `kappa` fuses the two, and the resulting lower
//! bound is cross-checked against a derivative-free search for states with
//! small entropy-production ratio.  Heat-kernel computations for products
//! of circles live here as well since they calibrate the pipeline.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::cb_index;
use crate::entropy::{self, DensityOperator};
use crate::error::{Error, Result};
use crate::linalg::{
    c, cb_norm_1_to_inf, ci, matrix_function, weighted_inner, CMat, HermitianOperator,
};
use crate::models::{BuiltModel, ModelMeta};
use crate::sample;
use crate::semigroup::{
    verify_intertwining, Carrier, Derivation, ModelKind, ResidualReport, SemigroupModel,
};

/// Grid used when a certificate needs fresh decay probes.
pub const DEFAULT_T_GRID: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 3.5];
pub const CERT_SAMPLES: usize = 32;
const CERT_SEED: u64 = 0xce87;

/// `kappa(lambda, t) = 1/(4t)` at `lambda = 0`, otherwise
/// `lambda / (2 (1 - e^{-2 lambda t}))`; a three-term expansion takes over
/// for `|lambda t| < 1e-6` where the direct formula cancels.
pub fn kappa(lambda: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonpositiveTime(t));
    }
    if !lambda.is_finite() {
        return Err(Error::DomainViolation(lambda));
    }
    let u = 2.0 * lambda * t;
    if (lambda * t).abs() < 1e-6 {
        Ok((1.0 + u / 2.0 + u * u / 12.0) / (4.0 * t))
    } else {
        Ok(lambda / (2.0 * (1.0 - (-u).exp())))
    }
}

/// First time the deviation from equilibrium falls to one half in the
/// completely bounded `L1 -> Linf` norm, by bisection to width `tol`.
/// Classical carriers use the commutative kernel norm.  The norm is
/// spot-checked for monotonicity around the answer; an increase is
/// reported as an error.
pub fn tcb_exact_ergodic(model: &SemigroupModel, tol: f64) -> Result<f64> {
    if !model.is_ergodic() {
        return Err(Error::NotErgodic(model.fixed_algebra.dim()));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidSpec(format!("bad bisection width {tol}")));
    }
    let sigma = model.generator.spectral_gap()?;
    let norm_at = |t: f64| -> Result<f64> {
        match &model.carrier {
            Carrier::Classical(chain) => chain.deviation_norm_1_inf(t),
            Carrier::Quantum => Ok(cb_norm_1_to_inf(&model.deviation_superop(t)?)),
        }
    };
    let lo_floor = 1e-6;
    if norm_at(lo_floor)? <= 0.5 {
        return Ok(lo_floor);
    }
    let mut lo = lo_floor;
    let mut hi = 1.0 / sigma;
    let mut doublings = 0;
    while norm_at(hi)? > 0.5 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(Error::Numeric(
                "deviation norm failed to fall below one half".into(),
            ));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid)? > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let mut prev = norm_at(0.5 * t_star)?;
    for factor in [1.0, 1.5, 2.0] {
        let v = norm_at(factor * t_star)?;
        if v > prev + 1e-10 {
            return Err(Error::Numeric(format!(
                "deviation norm increased near t = {}",
                factor * t_star
            )));
        }
        prev = v;
    }
    Ok(t_star)
}

/// Gap-based upper bound on the return time.  The index term depends on
/// what the construction knows: Schur models and group chains sit over a
/// commutative target, Weyl models fall back to the full-matrix index, and
/// the rest query the fixed-point inclusion.  An ultracontractivity pair
/// `(C, t0)` with `||T_{t0}: L1 -> Linf||_cb <= C` tightens the bound when
/// `t0 + log(2C)/gap` is smaller.
pub fn tcb_bound(model: &SemigroupModel, ultracontractive: Option<(f64, f64)>) -> Result<f64> {
    let sigma = model.generator.spectral_gap()?;
    let n = model.dim() as f64;
    let index = match model.kind {
        ModelKind::SchurMultiplier | ModelKind::GroupChain => n.ln(),
        ModelKind::PauliRandomUnitary => 2.0 * n.ln(),
        ModelKind::Depolarizing | ModelKind::Custom => cb_index(&model.fixed_algebra).value,
    };
    let spectral = (index + 2f64.ln()) / sigma;
    match ultracontractive {
        Some((c0, t0)) => {
            if !(c0 > 0.0) || t0 < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "ultracontractive pair ({c0}, {t0}) out of range"
                )));
            }
            Ok(spectral.min(t0 + (2.0 * c0).ln() / sigma))
        }
        None => Ok(spectral),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TcbRoute {
    Exact,
    Bound,
}

/// Preferred return time for a model: exact when ergodic, otherwise the
/// gap bound.
pub fn tcb_for(built: &BuiltModel, tol: f64) -> Result<(f64, TcbRoute)> {
    if built.model.is_ergodic() {
        Ok((tcb_exact_ergodic(&built.model, tol)?, TcbRoute::Exact))
    } else {
        Ok((tcb_bound(&built.model, None)?, TcbRoute::Bound))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    /// The derivation intertwines with an extension at a known rate.
    Intertwining,
    /// A numerically verified gradient estimate.
    GradientEstimate,
    /// Supplied by the caller without verification.
    Assumed,
}

/// What backs a certificate.
#[derive(Clone, Debug)]
pub enum CertificateEvidence {
    Intertwining(ResidualReport),
    GradientEstimate(GeNumericReport),
    None,
}

/// A curvature lower bound together with the verification that produced it.
#[derive(Clone, Debug)]
pub struct CurvatureCertificate {
    pub kind: CertificateKind,
    pub lambda: f64,
    pub evidence: CertificateEvidence,
}

impl CurvatureCertificate {
    /// Requires a passing intertwining report.
    pub fn intertwining(lambda: f64, report: ResidualReport) -> Result<Self> {
        if !report.passed() {
            return Err(Error::Numeric(format!(
                "intertwining residual {} disqualifies the certificate",
                report.max_residual
            )));
        }
        Ok(Self {
            kind: CertificateKind::Intertwining,
            lambda,
            evidence: CertificateEvidence::Intertwining(report),
        })
    }

    /// Requires a passing gradient-estimate report.
    pub fn gradient_estimate(lambda: f64, report: GeNumericReport) -> Result<Self> {
        if !report.passed {
            return Err(Error::Numeric(format!(
                "gradient-estimate violation {} disqualifies the certificate",
                report
                    .max_gradient_violation
                    .max(report.max_fisher_violation)
            )));
        }
        Ok(Self {
            kind: CertificateKind::GradientEstimate,
            lambda,
            evidence: CertificateEvidence::GradientEstimate(report),
        })
    }

    pub fn assumed(lambda: f64) -> Self {
        Self {
            kind: CertificateKind::Assumed,
            lambda,
            evidence: CertificateEvidence::None,
        }
    }
}

/// Default certificate per construction: depolarizing models get a verified
/// gradient estimate (`rate (1/2 + 1/(2 dim))` when ergodic, half the rate
/// otherwise), Schur models and group chains certify intertwining at rate
/// zero, Weyl models inherit the chain certificate through transference,
/// and custom generators get an unverified zero.
pub fn default_certificate(built: &BuiltModel) -> Result<CurvatureCertificate> {
    match &built.meta {
        ModelMeta::Depolarizing { rate } => {
            let d = built.model.dim() as f64;
            let lambda = if built.model.is_ergodic() {
                rate * (0.5 + 0.5 / d)
            } else {
                rate * 0.5
            };
            let report = ge_numeric_check(
                &built.model,
                built.derivation.as_ref(),
                lambda,
                CERT_SAMPLES,
                &DEFAULT_T_GRID,
                CERT_SEED,
            )?;
            CurvatureCertificate::gradient_estimate(lambda, report)
        }
        ModelMeta::Schur => {
            let der = built.derivation.as_ref().ok_or(Error::DegenerateInput)?;
            let ext = built.extension.as_ref().ok_or(Error::DegenerateInput)?;
            let report = verify_intertwining(
                &built.model.generator,
                der,
                ext,
                0.0,
                &[0.1, 0.5, 1.0, 2.0],
                8,
                CERT_SEED,
            )?;
            CurvatureCertificate::intertwining(0.0, report)
        }
        ModelMeta::GroupChain { intertwining } => {
            CurvatureCertificate::intertwining(0.0, *intertwining)
        }
        ModelMeta::Pauli { transference } => match &transference.meta {
            ModelMeta::GroupChain { intertwining } => {
                CurvatureCertificate::intertwining(0.0, *intertwining)
            }
            _ => Err(Error::DegenerateInput),
        },
        ModelMeta::Custom => Ok(CurvatureCertificate::assumed(0.0)),
    }
}

/// Where a lower bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MlsiRoute {
    /// Positive curvature used directly.
    BakryEmery,
    /// Curvature and return time fused through `kappa`.
    KappaPipeline,
    /// Half the jump rate; exact for generalized depolarizing generators.
    HalfRate,
    /// No pipeline ran; the estimate only carries search results.
    SearchOnly,
}

/// Assembled constant estimate.  The lower bound is certified by its
/// route; the upper bound, when present, is the best ratio a search found
/// and comes with the witness state.
#[derive(Clone, Debug)]
pub struct MlsiEstimate {
    pub lower_bound: f64,
    pub route: MlsiRoute,
    pub tcb_used: Option<f64>,
    pub upper_bound: Option<f64>,
    pub witness: Option<DensityOperator>,
}

impl MlsiEstimate {
    /// Lower and upper bounds must be compatible whenever both exist.
    pub fn consistent(&self) -> bool {
        match self.upper_bound {
            Some(u) => self.lower_bound <= u + 1e-9,
            None => true,
        }
    }
}

/// Best certified lower bound: the `kappa` fusion always applies, positive
/// curvature stands on its own, and depolarizing generators additionally
/// admit half their rate.
pub fn mlsi_lower_bound(
    built: &BuiltModel,
    cert: &CurvatureCertificate,
    tcb: f64,
) -> Result<MlsiEstimate> {
    if !cert.lambda.is_finite() {
        return Err(Error::DomainViolation(cert.lambda));
    }
    let mut best = kappa(cert.lambda, tcb)?;
    let mut route = MlsiRoute::KappaPipeline;
    if cert.lambda > 0.0 && cert.lambda > best {
        best = cert.lambda;
        route = MlsiRoute::BakryEmery;
    }
    if let ModelMeta::Depolarizing { rate } = &built.meta {
        if rate / 2.0 > best {
            best = rate / 2.0;
            route = MlsiRoute::HalfRate;
        }
    }
    Ok(MlsiEstimate {
        lower_bound: best,
        route,
        tcb_used: Some(tcb),
        upper_bound: None,
        witness: None,
    })
}

/// Entropy-production ratio `I(rho) / (2 D(rho || N))` of a strictly
/// positive state; its infimum over states is the optimal constant.
pub fn mlsi_ratio(model: &SemigroupModel, rho: &DensityOperator) -> Result<f64> {
    let d = entropy::relative_entropy_to_algebra(rho, &model.cond_exp)?;
    if d < 1e-12 {
        return Err(Error::DegenerateInput);
    }
    let i = entropy::fisher_information(model, rho)?;
    Ok(i / (2.0 * d))
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_iters: 400,
            seed: 0x5ea2c4,
        }
    }
}

/// Traceless Hermitian directions parameterizing `rho = e^h / tau(e^h)`;
/// classical carriers stay on the diagonal.
fn search_directions(model: &SemigroupModel) -> Vec<CMat> {
    let n = model.dim();
    let mut dirs = Vec::new();
    if !model.is_classical() {
        for i in 0..n {
            for j in (i + 1)..n {
                let mut sym = CMat::zeros(n, n);
                sym[(i, j)] = c(1.0);
                sym[(j, i)] = c(1.0);
                dirs.push(sym);
                let mut asym = CMat::zeros(n, n);
                asym[(i, j)] = ci(1.0);
                asym[(j, i)] = ci(-1.0);
                dirs.push(asym);
            }
        }
    }
    for k in 0..n - 1 {
        let mut d = CMat::zeros(n, n);
        d[(k, k)] = c(1.0);
        d[(k + 1, k + 1)] = c(-1.0);
        dirs.push(d);
    }
    dirs
}

fn state_from_params(dirs: &[CMat], theta: &[f64], n: usize) -> Option<DensityOperator> {
    let mut h = CMat::zeros(n, n);
    for (t, g) in theta.iter().zip(dirs.iter()) {
        h += g * c(*t);
    }
    let e = matrix_function(&HermitianOperator::enforce(&h), f64::exp).ok()?;
    let z = e.tau();
    if !(z > 0.0) || !z.is_finite() {
        return None;
    }
    DensityOperator::new(HermitianOperator::enforce(&(e.mat() / c(z)))).ok()
}

/// Derivative-free minimization of the entropy-production ratio over
/// `rho = e^h / tau(e^h)` from several seeded starts, each polished by a
/// restart with a smaller simplex.  The result is only an upper bound on
/// the optimal constant; states with `D(rho || N) < 1e-8` are discarded as
/// degenerate.
pub fn optimal_mlsi_upper(model: &SemigroupModel, search: &SearchConfig) -> Result<MlsiEstimate> {
    let n = model.dim();
    let dirs = search_directions(model);
    let p = dirs.len();
    if p == 0 || search.n_starts == 0 {
        return Err(Error::DegenerateInput);
    }
    let objective = |theta: &[f64]| -> f64 {
        let rho = match state_from_params(&dirs, theta, n) {
            Some(r) => r,
            None => return f64::INFINITY,
        };
        let d = match entropy::relative_entropy_to_algebra(&rho, &model.cond_exp) {
            Ok(d) => d,
            Err(_) => return f64::INFINITY,
        };
        if d < 1e-8 {
            return f64::INFINITY;
        }
        let i = match entropy::fisher_information(model, &rho) {
            Ok(i) => i,
            Err(_) => return f64::INFINITY,
        };
        let r = i / (2.0 * d);
        if r.is_finite() {
            r
        } else {
            f64::INFINITY
        }
    };

    let mut best_val = f64::INFINITY;
    let mut best_theta: Option<Vec<f64>> = None;
    for start in 0..search.n_starts {
        let mut rng = sample::rng(
            search
                .seed
                .wrapping_add((start as u64).wrapping_mul(0x9e37_79b9)),
        );
        let theta0: Vec<f64> = (0..p)
            .map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                0.8 * g
            })
            .collect();
        let (theta1, v1) = nelder_mead(&objective, &theta0, 0.2, search.max_iters);
        let (theta2, v2) = nelder_mead(&objective, &theta1, 0.05, search.max_iters / 2);
        let (theta, val) = if v2 < v1 { (theta2, v2) } else { (theta1, v1) };
        if val < best_val {
            best_val = val;
            best_theta = Some(theta);
        }
    }
    let theta = best_theta
        .filter(|_| best_val.is_finite())
        .ok_or_else(|| Error::Numeric("no nondegenerate state found by the search".into()))?;
    let witness = state_from_params(&dirs, &theta, n).ok_or(Error::DegenerateInput)?;
    Ok(MlsiEstimate {
        lower_bound: 0.0,
        route: MlsiRoute::SearchOnly,
        tcb_used: None,
        upper_bound: Some(best_val),
        witness: Some(witness),
    })
}

/// Standard simplex descent (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) stopping when the simplex value spread falls below a
/// relative `1e-12`.
fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let p = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    simplex.push((start.to_vec(), f(start)));
    for k in 0..p {
        let mut v = start.to_vec();
        v[k] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[p].1;
        if worst.is_finite() && (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; p];
        for s in &simplex[..p] {
            for k in 0..p {
                centroid[k] += s.0[k] / p as f64;
            }
        }
        let worst_pt = simplex[p].0.clone();
        let reflect: Vec<f64> = (0..p).map(|k| 2.0 * centroid[k] - worst_pt[k]).collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..p)
                .map(|k| 3.0 * centroid[k] - 2.0 * worst_pt[k])
                .collect();
            let fe = f(&expand);
            simplex[p] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[p - 1].1 {
            simplex[p] = (reflect, fr);
        } else {
            let worst_val = simplex[p].1;
            let contract: Vec<f64> = if fr < worst_val {
                (0..p)
                    .map(|k| 1.5 * centroid[k] - 0.5 * worst_pt[k])
                    .collect()
            } else {
                (0..p)
                    .map(|k| 0.5 * centroid[k] + 0.5 * worst_pt[k])
                    .collect()
            };
            let fc = f(&contract);
            if fc < fr.min(worst_val) {
                simplex[p] = (contract, fc);
            } else {
                let best_pt = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    for k in 0..p {
                        s.0[k] = 0.5 * (best_pt[k] + s.0[k]);
                    }
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (theta, val) = simplex.swap_remove(0);
    (theta, val)
}

/// Scalar gradient-estimate kernel scan over log-spaced `(0, d]^2`.
#[derive(Clone, Copy, Debug)]
pub struct GeScalarReport {
    pub d: usize,
    pub alpha: f64,
    pub grid_resolution: usize,
    /// Minimum of `(1 - 1/alpha) J + H` over the grid, diagonal limits
    /// included.
    pub min_kernel: f64,
    /// Maximum of `x y (log x - log y) / (x - y)`; equals `d` at the
    /// corner.
    pub max_slope: f64,
    pub passed: bool,
}

/// Scans `(1 - 1/alpha) J(x, y) + H(x, y)` with
/// `J = (x - y) / (log x - log y)` and
/// `H = (x - y)(x - y - x y (log x - log y)) / (x y (log x - log y)^2)`
/// over a log-spaced grid on `(0, d]^2`; the diagonal uses the analytic
/// limits `J(x, x) = x` and `H(x, x) = 1 - x`.  Passing means the scanned
/// minimum stays above `-1e-9`.
pub fn ge_scalar_check(d: usize, alpha: f64, grid_resolution: usize) -> Result<GeScalarReport> {
    if d < 2 {
        return Err(Error::InvalidSpec(format!("dimension {d} below 2")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "scaling parameter must be positive, got {alpha}"
        )));
    }
    let r = grid_resolution.max(2);
    let dd = d as f64;
    let span = (1e8f64).ln();
    let xs: Vec<f64> = (0..r)
        .map(|i| dd * (-span * (1.0 - i as f64 / (r - 1) as f64)).exp())
        .collect();
    let lns: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let q = 1.0 - 1.0 / alpha;
    let mut min_kernel = f64::INFINITY;
    let mut max_slope = f64::NEG_INFINITY;
    for i in 0..r {
        let x = xs[i];
        min_kernel = min_kernel.min(q * x + 1.0 - x);
        max_slope = max_slope.max(x);
        for j in 0..i {
            let y = xs[j];
            let diff = x - y;
            let dl = lns[i] - lns[j];
            let xy = x * y;
            let j_mean = diff / dl;
            let h = diff * (diff - xy * dl) / (xy * dl * dl);
            min_kernel = min_kernel.min(q * j_mean + h);
            max_slope = max_slope.max(xy * dl / diff);
        }
    }
    Ok(GeScalarReport {
        d,
        alpha,
        grid_resolution: r,
        min_kernel,
        max_slope,
        passed: min_kernel >= -1e-9,
    })
}

/// Numeric gradient-estimate and Fisher-decay probe report.
#[derive(Clone, Copy, Debug)]
pub struct GeNumericReport {
    pub lambda: f64,
    /// Largest observed `||delta(T_t x)||_rho^2 - e^{-2 lambda t}
    /// ||delta(x)||_{rho_t}^2`; negative infinity when no derivation was
    /// probed.
    pub max_gradient_violation: f64,
    /// Largest observed `I(T_t rho) - e^{-2 lambda t} I(rho)`.
    pub max_fisher_violation: f64,
    pub samples: usize,
    pub passed: bool,
}

const GE_TOL: f64 = 1e-8;

/// Probes the gradient estimate at rate `lambda` on random strictly
/// positive states (every fourth sample has a spiked spectrum, which is
/// where violations concentrate) and random mean-zero arguments, and
/// probes Fisher-information decay along the same trajectories.  Without a
/// derivation only the Fisher side runs.
pub fn ge_numeric_check(
    model: &SemigroupModel,
    derivation: Option<&Derivation>,
    lambda: f64,
    samples: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<GeNumericReport> {
    if samples == 0 || t_grid.is_empty() {
        return Err(Error::InvalidSpec("empty probe plan".into()));
    }
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::NonpositiveTime(t));
        }
    }
    let n = model.dim();
    let mut rng = sample::rng(seed);
    let diagonal_only =
        model.is_classical() || derivation.map_or(false, |d| d.restrict_to_diagonal);
    let spike_fracs = [0.5, 0.25, 0.1, 0.75];
    let mut max_ge = f64::NEG_INFINITY;
    let mut max_fm = f64::NEG_INFINITY;
    for s in 0..samples {
        let rho_op = if s % 4 == 3 {
            spiked_density(n, spike_fracs[(s / 4) % spike_fracs.len()])
        } else if diagonal_only {
            sample::random_diagonal_density_strict(n, 0.9, &mut rng)
        } else {
            sample::random_density_strict(n, 0.9, &mut rng)
        };
        let rho = DensityOperator::new(rho_op)?;
        let i0 = entropy::fisher_information(model, &rho)?;
        let probe = match derivation {
            Some(der) => {
                let raw = if diagonal_only {
                    random_diagonal_hermitian(n, &mut rng)
                } else {
                    sample::random_hermitian(n, &mut rng)
                };
                let x = &raw - model.fixed_algebra.project(&raw);
                let dx = der.apply(&x);
                Some((x, dx))
            }
            None => None,
        };
        for &t in t_grid {
            let decay = (-2.0 * lambda * t).exp();
            let rho_t_op = model.evolve(rho.op(), t)?;
            let rho_t = DensityOperator::new(rho_t_op.clone())?;
            let it = entropy::fisher_information(model, &rho_t)?;
            max_fm = max_fm.max(it - decay * i0);
            if let (Some(der), Some((x, dx))) = (derivation, probe.as_ref()) {
                let xt = model.generator.apply_semigroup(x, t)?;
                let dxt = der.apply(&xt);
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for (k, &w) in der.weights.iter().enumerate() {
                    lhs += w * weighted_inner(rho.op(), &dxt[k], &dxt[k])?.re;
                    rhs += w * weighted_inner(&rho_t_op, &dx[k], &dx[k])?.re;
                }
                max_ge = max_ge.max(lhs - decay * rhs);
            }
        }
    }
    let ge_ok = max_ge == f64::NEG_INFINITY || max_ge < GE_TOL;
    let fm_ok = max_fm < GE_TOL;
    Ok(GeNumericReport {
        lambda,
        max_gradient_violation: max_ge,
        max_fisher_violation: max_fm,
        samples,
        passed: ge_ok && fm_ok,
    })
}

/// Diagonal density with one eigenvalue at `n * frac` and the rest equal.
fn spiked_density(n: usize, frac: f64) -> HermitianOperator {
    let top = n as f64 * frac;
    let rest = (n as f64 - top) / (n as f64 - 1.0);
    let mut m = CMat::zeros(n, n);
    m[(0, 0)] = c(top);
    for k in 1..n {
        m[(k, k)] = c(rest);
    }
    HermitianOperator::enforce(&m)
}

fn random_diagonal_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut m = CMat::zeros(n, n);
    for k in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        m[(k, k)] = c(g);
    }
    m
}

/// `f(t) = 2 sum_{m >= 1} e^{-m^2 t}`, truncated once the next term drops
/// below `1e-16`.
pub fn torus_f(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonpositiveTime(t));
    }
    let mut sum = 0.0;
    let mut m = 1u64;
    loop {
        let term = 2.0 * (-((m * m) as f64) * t).exp();
        if term < 1e-16 {
            break;
        }
        sum += term;
        m += 1;
    }
    Ok(sum)
}

/// Analytic sandwich `2 e^{-t} <= f(t) <= 2 e^{-t} / (1 - e^{-t})`,
/// returned as `(lower, upper)`.
pub fn torus_envelope(t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonpositiveTime(t));
    }
    let e = (-t).exp();
    Ok((2.0 * e, 2.0 * e / (1.0 - e)))
}

/// Return time of the heat semigroup on a `d`-fold product of circles:
/// the first `t` with `f(t) <= 2^{-1/d}`, bisected to width `tol`.
pub fn torus_tcb(d: usize, tol: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidSpec("torus power must be at least 1".into()));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidSpec(format!("bad bisection width {tol}")));
    }
    let target = 2f64.powf(-1.0 / d as f64);
    let mut lo = 1e-3;
    if torus_f(lo)? <= target {
        return Ok(lo);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while torus_f(hi)? > target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 64 {
            return Err(Error::Numeric("heat kernel failed to reach target".into()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if torus_f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `1 / (4 t_cb(d))`, the certified decay constant of the torus semigroup.
pub fn torus_clsi(d: usize) -> Result<f64> {
    Ok(1.0 / (4.0 * torus_tcb(d, 1e-12)?))
}
