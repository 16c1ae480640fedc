//! The three model-driven commands: analyze, decay, torus.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qms_core::constants::{
    default_certificate, ge_numeric_check, kappa, mlsi_lower_bound, optimal_mlsi_upper, tcb_bound,
    tcb_exact_ergodic, tcb_for, torus_tcb, CertificateEvidence, CertificateKind,
    CurvatureCertificate, MlsiRoute, SearchConfig, TcbRoute, CERT_SAMPLES, DEFAULT_T_GRID,
};
use qms_core::entropy::{self, DensityOperator};
use qms_core::error::{Error, Result};
use qms_core::linalg::CMat;
use qms_core::models::BuiltModel;
use qms_core::sample;
use qms_core::semigroup::verify_intertwining;
use serde::Deserialize;

use crate::model_file::{CurvatureKindField, ModelFile};
use crate::report::{
    sig12, CurvatureSection, MlsiSection, Report, TcbSection, TimingsSection, SCHEMA_VERSION,
};

/// Default bisection tolerance for return times.
pub const TCB_TOL: f64 = 1e-6;

const INTERTWINING_TIMES: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TcbChoice {
    Exact,
    Bound,
}

pub struct AnalyzeOpts {
    pub tcb: Option<TcbChoice>,
    pub search_starts: usize,
    pub seed: u64,
    pub timings: bool,
}

fn route_name(route: MlsiRoute) -> &'static str {
    match route {
        MlsiRoute::BakryEmery => "bakry-emery",
        MlsiRoute::KappaPipeline => "kappa-pipeline",
        MlsiRoute::HalfRate => "depolarizing-half-rate",
        MlsiRoute::SearchOnly => "search-only",
    }
}

fn kind_name(kind: CertificateKind) -> &'static str {
    match kind {
        CertificateKind::Intertwining => "intertwining",
        CertificateKind::GradientEstimate => "gradient-estimate",
        CertificateKind::Assumed => "assumed",
    }
}

fn evidence_passed(cert: &CurvatureCertificate) -> bool {
    match &cert.evidence {
        CertificateEvidence::Intertwining(r) => r.passed(),
        CertificateEvidence::GradientEstimate(r) => r.passed,
        CertificateEvidence::None => false,
    }
}

/// Declared curvature is re-verified with the session seed; a failed
/// verification aborts the report rather than shipping a bad bound.
fn certificate_for(file: &ModelFile, built: &BuiltModel, seed: u64) -> Result<CurvatureCertificate> {
    let Some(declared) = &file.curvature else {
        return default_certificate(built);
    };
    match declared.kind {
        CurvatureKindField::Assumed => Ok(CurvatureCertificate::assumed(declared.lambda)),
        CurvatureKindField::GradientEstimate => {
            let report = ge_numeric_check(
                &built.model,
                built.derivation.as_ref(),
                declared.lambda,
                CERT_SAMPLES,
                &DEFAULT_T_GRID,
                seed,
            )?;
            CurvatureCertificate::gradient_estimate(declared.lambda, report)
        }
        CurvatureKindField::Intertwining => {
            let (Some(der), Some(ext)) = (&built.derivation, &built.extension) else {
                return Err(Error::InvalidSpec(
                    "this model carries no derivation to intertwine".into(),
                ));
            };
            let report = verify_intertwining(
                &built.model.generator,
                der,
                ext,
                declared.lambda,
                &INTERTWINING_TIMES,
                8,
                seed,
            )?;
            CurvatureCertificate::intertwining(declared.lambda, report)
        }
    }
}

pub fn analyze(file: &ModelFile, opts: &AnalyzeOpts) -> Result<Report> {
    let started = std::time::Instant::now();
    let built = file.build()?;
    let gap = built.model.generator.spectral_gap()?;
    let (tcb_value, method) = match opts.tcb {
        None => {
            let (value, route) = tcb_for(&built, TCB_TOL)?;
            let method = match route {
                TcbRoute::Exact => "exact",
                TcbRoute::Bound => "bound",
            };
            (value, method)
        }
        Some(TcbChoice::Exact) => (tcb_exact_ergodic(&built.model, TCB_TOL)?, "exact"),
        Some(TcbChoice::Bound) => (tcb_bound(&built.model, None)?, "bound"),
    };
    let cert = certificate_for(file, &built, opts.seed)?;
    let lower = mlsi_lower_bound(&built, &cert, tcb_value)?;
    let search = SearchConfig {
        n_starts: opts.search_starts,
        max_iters: 400,
        seed: opts.seed,
    };
    let upper = optimal_mlsi_upper(&built.model, &search)?;
    let upper_bound = upper.upper_bound;
    if let Some(u) = upper_bound {
        // the search samples the ratio the lower bound certifies, so a
        // crossing means one of the two computations is broken
        if lower.lower_bound > u + 1e-9 {
            return Err(Error::Numeric(format!(
                "certified lower bound {} exceeds observed ratio {u}",
                lower.lower_bound
            )));
        }
    }
    let witness_spectrum = upper
        .witness
        .as_ref()
        .map(|w| w.eig().values.iter().map(|&x| sig12(x)).collect());
    Ok(Report {
        schema: SCHEMA_VERSION,
        model: file.clone(),
        spectral_gap: sig12(gap),
        fixed_point_dim: built.model.fixed_algebra.dim(),
        t_cb: TcbSection {
            value: sig12(tcb_value),
            method: method.into(),
        },
        curvature: CurvatureSection {
            lambda: sig12(cert.lambda),
            kind: kind_name(cert.kind).into(),
            verified: evidence_passed(&cert),
        },
        mlsi: MlsiSection {
            lower_bound: sig12(lower.lower_bound),
            route: route_name(lower.route).into(),
            upper_bound: upper_bound.map(sig12),
            witness_spectrum,
        },
        timings: opts.timings.then(|| TimingsSection {
            total_ms: started.elapsed().as_millis() as u64,
        }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoChoice {
    Random,
    File,
    Witness,
}

pub struct DecayOpts {
    pub rho: RhoChoice,
    pub tmax: f64,
    pub steps: usize,
    pub seed: u64,
}

/// Initial state document: either a diagonal or a full matrix, flattened
/// row-major as `[re, im]` pairs.  Normalized to unit trace on load.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    #[serde(default)]
    diag: Option<Vec<f64>>,
    #[serde(default)]
    matrix: Option<Vec<[f64; 2]>>,
}

pub fn parse_state(text: &str, dim: usize) -> std::result::Result<DensityOperator, String> {
    let parsed: StateFile = serde_json::from_str(text).map_err(|e| format!("parse error: {e}"))?;
    let mat: CMat = match (parsed.diag, parsed.matrix) {
        (Some(d), None) => {
            if d.len() != dim {
                return Err(format!("diagonal holds {} entries, expected {dim}", d.len()));
            }
            DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    Complex64::new(d[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        }
        (None, Some(m)) => {
            if m.len() != dim * dim {
                return Err(format!(
                    "matrix holds {} entries, expected {}",
                    m.len(),
                    dim * dim
                ));
            }
            DMatrix::from_fn(dim, dim, |i, j| {
                let [re, im] = m[i * dim + j];
                Complex64::new(re, im)
            })
        }
        _ => return Err("state file needs exactly one of `diag` or `matrix`".into()),
    };
    let trace: Complex64 = mat.diagonal().iter().sum();
    let tau = trace.re / dim as f64;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(format!("state trace {tau} is not positive"));
    }
    let normalized = mat.map(|z| z / tau);
    DensityOperator::from_mat(normalized).map_err(|e| format!("not a density: {e}"))
}

fn initial_state(
    built: &BuiltModel,
    opts: &DecayOpts,
    file_text: Option<&str>,
) -> std::result::Result<DensityOperator, CommandError> {
    match opts.rho {
        RhoChoice::Random => {
            let mut rng = sample::rng(opts.seed);
            let n = built.model.dim();
            let op = if built.model.is_classical() {
                sample::random_diagonal_density_strict(n, 1.0, &mut rng)
            } else {
                sample::random_density_strict(n, 1.0, &mut rng)
            };
            DensityOperator::new(op).map_err(CommandError::Core)
        }
        RhoChoice::Witness => {
            let search = SearchConfig {
                seed: opts.seed,
                ..SearchConfig::default()
            };
            let est = optimal_mlsi_upper(&built.model, &search).map_err(CommandError::Core)?;
            est.witness.ok_or_else(|| {
                CommandError::Core(Error::Numeric("search produced no witness".into()))
            })
        }
        RhoChoice::File => {
            let text = file_text.expect("caller supplies the file content");
            parse_state(text, built.model.dim())
                .map_err(|msg| CommandError::Core(Error::InvalidSpec(msg)))
        }
    }
}

/// A command failure that already knows its process exit code.
#[derive(Debug)]
pub enum CommandError {
    Core(Error),
    Usage(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 2,
            CommandError::Core(Error::Numeric(_)) => 4,
            CommandError::Core(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CommandError::Usage(m) => m.clone(),
            CommandError::Core(e) => e.to_string(),
        }
    }
}

/// Values this close to zero are eigensolver noise; snapping keeps the
/// fixed-point trajectory exactly zero in print.
const CSV_SNAP: f64 = 1e-13;

fn csv_cell(x: f64) -> f64 {
    if x.abs() <= CSV_SNAP {
        0.0
    } else {
        sig12(x)
    }
}

pub fn decay(
    file: &ModelFile,
    opts: &DecayOpts,
    file_text: Option<&str>,
) -> std::result::Result<String, CommandError> {
    let built = file.build().map_err(CommandError::Core)?;
    let rho = initial_state(&built, opts, file_text)?;
    let grid: Vec<f64> = (0..opts.steps)
        .map(|k| opts.tmax * k as f64 / (opts.steps - 1) as f64)
        .collect();
    let traj =
        entropy::decay_trajectory(&built.model, &rho, &grid).map_err(CommandError::Core)?;
    let mut out = String::from("t,D,I\n");
    let mut prev = f64::INFINITY;
    for k in 0..traj.times.len() {
        // the trajectory is nonincreasing up to solver noise; the printed
        // column is clamped so it is nonincreasing exactly
        let d = csv_cell(traj.relative_entropies[k]).min(prev);
        prev = d;
        out.push_str(&format!(
            "{},{},{}\n",
            csv_cell(traj.times[k]),
            d,
            csv_cell(traj.fisher_values[k])
        ));
    }
    Ok(out)
}

pub fn torus(dim: usize, tol: f64) -> Result<String> {
    let t = torus_tcb(dim, tol)?;
    let d = dim as f64;
    let lower = (1.0 + 1.0 / d) * 2f64.ln();
    let upper = (2f64.powf(1.0 + 1.0 / d) + 1.0).ln();
    let clsi = kappa(0.0, t)?;
    let floor = 0.25 / 3f64.ln();
    let mut s = String::new();
    s.push_str(&format!("torus dimension: {dim}\n"));
    s.push_str(&format!(
        "t_cb: {} (tol {})\n",
        crate::report::fmt12(t),
        crate::report::fmt12(tol)
    ));
    s.push_str(&format!(
        "analytic bracket: [{}, {}]\n",
        crate::report::fmt12(lower),
        crate::report::fmt12(upper)
    ));
    s.push_str(&format!("clsi: {}\n", crate::report::fmt12(clsi)));
    s.push_str(&format!(
        "dimension-free floor: {}\n",
        crate::report::fmt12(floor)
    ));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depol3() -> ModelFile {
        serde_json::from_str(r#"{"kind": "depolarizing", "dim": 3, "rate": 1.0}"#).unwrap()
    }

    #[test]
    fn analyze_reproduces_the_qutrit_headline_numbers() {
        let opts = AnalyzeOpts {
            tcb: None,
            search_starts: 8,
            seed: 0,
            timings: false,
        };
        let report = analyze(&depol3(), &opts).unwrap();
        assert_eq!(report.schema, SCHEMA_VERSION);
        assert!((report.spectral_gap - 1.0).abs() < 1e-9);
        assert_eq!(report.fixed_point_dim, 1);
        assert_eq!(report.t_cb.method, "exact");
        assert!((report.t_cb.value - 16f64.ln()).abs() < 1e-5);
        assert!((report.curvature.lambda - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(report.curvature.kind, "gradient-estimate");
        assert!(report.curvature.verified);
        assert_eq!(report.mlsi.route, "bakry-emery");
        assert!(report.mlsi.lower_bound >= 2.0 / 3.0 - 1e-9);
        let upper = report.mlsi.upper_bound.unwrap();
        assert!(upper <= 0.981, "upper {upper}");
        let spectrum = report.mlsi.witness_spectrum.unwrap();
        assert_eq!(spectrum.len(), 3);
        let tau: f64 = spectrum.iter().sum::<f64>() / 3.0;
        assert!((tau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn analyze_is_deterministic_for_a_fixed_seed() {
        let opts = AnalyzeOpts {
            tcb: None,
            search_starts: 4,
            seed: 7,
            timings: false,
        };
        let a = analyze(&depol3(), &opts).unwrap().to_json();
        let b = analyze(&depol3(), &opts).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn declared_assumed_curvature_overrides_the_default() {
        let mut file = depol3();
        file.curvature = Some(crate::model_file::CurvatureField {
            lambda: 0.1,
            kind: CurvatureKindField::Assumed,
        });
        let opts = AnalyzeOpts {
            tcb: None,
            search_starts: 2,
            seed: 0,
            timings: false,
        };
        let report = analyze(&file, &opts).unwrap();
        assert_eq!(report.curvature.kind, "assumed");
        assert!(!report.curvature.verified);
        assert!((report.curvature.lambda - 0.1).abs() < 1e-12);
        // kappa(0.1, log 16) and 0.1 both lose to the exact half rate
        assert_eq!(report.mlsi.route, "depolarizing-half-rate");
        assert!((report.mlsi.lower_bound - 0.5).abs() < 1e-9);
    }

    #[test]
    fn overclaimed_gradient_estimates_are_refused() {
        let mut file = depol3();
        file.curvature = Some(crate::model_file::CurvatureField {
            lambda: 1.0,
            kind: CurvatureKindField::GradientEstimate,
        });
        let opts = AnalyzeOpts {
            tcb: None,
            search_starts: 2,
            seed: 0,
            timings: false,
        };
        assert!(matches!(analyze(&file, &opts), Err(Error::Numeric(_))));
    }

    #[test]
    fn state_files_accept_both_forms_and_normalize() {
        let diag = parse_state(r#"{"diag": [2.0, 2.0]}"#, 2).unwrap();
        assert!((diag.op().tau() - 1.0).abs() < 1e-12);
        let full = parse_state(
            r#"{"matrix": [[1.0, 0.0], [0.2, 0.1], [0.2, -0.1], [1.0, 0.0]]}"#,
            2,
        )
        .unwrap();
        assert!(full.min_eigenvalue() > 0.0);
        assert!(parse_state(r#"{"diag": [1.0, -3.0]}"#, 2).is_err());
        assert!(parse_state(r#"{"diag": [1.0]}"#, 2).is_err());
    }

    #[test]
    fn decay_of_the_fixed_point_prints_zero_columns() {
        let file: ModelFile =
            serde_json::from_str(r#"{"kind": "depolarizing", "dim": 2, "rate": 1.0}"#).unwrap();
        let opts = DecayOpts {
            rho: RhoChoice::File,
            tmax: 2.0,
            steps: 5,
            seed: 0,
        };
        let csv = decay(&file, &opts, Some(r#"{"diag": [1.0, 1.0]}"#)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,D,I");
        assert_eq!(lines.len(), 6);
        for row in &lines[1..] {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells[1], "0");
            assert_eq!(cells[2], "0");
        }
    }

    #[test]
    fn torus_output_carries_the_certified_numbers() {
        let text = torus(1, 1e-6).unwrap();
        assert!(text.contains("torus dimension: 1"));
        assert!(text.contains("t_cb: 1.40114"));
        assert!(text.contains("[1.38629436112, 1.60943791243]"));
        assert!(text.contains("clsi: 0.178425"));
        assert!(text.contains("dimension-free floor: 0.227559806657"));
    }
}
