//! The analysis report and its two renderings.
//!
//! JSON is canonical; the text view formats the same struct, so both carry
//! identical numbers.  Every float is rounded to 12 significant digits at
//! construction time, which also makes reruns byte-identical.

use serde::{Deserialize, Serialize};

use crate::model_file::ModelFile;

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant digits.  Idempotent, so formatting a field a
/// second time cannot drift.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific form re-parses")
}

pub fn fmt12(x: f64) -> String {
    format!("{}", sig12(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: u32,
    pub model: ModelFile,
    pub spectral_gap: f64,
    pub fixed_point_dim: usize,
    pub t_cb: TcbSection,
    pub curvature: CurvatureSection,
    pub mlsi: MlsiSection,
    /// `None` unless timing was requested; wall-clock output is the one
    /// field that would break rerun determinism.
    pub timings: Option<TimingsSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcbSection {
    pub value: f64,
    /// "exact" or "bound".
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSection {
    pub lambda: f64,
    /// "intertwining", "gradient-estimate", or "assumed".
    pub kind: String,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlsiSection {
    pub lower_bound: f64,
    /// "bakry-emery", "kappa-pipeline", "depolarizing-half-rate", or
    /// "search-only".
    pub route: String,
    pub upper_bound: Option<f64>,
    /// Ascending eigenvalues of the best search witness.
    pub witness_spectrum: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingsSection {
    pub total_ms: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("kind: {}\n", self.model.kind.name()));
        s.push_str(&format!("dimension: {}\n", self.model.dim));
        s.push_str(&format!("spectral gap: {}\n", fmt12(self.spectral_gap)));
        s.push_str(&format!("fixed-point dimension: {}\n", self.fixed_point_dim));
        s.push_str(&format!(
            "t_cb: {} ({})\n",
            fmt12(self.t_cb.value),
            self.t_cb.method
        ));
        s.push_str(&format!(
            "curvature lambda: {} ({}, {})\n",
            fmt12(self.curvature.lambda),
            self.curvature.kind,
            if self.curvature.verified {
                "verified"
            } else {
                "unverified"
            }
        ));
        s.push_str(&format!(
            "mlsi lower bound: {} (route {})\n",
            fmt12(self.mlsi.lower_bound),
            self.mlsi.route
        ));
        if let Some(u) = self.mlsi.upper_bound {
            s.push_str(&format!("mlsi upper bound: {}\n", fmt12(u)));
        }
        if let Some(spec) = &self.mlsi.witness_spectrum {
            let parts: Vec<String> = spec.iter().map(|&x| fmt12(x)).collect();
            s.push_str(&format!("witness spectrum: {}\n", parts.join(", ")));
        }
        if let Some(t) = &self.timings {
            s.push_str(&format!("total time: {} ms\n", t.total_ms));
        }
        s
    }
}
