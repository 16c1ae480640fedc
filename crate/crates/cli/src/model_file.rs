//! Declarative model documents accepted on the command line.
//!
//! A document names one constructor through `kind` and carries exactly the
//! parameters that constructor needs.  Anything structural (malformed JSON,
//! unknown keys) is a parse failure; a well-formed document with missing,
//! surplus, or inconsistent parameters is a validation failure.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qms_core::algebra::Subalgebra;
use qms_core::error::{Error, Result};
use qms_core::linalg::CMat;
use qms_core::models::{
    custom_superoperator, depolarizing, group_chain, pauli_random_unitary, schur_semigroup,
    BuiltModel, GroupChainSpec, GroupTable, PauliSpec, SchurSpec,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: ModelKindField,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<Vec<f64>>>,
    /// Flattened row-major `dim^2 x dim^2` matrix as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureField>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKindField {
    Depolarizing,
    Schur,
    GroupChain,
    Pauli,
    CustomSuperoperator,
}

impl ModelKindField {
    pub fn name(self) -> &'static str {
        match self {
            Self::Depolarizing => "depolarizing",
            Self::Schur => "schur",
            Self::GroupChain => "group_chain",
            Self::Pauli => "pauli",
            Self::CustomSuperoperator => "custom_superoperator",
        }
    }
}

/// Fixed-point algebra a depolarizing generator projects onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetField {
    Scalars,
    Diagonal,
    /// `1_k (x) M_m` inside `M_(k m)`.
    TensorFactor { k: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroupField {
    Cyclic { n: usize },
    CyclicProduct { a: usize, b: usize },
    S3,
    Table { mul: Vec<Vec<usize>> },
}

/// Caller-declared curvature bound; `assumed` is taken on faith, the other
/// kinds are re-verified before the report is assembled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureField {
    pub lambda: f64,
    pub kind: CurvatureKindField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureKindField {
    Intertwining,
    GradientEstimate,
    Assumed,
}

fn require<T>(field: Option<T>, name: &str, kind: &str) -> Result<T> {
    field.ok_or_else(|| Error::InvalidSpec(format!("a {kind} model needs a `{name}` field")))
}

fn reject<T>(field: &Option<T>, name: &str, kind: &str) -> Result<()> {
    if field.is_some() {
        return Err(Error::InvalidSpec(format!(
            "`{name}` does not apply to a {kind} model"
        )));
    }
    Ok(())
}

fn real_matrix(rows: &[Vec<f64>], dim: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidSpec(format!(
            "`{name}` must be a {dim} x {dim} matrix"
        )));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn build(&self) -> Result<BuiltModel> {
        let kind = self.kind.name();
        if self.dim == 0 {
            return Err(Error::InvalidSpec("`dim` must be positive".into()));
        }
        match self.kind {
            ModelKindField::Depolarizing => {
                reject(&self.b, "b", kind)?;
                reject(&self.group, "group", kind)?;
                reject(&self.rates, "rates", kind)?;
                reject(&self.generator, "generator", kind)?;
                let rate = require(self.rate, "rate", kind)?;
                let target = match self.target.unwrap_or(TargetField::Scalars) {
                    TargetField::Scalars => Subalgebra::scalars(self.dim),
                    TargetField::Diagonal => Subalgebra::diagonal(self.dim),
                    TargetField::TensorFactor { k, m } => {
                        if k * m != self.dim {
                            return Err(Error::InvalidSpec(format!(
                                "tensor factor {k} x {m} does not fill dimension {}",
                                self.dim
                            )));
                        }
                        Subalgebra::tensor_factor(k, m)
                    }
                };
                depolarizing(self.dim, target, rate)
            }
            ModelKindField::Schur => {
                reject(&self.rate, "rate", kind)?;
                reject(&self.target, "target", kind)?;
                reject(&self.group, "group", kind)?;
                reject(&self.rates, "rates", kind)?;
                reject(&self.generator, "generator", kind)?;
                let rows = require(self.b.as_ref(), "b", kind)?;
                let b = real_matrix(rows, self.dim, "b")?;
                schur_semigroup(&SchurSpec { b })
            }
            ModelKindField::GroupChain => {
                reject(&self.rate, "rate", kind)?;
                reject(&self.target, "target", kind)?;
                reject(&self.b, "b", kind)?;
                reject(&self.generator, "generator", kind)?;
                let group = match require(self.group.clone(), "group", kind)? {
                    GroupField::Cyclic { n } => GroupTable::cyclic(n)?,
                    GroupField::CyclicProduct { a, b } => GroupTable::cyclic_product(a, b)?,
                    GroupField::S3 => GroupTable::s3(),
                    GroupField::Table { mul } => GroupTable::new(mul)?,
                };
                if group.order() != self.dim {
                    return Err(Error::InvalidSpec(format!(
                        "group order {} disagrees with `dim` {}",
                        group.order(),
                        self.dim
                    )));
                }
                let rows = require(self.rates.as_ref(), "rates", kind)?;
                let rates = real_matrix(rows, self.dim, "rates")?;
                group_chain(&GroupChainSpec { group, rates })
            }
            ModelKindField::Pauli => {
                reject(&self.rate, "rate", kind)?;
                reject(&self.target, "target", kind)?;
                reject(&self.b, "b", kind)?;
                reject(&self.group, "group", kind)?;
                reject(&self.generator, "generator", kind)?;
                let rows = require(self.rates.as_ref(), "rates", kind)?;
                let rates = real_matrix(rows, self.dim, "rates")?;
                pauli_random_unitary(&PauliSpec { m: self.dim, rates })
            }
            ModelKindField::CustomSuperoperator => {
                reject(&self.rate, "rate", kind)?;
                reject(&self.target, "target", kind)?;
                reject(&self.b, "b", kind)?;
                reject(&self.group, "group", kind)?;
                reject(&self.rates, "rates", kind)?;
                let entries = require(self.generator.as_ref(), "generator", kind)?;
                let n2 = self.dim * self.dim;
                if entries.len() != n2 * n2 {
                    return Err(Error::InvalidSpec(format!(
                        "`generator` holds {} entries, expected {}",
                        entries.len(),
                        n2 * n2
                    )));
                }
                let mat: CMat = DMatrix::from_fn(n2, n2, |i, j| {
                    let [re, im] = entries[i * n2 + j];
                    Complex64::new(re, im)
                });
                custom_superoperator(self.dim, mat)
            }
        }
    }
}
