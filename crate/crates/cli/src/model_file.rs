//! JSON model files and their translation into validated core types.
//!
//! A model file is a single JSON object with a `kind` of either `split`
//! (explicit transition matrix `T` and fertility matrix `F`, row-major) or
//! `leslie` (structured fertility/survival schedules plus a norm index
//! `p`). `schema_version` defaults to "1" and is the only accepted value.
//! Tolerances may be overridden field by field.

use crate::CliError;
use r0lab_core::leslie::{ClosedFormR0, Fertility, LeslieModel, NormIndex, Survival};
use r0lab_core::{NonNegMatrix, SplitSystem, Tolerances};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
pub struct ModelFile {
    #[serde(default = "default_version")]
    pub schema_version: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

fn default_version() -> String {
    "1".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Split {
        #[serde(rename = "T")]
        transition: Vec<Vec<f64>>,
        #[serde(rename = "F")]
        fertility: Vec<Vec<f64>>,
    },
    Leslie {
        fertility: FertilitySpec,
        survival: SurvivalSpec,
        #[serde(default)]
        p: NormIndexSpec,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FertilitySpec {
    /// Finitely many reproducing age classes.
    Finite { values: Vec<f64> },
    /// `f_i = c * beta^(i-1)`.
    Geometric { c: f64, beta: f64 },
}

impl FertilitySpec {
    fn into_core(self) -> Fertility {
        match self {
            FertilitySpec::Finite { values } => Fertility::FiniteSupport(values),
            FertilitySpec::Geometric { c, beta } => Fertility::Geometric { c, beta },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurvivalSpec {
    Constant { t: f64 },
    FiniteList { values: Vec<f64>, tail: f64 },
}

impl SurvivalSpec {
    fn into_core(self) -> Survival {
        match self {
            SurvivalSpec::Constant { t } => Survival::Constant(t),
            SurvivalSpec::FiniteList { values, tail } => Survival::FiniteList { values, tail },
        }
    }
}

/// Norm index `p`: a JSON number `>= 1` or the string `"inf"` /
/// `"infinity"`; defaults to infinity when absent.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NormIndexSpec {
    Number(f64),
    Name(String),
}

impl Default for NormIndexSpec {
    fn default() -> Self {
        NormIndexSpec::Name("inf".to_string())
    }
}

impl NormIndexSpec {
    fn into_core(self) -> Result<NormIndex, CliError> {
        match self {
            NormIndexSpec::Number(p) => Ok(NormIndex::Finite(p)),
            NormIndexSpec::Name(s) if s == "infinity" || s == "inf" => Ok(NormIndex::Infinity),
            NormIndexSpec::Name(s) => Err(CliError::Parse(format!(
                "unknown norm index {s:?}: use a number >= 1 or \"inf\""
            ))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct ToleranceOverrides {
    pub tol_eq: Option<f64>,
    pub tol_spec: Option<f64>,
    pub tol_split: Option<f64>,
    pub max_iter: Option<usize>,
}

impl ToleranceOverrides {
    fn apply(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(v) = self.tol_eq {
            tol.tol_eq = v;
        }
        if let Some(v) = self.tol_spec {
            tol.tol_spec = v;
        }
        if let Some(v) = self.tol_split {
            tol.tol_split = v;
        }
        if let Some(v) = self.max_iter {
            tol.max_iter = v;
        }
        tol
    }
}

/// A model ready for analysis. Leslie models carry both the structured form
/// and the finite truncation the generic machinery runs on.
pub enum LoadedModel {
    Split(SplitSystem),
    Leslie { model: LeslieModel, truncated: SplitSystem, closed: ClosedFormR0 },
}

impl LoadedModel {
    pub fn system(&self) -> &SplitSystem {
        match self {
            LoadedModel::Split(sys) => sys,
            LoadedModel::Leslie { truncated, .. } => truncated,
        }
    }

    /// Truncation dimension for Leslie models, if any.
    pub fn truncation_dim(&self) -> Option<usize> {
        match self {
            LoadedModel::Split(_) => None,
            LoadedModel::Leslie { truncated, .. } => Some(truncated.dim()),
        }
    }
}

/// Reads, parses, and validates a model file; Leslie models are truncated
/// at `dim` states.
pub fn load(path: &Path, dim: usize) -> Result<(LoadedModel, Tolerances), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("invalid model file: {e}")))?;
    if file.schema_version != "1" {
        return Err(CliError::Parse(format!(
            "unsupported schema_version {:?} (expected \"1\")",
            file.schema_version
        )));
    }
    let tol = file.tolerances.apply();
    tol.validate()?;
    match file.spec {
        ModelSpec::Split { transition, fertility } => {
            let t = NonNegMatrix::from_rows(&transition)?;
            let f = NonNegMatrix::from_rows(&fertility)?;
            let sys = SplitSystem::new(t, f, &tol)?;
            Ok((LoadedModel::Split(sys), tol))
        }
        ModelSpec::Leslie { fertility, survival, p } => {
            let model = LeslieModel::new(
                fertility.into_core(),
                survival.into_core(),
                p.into_core()?,
            )?;
            let truncated = model.truncate(dim, &tol)?;
            let closed = model.closed_form_r0(&tol)?;
            Ok((LoadedModel::Leslie { model, truncated, closed }, tol))
        }
    }
}
