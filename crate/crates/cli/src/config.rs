//! Experiment configuration: a JSON document whose fields can be overridden
//! from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use bregcirc::{LegendreFunction, MethodConfig, OperatorFamily, Point};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::format::parse_vector;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: Option<String>,
    pub dim: Option<usize>,
    pub operators: Vec<String>,
    pub x0: Option<Vec<f64>>,
    pub tol_step: Option<f64>,
    pub max_iters: Option<usize>,
    pub reference: Option<Vec<f64>>,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub cross_check: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| CliError::Json {
            path: path.to_owned(),
            source,
        })
    }

    /// Fields set in `other` replace those of `self`.
    pub fn overridden_by(self, other: ExperimentConfig) -> Self {
        Self {
            function: other.function.or(self.function),
            dim: other.dim.or(self.dim),
            operators: if other.operators.is_empty() { self.operators } else { other.operators },
            x0: other.x0.or(self.x0),
            tol_step: other.tol_step.or(self.tol_step),
            max_iters: other.max_iters.or(self.max_iters),
            reference: other.reference.or(self.reference),
            output_path: other.output_path.or(self.output_path),
            seed: other.seed.or(self.seed),
            cross_check: other.cross_check.or(self.cross_check),
        }
    }

    /// Checks the configuration and builds the library objects it names.
    pub fn resolve(&self) -> Result<Experiment, CliError> {
        let name = self.function.as_deref().ok_or_else(|| CliError::usage("missing `function`"))?;
        let x0 = self.x0.as_ref().ok_or_else(|| CliError::usage("missing `x0`"))?;
        let dim = self.dim.unwrap_or(x0.len());
        if x0.len() != dim {
            return Err(CliError::usage(format!("x0 has {} entries but dim is {dim}", x0.len())));
        }
        if self.operators.is_empty() {
            return Err(CliError::usage("at least one operator is required"));
        }
        let f = LegendreFunction::from_name(name, dim)?;
        let family = OperatorFamily::parse(&self.operators, dim)?;
        let x0 = Point::from_column_slice(x0);
        if !f.in_interior(&x0, 0.0) {
            return Err(CliError::usage(format!("x0 is not in the interior of dom {}", f.name())));
        }

        let mut method = MethodConfig::default();
        if let Some(t) = self.tol_step {
            method.tol_step = t;
        }
        if let Some(m) = self.max_iters {
            method.max_iters = m;
        }
        if let Some(c) = &self.reference {
            if c.len() != dim {
                return Err(CliError::usage(format!("reference has {} entries but dim is {dim}", c.len())));
            }
            method.reference_point = Some(Point::from_column_slice(c));
        }
        method.circumcenter.cross_check = self.cross_check.unwrap_or(false);
        method.validate()?;

        Ok(Experiment {
            f,
            family,
            x0,
            method,
            output: self.output_path.clone(),
        })
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub f: LegendreFunction,
    pub family: OperatorFamily,
    pub x0: Point,
    pub method: MethodConfig,
    pub output: Option<PathBuf>,
}

/// Parses an optional comma-separated vector flag.
pub(crate) fn vector_flag(value: Option<&str>) -> Result<Option<Vec<f64>>, CliError> {
    value.map(parse_vector).transpose()
}
