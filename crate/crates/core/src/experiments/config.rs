use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::io::toml_error;
use crate::instance::{CatalogTemplate, Shape};
use crate::solver::SolveBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Table3,
    ColocationSweep,
    LoadSweep,
    AlphaSweep,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Table3 => "table3",
            ExperimentKind::ColocationSweep => "colocation_sweep",
            ExperimentKind::LoadSweep => "load_sweep",
            ExperimentKind::AlphaSweep => "alpha_sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub name: String,
    pub iot_nodes: usize,
    pub edge_nodes: usize,
    pub models: usize,
    pub variants: usize,
}

impl Problem {
    pub fn shape(&self) -> Shape {
        Shape::new(self.iot_nodes, self.edge_nodes, self.models, self.variants)
    }
}

/// A named mean request rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadLevel {
    pub label: String,
    pub mean: f64,
}

fn default_max_nodes() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Branch-and-bound node budget per grid point.
    #[serde(default = "default_max_nodes")]
    pub max_nodes: u64,
    /// Optional wall-clock limit per grid point. Results then depend on
    /// machine speed.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
    #[serde(default)]
    pub gap: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_nodes: default_max_nodes(),
            time_limit_secs: None,
            gap: 0.0,
        }
    }
}

impl SolverSettings {
    pub fn budget(&self) -> SolveBudget {
        SolveBudget {
            max_nodes: Some(self.max_nodes),
            time_limit: self.time_limit_secs.map(Duration::from_secs_f64),
            gap: self.gap,
        }
    }
}

fn default_interference() -> f64 {
    0.1
}

fn default_link_delay() -> f64 {
    12.23
}

/// An experiment grid, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seeds: Vec<u64>,
    pub problems: Vec<Problem>,
    pub loads: Vec<LoadLevel>,
    pub max_replicas: Vec<u32>,
    pub objective_weights: Vec<f64>,
    /// Memory capacity of every edge node.
    pub capacity: f64,
    #[serde(default = "default_interference")]
    pub interference_coeff: f64,
    /// Mean one-way link delay in milliseconds.
    #[serde(default = "default_link_delay")]
    pub link_delay_mean: f64,
    /// Variant catalog template; the bundled one when unset. Relative to the
    /// working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverSettings,
    /// CSV path, relative to the working directory.
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn catalog_template(&self) -> Result<CatalogTemplate> {
        match &self.catalog {
            None => Ok(CatalogTemplate::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                CatalogTemplate::from_toml(&text)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let non_empty = [
            ("seeds", self.seeds.is_empty()),
            ("problems", self.problems.is_empty()),
            ("loads", self.loads.is_empty()),
            ("max_replicas", self.max_replicas.is_empty()),
            ("objective_weights", self.objective_weights.is_empty()),
        ];
        for (field, empty) in non_empty {
            if empty {
                return Err(Error::validation(field, "must not be empty"));
            }
        }
        for (k, p) in self.problems.iter().enumerate() {
            if p.name.is_empty() {
                return Err(Error::validation(format!("problems[{k}].name"), "must not be empty"));
            }
            for (field, value) in [
                ("iot_nodes", p.iot_nodes),
                ("edge_nodes", p.edge_nodes),
                ("models", p.models),
                ("variants", p.variants),
            ] {
                if value == 0 {
                    return Err(Error::validation(format!("problems[{k}].{field}"), "must be positive"));
                }
            }
        }
        for (k, l) in self.loads.iter().enumerate() {
            if !(l.mean.is_finite() && l.mean >= 0.0) {
                return Err(Error::validation(format!("loads[{k}].mean"), "must be finite and non-negative"));
            }
        }
        if let Some(k) = self.max_replicas.iter().position(|&k| k == 0) {
            return Err(Error::validation(format!("max_replicas[{k}]"), "must be positive"));
        }
        if let Some(k) = self.objective_weights.iter().position(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::validation(format!("objective_weights[{k}]"), "must lie in [0, 1]"));
        }
        for (field, value) in [
            ("capacity", self.capacity),
            ("interference_coeff", self.interference_coeff),
            ("link_delay_mean", self.link_delay_mean),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::validation(field, "must be finite and non-negative"));
            }
        }
        if self.solver.max_nodes == 0 {
            return Err(Error::validation("solver.max_nodes", "must be positive"));
        }
        if let Some(t) = self.solver.time_limit_secs {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::validation("solver.time_limit_secs", "must be positive"));
            }
        }
        if !(self.solver.gap.is_finite() && self.solver.gap >= 0.0) {
            return Err(Error::validation("solver.gap", "must be non-negative"));
        }
        if self.output.as_os_str().is_empty() {
            return Err(Error::validation("output", "must not be empty"));
        }
        Ok(())
    }
}
