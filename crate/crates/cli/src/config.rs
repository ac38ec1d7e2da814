//! JSON run configurations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rau_core::propagator::Method;
use rau_core::{CouplingFunction, IntegratorConfig, Model, OracleConfig, SimulationConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBlock {
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "default_points")]
    pub output_grid_points: usize,
}

fn default_points() -> usize {
    1001
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputBlock {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Configuration of `simulate` and `plot-data`. The model fields sit at the
/// top level next to a `"model": "pt" | "spin"` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub model: Model,
    pub time: TimeBlock,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub method: Method,
    /// Restart the factorized method from the oracle after a pole.
    #[serde(default)]
    pub reanchor: bool,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.time;
        if !(t.t0.is_finite() && t.t1.is_finite() && t.t1 > t.t0) {
            return Err(CliError::Config(format!("time: need finite t1 > t0, got t0 = {}, t1 = {}", t.t0, t.t1)));
        }
        if t.output_grid_points < 2 {
            return Err(CliError::Config(format!("time.output_grid_points must be at least 2, got {}", t.output_grid_points)));
        }
        self.model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        self.integrator.validate().map_err(|e| CliError::Config(format!("integrator: {e}")))?;
        self.oracle.validate().map_err(|e| CliError::Config(format!("oracle: {e}")))?;
        Ok(())
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            output_points: self.time.output_grid_points,
            integrator: self.integrator,
            oracle: self.oracle,
            method: self.method,
            reanchor: self.reanchor,
        }
    }
}

/// Configuration of `makharko-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakHarkoConfig {
    pub p: f64,
    pub kappa: CouplingFunction,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_check_points")]
    pub points: usize,
    #[serde(default = "default_fd_width")]
    pub fd_width: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

fn default_t1() -> f64 {
    1.0
}

fn default_check_points() -> usize {
    100
}

fn default_fd_width() -> f64 {
    rau_core::makharko::DEFAULT_FD_WIDTH
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
