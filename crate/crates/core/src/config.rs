//! Run configuration shared by the CLI subcommands.
//!
//! A run is described by a JSON document in which every field is optional;
//! missing fields take the defaults below, which reproduce the standard
//! protocol (50,000 iterations, 30,000 burn-in, 12-step horizon, 95% bounds).
//!
//! ```json
//! {
//!   "model": "seasonal",
//!   "hyper": { "tau_shape": 0.01, "observation_scale": 200.0 },
//!   "mcmc": { "n_iter": 50000, "burn_in": 30000, "thin": 1, "seed": 1 },
//!   "horizon": 12,
//!   "levels": [0.025, 0.975],
//!   "period": 12,
//!   "trace": ["tau", "x[288]"]
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{DEFAULT_LEVELS, MIN_PATHS};
use crate::gibbs::Quantity;
use crate::model::{Hyperparameters, McmcConfig, ModelKind, DEFAULT_PERIOD};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TVSS_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub hyper: Hyperparameters,
    pub mcmc: McmcConfig,
    pub horizon: usize,
    pub levels: (f64, f64),
    pub period: usize,
    pub inputs: Vec<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Quantities written to trace CSVs, in the `tau`, `x[t]`, `b1[t]` syntax.
    pub trace: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Seasonal,
            hyper: Hyperparameters::default(),
            mcmc: McmcConfig::default(),
            horizon: 12,
            levels: DEFAULT_LEVELS,
            period: DEFAULT_PERIOD,
            inputs: Vec::new(),
            output_dir: None,
            trace: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Checks everything that can be checked before data is read.
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.mcmc.validate()?;
        if self.mcmc.retained() < MIN_PATHS {
            return Err(Error::config(format!(
                "run retains {} draws; at least {MIN_PATHS} are required",
                self.mcmc.retained()
            )));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        let (lo, hi) = self.levels;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::config(format!(
                "invalid quantile levels ({lo}, {hi})"
            )));
        }
        if self.period < 2 {
            return Err(Error::config("period must be at least 2"));
        }
        self.trace_quantities()?;
        Ok(())
    }

    pub fn trace_quantities(&self) -> Result<Vec<Quantity>> {
        self.trace.iter().map(|s| s.parse()).collect()
    }

    /// Explicit directory, else `$TVSS_OUTPUT_DIR`, else the working directory.
    pub fn resolve_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
