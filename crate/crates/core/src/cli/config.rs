//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, TrapSpec};
use crate::propagate::PropagationConfig;
use crate::state::MixtureSpec;

/// Starting guess for the relaxation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// Lowest one-body orbitals, every layer in its first configuration.
    #[default]
    Hartree,
    /// Random state drawn from `seed`.
    Random,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_bands() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Species, couplings, grid and trap. A `blocking_step` on a trap applies
    /// only while relaxing; real-time runs drop it.
    pub mixture: MixtureSpec,
    /// Imaginary-time settings.
    #[serde(default)]
    pub relaxation: PropagationConfig,
    /// Real-time settings.
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub initial: InitialGuess,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Number of one-body levels written by `bands`.
    #[serde(default = "default_bands")]
    pub bands: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.mixture.validate()?;
        self.relaxation
            .validate()
            .map_err(|e| prefix("relaxation", e))?;
        self.propagation
            .validate()
            .map_err(|e| prefix("propagation", e))?;
        if let GridSpec::Sine { points, .. } = self.mixture.grid {
            if points % 2 == 1 {
                return Err(Error::Config(format!(
                    "mixture.grid.points: sine grids need an even point count (a node at x = 0 belongs to neither well), got {points}"
                )));
            }
        }
        let n = self.mixture.grid.points();
        if self.bands == 0 || self.bands > n {
            return Err(Error::Config(format!("bands: need 1 <= bands <= {n}, got {}", self.bands)));
        }
        Ok(())
    }

    /// Mixture used for relaxation: traps exactly as configured.
    pub fn relaxation_spec(&self) -> MixtureSpec {
        self.mixture.clone()
    }

    /// Mixture used in real time: every blocking step removed.
    pub fn propagation_spec(&self) -> MixtureSpec {
        let mut spec = self.mixture.clone();
        spec.trap = spec.trap.without_blocking();
        for s in &mut spec.species {
            s.trap = s.trap.as_ref().map(TrapSpec::without_blocking);
        }
        spec
    }

    /// Everything that affects results, with defaults filled in, plus the
    /// derived interaction parameters.
    pub fn metadata(&self, command: &str) -> Result<Value> {
        let couplings = self.mixture.couplings()?;
        let species: Vec<Value> = self
            .mixture
            .species
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "g_n_minus_1": s.g * (s.particles as f64 - 1.0),
                })
            })
            .collect();
        Ok(json!({
            "program": "mlb",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": serde_json::to_value(self)?,
            "derived": {
                "species": species,
                "couplings": couplings,
                "grid_points": self.mixture.grid.points(),
            },
        }))
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(msg.replacen("propagation.", &format!("{section}."), 1)),
        other => other,
    }
}

/// Parses and validates a configuration document; errors name the offending
/// path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
