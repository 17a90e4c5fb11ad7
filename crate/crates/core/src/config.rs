//! Scenario files.
//!
//! ```toml
//! [model]
//! a = 0.03
//! sigma = 0.2
//! c = 1.0
//! lambda1 = 1.0
//! lambda2 = 1.0
//! law1 = "exp(1)"
//! law2 = "exp(1)"
//!
//! [sim]
//! horizon = 1000.0
//! substep = 0.5
//! n_paths = 200000
//! seed = 7
//!
//! [u_grid]
//! values = [64.0, 128.0, 256.0]
//! ```
//!
//! Without `values`, the grid is geometric, `u_k = u₀·ratio^k`, with `u₀`
//! picked by a pilot run so that the estimated ruin probability at `u₀` is
//! about `start_psi`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sim::{ModelConfig, ModelParams, RuinThresholds, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UGridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_start_psi")]
    pub start_psi: f64,
    #[serde(default = "default_pilot_paths")]
    pub pilot_paths: u64,
}

fn default_points() -> usize {
    8
}
fn default_ratio() -> f64 {
    2.0
}
fn default_start_psi() -> f64 {
    0.2
}
fn default_pilot_paths() -> u64 {
    10_000
}

impl Default for UGridConfig {
    fn default() -> Self {
        UGridConfig {
            values: None,
            points: default_points(),
            ratio: default_ratio(),
            start_psi: default_start_psi(),
            pilot_paths: default_pilot_paths(),
        }
    }
}

/// Pilot-run acceptance band for the ruin probability at `u₀`.
pub const START_PSI_BAND: (f64, f64) = (0.05, 0.5);

impl UGridConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match &self.values {
            Some(v) if v.is_empty() => bad("u_grid.values is empty".into()),
            Some(v) if v.iter().any(|u| !(*u > 0.0 && u.is_finite())) => {
                bad("u_grid.values must be positive".into())
            }
            Some(_) => Ok(()),
            None if self.points == 0 => bad("u_grid.points must be at least 1".into()),
            None if !(self.ratio > 1.0) => bad("u_grid.ratio must exceed 1".into()),
            None if !(self.start_psi > START_PSI_BAND.0 && self.start_psi < START_PSI_BAND.1) => bad(format!(
                "u_grid.start_psi must lie in ({}, {})",
                START_PSI_BAND.0, START_PSI_BAND.1
            )),
            None if self.pilot_paths == 0 => bad("u_grid.pilot_paths must be at least 1".into()),
            None => Ok(()),
        }
    }

    /// The grid, running a pilot simulation when no explicit values are set.
    pub fn resolve(&self, params: &ModelParams, sim: &SimConfig) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        let pilot = SimConfig {
            n_paths: self.pilot_paths,
            seed: sim.seed ^ 0x9e37_79b9_7f4a_7c15,
            ..sim.clone()
        };
        let th = RuinThresholds::simulate(params, &pilot, &[sim.horizon])?;
        let u0 = th.capital_for(self.start_psi, 0);
        let psi0 = th.estimate(u0, 0).psi_hat;
        if !(psi0 >= START_PSI_BAND.0 && psi0 <= START_PSI_BAND.1) {
            log::warn!("pilot ruin probability at u0 = {u0} is {psi0}, outside {START_PSI_BAND:?}");
        }
        Ok((0..self.points).map(|k| u0 * self.ratio.powi(k as i32)).collect())
    }
}

/// Optional checks run by the full pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Re-estimate at twice the horizon and flag unstable points.
    #[serde(default = "yes")]
    pub horizon_doubling: bool,
    /// Points where the reduction identity is checked on `e^{−u}`.
    #[serde(default = "default_identity_points")]
    pub identity_points: Vec<f64>,
    #[serde(default = "default_frobenius_terms")]
    pub frobenius_terms: usize,
}

fn yes() -> bool {
    true
}
fn default_identity_points() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0]
}
fn default_frobenius_terms() -> usize {
    20
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            horizon_doubling: true,
            identity_points: default_identity_points(),
            frobenius_terms: default_frobenius_terms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelConfig,
    pub sim: SimConfig,
    #[serde(default)]
    pub u_grid: UGridConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.u_grid.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical serialization, so formatting does not matter.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[model]
a = 0.03
sigma = 0.2
c = 1.0
lambda1 = 1.0
lambda2 = 1.0
law1 = "exp(1)"
law2 = { order = 2, ode_coeffs = [1.0, 2.0, 1.0], boundary_values = [0.0, 1.0] }

[sim]
horizon = 50.0
n_paths = 100
seed = 3

[u_grid]
values = [1.0, 2.0]
"#;

    #[test]
    fn parses_and_hashes_stably() {
        let s = Scenario::from_toml(TEXT).unwrap();
        assert_eq!(s.sim.substep, crate::sim::DEFAULT_SUBSTEP);
        assert!(s.checks.horizon_doubling);
        let again = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.hash(), again.hash());
        assert_eq!(s.hash().len(), 64);
        let mut other = s.clone();
        other.sim.seed = 4;
        assert_ne!(s.hash(), other.hash());
        s.model.build().unwrap();
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Scenario::from_toml("[model]\na = 1").is_err());
        assert!(Scenario::from_toml(&TEXT.replace("seed = 3", "seed = 3\nbogus = 1")).is_err());
        assert!(Scenario::from_toml(&TEXT.replace("values = [1.0, 2.0]", "values = []")).is_err());
    }
}
