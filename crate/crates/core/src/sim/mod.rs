//! Reserve process `dX = X dR + dP`, `R_t = at + σW_t`, with compound
//! two-sided jumps, and Monte Carlo estimates of the ruin probability.

mod engine;
mod gate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{JumpLaw, LawSpec};

pub use engine::{estimate_ruin, estimate_ruin_grid, simulate_path, PathOutcome, RuinThresholds, Simulator};
pub use gate::{check_theorem_preconditions, GateReport};

/// Reserves above this are treated as escaped for good.
pub const OVERFLOW_LEVEL: f64 = 1e300;

#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Drift of the risky asset's log-return process `R`.
    pub a: f64,
    pub sigma: f64,
    /// Premium rate.
    pub c: f64,
    /// Intensity of downward jumps (claims, law 1).
    pub lambda1: f64,
    /// Intensity of upward jumps (random premiums, law 2).
    pub lambda2: f64,
    pub law1: JumpLaw,
    pub law2: JumpLaw,
}

impl ModelParams {
    pub fn new(
        a: f64,
        sigma: f64,
        c: f64,
        lambda1: f64,
        lambda2: f64,
        law1: JumpLaw,
        law2: JumpLaw,
    ) -> Result<Self> {
        let params = ModelParams {
            a,
            sigma,
            c,
            lambda1,
            lambda2,
            law1,
            law2,
        };
        params.check()?;
        Ok(params)
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if [self.a, self.sigma, self.c, self.lambda1, self.lambda2]
            .iter()
            .any(|v| !v.is_finite())
        {
            return bad("non-finite parameter".into());
        }
        if self.sigma < 0.0 {
            return bad(format!("sigma = {} must be nonnegative", self.sigma));
        }
        if self.c == 0.0 {
            return bad("premium rate c must be nonzero".into());
        }
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return bad(format!(
                "jump intensities must be positive (lambda1 = {}, lambda2 = {})",
                self.lambda1, self.lambda2
            ));
        }
        Ok(())
    }

    pub fn total_intensity(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    /// `β = 2a/σ² − 1`; infinite when σ = 0.
    pub fn beta(&self) -> f64 {
        2.0 * self.a / (self.sigma * self.sigma) - 1.0
    }
}

/// Serializable form of [`ModelParams`] used by scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: f64,
    pub sigma: f64,
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub law1: LawSpec,
    pub law2: LawSpec,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.a,
            self.sigma,
            self.c,
            self.lambda1,
            self.lambda2,
            JumpLaw::new(self.law1.resolve()?)?,
            JumpLaw::new(self.law2.resolve()?)?,
        )
    }
}

/// Default substep of the diffusion between jumps.
pub const DEFAULT_SUBSTEP: f64 = 1e-2;
/// Default horizon, in mean inter-jump times.
pub const DEFAULT_HORIZON_JUMPS: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    #[serde(default = "default_substep")]
    pub substep: f64,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub ruin_floor: f64,
    /// Heuristic Brownian-bridge check for crossings inside a substep.
    #[serde(default)]
    pub bridge_correction: bool,
}

fn default_substep() -> f64 {
    DEFAULT_SUBSTEP
}

impl SimConfig {
    /// Default substep and a horizon of 200 mean inter-jump times.
    pub fn for_model(params: &ModelParams, n_paths: u64, seed: u64) -> Self {
        SimConfig {
            horizon: DEFAULT_HORIZON_JUMPS / params.total_intensity(),
            substep: DEFAULT_SUBSTEP,
            n_paths,
            seed,
            ruin_floor: 0.0,
            bridge_correction: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        if !(self.substep > 0.0 && self.substep <= self.horizon) {
            return bad(format!(
                "substep {} must lie in (0, horizon = {}]",
                self.substep, self.horizon
            ));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if !self.ruin_floor.is_finite() {
            return bad("ruin_floor must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub u: f64,
    pub psi_hat: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub horizon: f64,
    /// Paths still alive at the horizon.
    pub fraction_censored: f64,
    /// Paths stopped by the overflow guard (counted as not ruined).
    #[serde(default)]
    pub n_aborted: u64,
}

impl RuinEstimate {
    pub fn from_counts(u: f64, ruined: u64, aborted: u64, n_paths: u64, horizon: f64) -> Self {
        let n = n_paths as f64;
        let psi_hat = ruined as f64 / n;
        RuinEstimate {
            u,
            psi_hat,
            stderr: (psi_hat * (1.0 - psi_hat) / n).sqrt(),
            n_paths,
            horizon,
            fraction_censored: (n_paths - ruined - aborted) as f64 / n,
            n_aborted: aborted,
        }
    }
}

/// Random stream of one path: ChaCha8 keyed on the seed, stream id = path
/// index. Output depends only on `(seed, path_index)`, never on scheduling.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}
