//! Path simulation.
//!
//! Between jump epochs the reserve solves `dX = X dR + c dt` exactly up to the
//! premium integral. On a substep of length `δ ≤ h`, with `g = e^{ΔR}`,
//!
//! ```text
//! X ← g·X + c·δ·(1 + g)/2
//! ```
//!
//! where the second term is the trapezoid rule for `c∫ e^{R_end - R_s} ds`.
//! The map is affine in the initial capital, so a path started from `u` is
//! `X^u = u·D + Z` with `D = e^{R}` and `Z` the path started from zero. A
//! single pass therefore yields, per path, the threshold `M` such that the path
//! is ruined from `u` exactly when `u < M`; [`RuinThresholds`] uses this to
//! estimate a whole grid of `u` with common random numbers.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use super::{path_rng, ModelParams, RuinEstimate, SimConfig, OVERFLOW_LEVEL};
use crate::error::{Error, Result};
use crate::laws::Sampler;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub ruined_at: Option<f64>,
    /// Reserve when the path stopped (at ruin, abort, or the horizon).
    pub terminal_value: f64,
    /// Stopped by the overflow guard; counts as not ruined.
    pub aborted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Continue,
    Stop,
}

trait Observer {
    fn flow<R: Rng + ?Sized>(&mut self, t: f64, growth: f64, premium: f64, delta: f64, rng: &mut R) -> Step;
    fn jump(&mut self, t: f64, size: f64) -> Step;
}

/// Where jump epochs and sizes come from.
enum Jumps<'a> {
    Poisson,
    /// Fixed `(time, signed size)` list, sorted by time.
    Scripted(&'a [(f64, f64)]),
}

/// A model with its jump samplers built once.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    params: &'a ModelParams,
    claims: Sampler,
    premiums: Sampler,
    log_drift: f64,
    p_up: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        Simulator {
            params,
            claims: params.law1.sampler(),
            premiums: params.law2.sampler(),
            log_drift: params.a - 0.5 * params.sigma * params.sigma,
            p_up: params.lambda2 / params.total_intensity(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    fn drive<R: Rng + ?Sized, O: Observer>(
        &self,
        horizon: f64,
        substep: f64,
        jumps: Jumps<'_>,
        rng: &mut R,
        obs: &mut O,
    ) {
        let p = self.params;
        let total = p.total_intensity();
        let mut t = 0.0;
        let mut script = match jumps {
            Jumps::Scripted(list) => Some(list.iter()),
            Jumps::Poisson => None,
        };
        loop {
            let next = match script.as_mut() {
                None => {
                    let e: f64 = Exp1.sample(rng);
                    Some((t + e / total, None))
                }
                Some(it) => it.next().map(|&(time, size)| (time, Some(size))),
            };
            let t_jump = next.map_or(f64::INFINITY, |(time, _)| time);
            let end = t_jump.min(horizon);
            let len = end - t;
            if len > 0.0 {
                let n = (len / substep).ceil().max(1.0) as usize;
                let delta = len / n as f64;
                let vol = p.sigma * delta.sqrt();
                for i in 0..n {
                    let mut dr = self.log_drift * delta;
                    if p.sigma > 0.0 {
                        let z: f64 = StandardNormal.sample(rng);
                        dr += vol * z;
                    }
                    let growth = dr.exp();
                    let premium = p.c * delta * 0.5 * (1.0 + growth);
                    let ts = if i + 1 == n { end } else { t + (i + 1) as f64 * delta };
                    if obs.flow(ts, growth, premium, delta, rng) == Step::Stop {
                        return;
                    }
                }
            }
            let Some((time, scripted)) = next else { return };
            if time > horizon {
                return;
            }
            t = time;
            let size = match scripted {
                Some(size) => size,
                None => {
                    if rng.random::<f64>() < self.p_up {
                        self.premiums.sample(rng)
                    } else {
                        -self.claims.sample(rng)
                    }
                }
            };
            if obs.jump(t, size) == Step::Stop {
                return;
            }
        }
    }

    /// One path from initial capital `u` with Poisson jumps.
    pub fn simulate_path<R: Rng + ?Sized>(&self, u: f64, config: &SimConfig, rng: &mut R) -> PathOutcome {
        self.run_single(u, config, Jumps::Poisson, rng)
    }

    /// One path whose jumps are the given `(time, signed size)` list instead
    /// of Poisson draws. The diffusion still draws from `rng`.
    pub fn simulate_path_scripted<R: Rng + ?Sized>(
        &self,
        u: f64,
        config: &SimConfig,
        jumps: &[(f64, f64)],
        rng: &mut R,
    ) -> PathOutcome {
        self.run_single(u, config, Jumps::Scripted(jumps), rng)
    }

    fn run_single<R: Rng + ?Sized>(&self, u: f64, config: &SimConfig, jumps: Jumps<'_>, rng: &mut R) -> PathOutcome {
        let mut obs = SingleCapital {
            x: u,
            floor: config.ruin_floor,
            sigma: self.params.sigma,
            bridge: config.bridge_correction,
            ruined_at: None,
            aborted: false,
        };
        if u < config.ruin_floor {
            obs.ruined_at = Some(0.0);
        } else {
            self.drive(config.horizon, config.substep, jumps, rng, &mut obs);
        }
        PathOutcome {
            ruined_at: obs.ruined_at,
            terminal_value: obs.x,
            aborted: obs.aborted,
        }
    }

    /// Ruin thresholds of one path at each checkpoint time (sorted ascending).
    fn path_thresholds<R: Rng + ?Sized>(&self, config: &SimConfig, checkpoints: &[f64], rng: &mut R) -> PathThresholds {
        let mut obs = Affine {
            scale: 1.0,
            offset: 0.0,
            floor: config.ruin_floor,
            checkpoints,
            thresholds: vec![config.ruin_floor; checkpoints.len()],
            aborted_at: None,
        };
        let horizon = *checkpoints.last().expect("at least one checkpoint");
        self.drive(horizon, config.substep, Jumps::Poisson, rng, &mut obs);
        PathThresholds {
            thresholds: obs.thresholds,
            aborted_at: obs.aborted_at,
        }
    }
}

struct SingleCapital {
    x: f64,
    floor: f64,
    sigma: f64,
    bridge: bool,
    ruined_at: Option<f64>,
    aborted: bool,
}

impl SingleCapital {
    fn settle(&mut self, t: f64) -> Step {
        if self.x < self.floor {
            self.ruined_at = Some(t);
            Step::Stop
        } else if !(self.x.abs() <= OVERFLOW_LEVEL) {
            self.aborted = true;
            Step::Stop
        } else {
            Step::Continue
        }
    }
}

impl Observer for SingleCapital {
    fn flow<R: Rng + ?Sized>(&mut self, t: f64, growth: f64, premium: f64, delta: f64, rng: &mut R) -> Step {
        let before = self.x;
        self.x = before * growth + premium;
        if self.settle(t) == Step::Stop {
            return Step::Stop;
        }
        if self.bridge && self.sigma > 0.0 {
            // Crossing probability of a Brownian bridge with the local
            // volatility σ|X| frozen at the geometric mean of the endpoints.
            let var = self.sigma * self.sigma * (before * self.x).abs() * delta;
            if var > 0.0 {
                let p_cross = (-2.0 * (before - self.floor) * (self.x - self.floor) / var).exp();
                if rng.random::<f64>() < p_cross {
                    self.ruined_at = Some(t);
                    return Step::Stop;
                }
            }
        }
        Step::Continue
    }

    fn jump(&mut self, t: f64, size: f64) -> Step {
        self.x += size;
        self.settle(t)
    }
}

/// Tracks `X^u = u·scale + offset` for all `u` at once.
struct Affine<'c> {
    scale: f64,
    offset: f64,
    floor: f64,
    checkpoints: &'c [f64],
    thresholds: Vec<f64>,
    aborted_at: Option<f64>,
}

impl Affine<'_> {
    fn record(&mut self, t: f64) -> Step {
        if !(self.scale <= OVERFLOW_LEVEL && self.offset.abs() <= OVERFLOW_LEVEL) {
            self.aborted_at = Some(t);
            return Step::Stop;
        }
        // Ruined from u at this instant iff u·scale + offset < floor.
        let m = (self.floor - self.offset) / self.scale;
        for (c, th) in self.checkpoints.iter().zip(self.thresholds.iter_mut()) {
            if t <= *c && m > *th {
                *th = m;
            }
        }
        Step::Continue
    }
}

impl Observer for Affine<'_> {
    fn flow<R: Rng + ?Sized>(&mut self, t: f64, growth: f64, premium: f64, _delta: f64, _rng: &mut R) -> Step {
        self.scale *= growth;
        self.offset = self.offset * growth + premium;
        self.record(t)
    }

    fn jump(&mut self, t: f64, size: f64) -> Step {
        self.offset += size;
        self.record(t)
    }
}

/// Convenience wrapper building a [`Simulator`] for a single path.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &ModelParams,
    u: f64,
    config: &SimConfig,
    rng: &mut R,
) -> PathOutcome {
    Simulator::new(params).simulate_path(u, config, rng)
}

/// Monte Carlo estimate of `P(τ ≤ T)` from initial capital `u`.
///
/// Path `i` uses the stream [`path_rng`]`(seed, i)`, so the result does not
/// depend on the thread count.
pub fn estimate_ruin(params: &ModelParams, u: f64, config: &SimConfig) -> Result<RuinEstimate> {
    config.validate()?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidParams(format!("initial capital u = {u} must be positive")));
    }
    let sim = Simulator::new(params);
    let (ruined, aborted) = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let out = sim.simulate_path(u, config, &mut path_rng(config.seed, i));
            (out.ruined_at.is_some() as u64, out.aborted as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(RuinEstimate::from_counts(u, ruined, aborted, config.n_paths, config.horizon))
}

#[derive(Debug, Clone)]
struct PathThresholds {
    thresholds: Vec<f64>,
    aborted_at: Option<f64>,
}

/// Per-path ruin thresholds at one or more horizons.
///
/// Path `i` is ruined by checkpoint `k` from capital `u` iff
/// `u < thresholds[k][i]`. Paths use the same streams as [`estimate_ruin`].
#[derive(Debug, Clone)]
pub struct RuinThresholds {
    pub checkpoints: Vec<f64>,
    thresholds: Vec<Vec<f64>>,
    aborted_at: Vec<Option<f64>>,
}

impl RuinThresholds {
    /// Simulates `config.n_paths` paths up to the last checkpoint.
    pub fn simulate(params: &ModelParams, config: &SimConfig, checkpoints: &[f64]) -> Result<Self> {
        config.validate()?;
        if config.bridge_correction {
            return Err(Error::InvalidConfig(
                "the bridge correction is only available for per-capital estimates".into(),
            ));
        }
        let mut checkpoints = checkpoints.to_vec();
        checkpoints.sort_by(f64::total_cmp);
        checkpoints.dedup();
        if checkpoints.is_empty() || !(checkpoints[0] > 0.0) || !checkpoints.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidConfig("checkpoints must be positive and finite".into()));
        }
        let sim = Simulator::new(params);
        let paths: Vec<PathThresholds> = (0..config.n_paths)
            .into_par_iter()
            .map(|i| sim.path_thresholds(config, &checkpoints, &mut path_rng(config.seed, i)))
            .collect();
        let mut thresholds = vec![Vec::with_capacity(paths.len()); checkpoints.len()];
        let mut aborted_at = Vec::with_capacity(paths.len());
        for p in paths {
            for (k, th) in p.thresholds.into_iter().enumerate() {
                thresholds[k].push(th);
            }
            aborted_at.push(p.aborted_at);
        }
        Ok(RuinThresholds {
            checkpoints,
            thresholds,
            aborted_at,
        })
    }

    pub fn n_paths(&self) -> u64 {
        self.aborted_at.len() as u64
    }

    pub fn thresholds(&self, checkpoint: usize) -> &[f64] {
        &self.thresholds[checkpoint]
    }

    pub fn is_ruined(&self, path: usize, u: f64, checkpoint: usize) -> bool {
        u < self.thresholds[checkpoint][path]
    }

    pub fn estimate(&self, u: f64, checkpoint: usize) -> RuinEstimate {
        let horizon = self.checkpoints[checkpoint];
        let th = &self.thresholds[checkpoint];
        let mut ruined = 0;
        let mut aborted = 0;
        for (m, ab) in th.iter().zip(&self.aborted_at) {
            if u < *m {
                ruined += 1;
            } else if ab.is_some_and(|t| t <= horizon) {
                aborted += 1;
            }
        }
        RuinEstimate::from_counts(u, ruined, aborted, self.n_paths(), horizon)
    }

    pub fn estimates(&self, us: &[f64], checkpoint: usize) -> Vec<RuinEstimate> {
        us.iter().map(|&u| self.estimate(u, checkpoint)).collect()
    }

    /// Smallest capital whose estimated ruin probability is at most `psi`.
    pub fn capital_for(&self, psi: f64, checkpoint: usize) -> f64 {
        let mut th = self.thresholds[checkpoint].clone();
        th.sort_by(|a, b| b.total_cmp(a));
        let k = ((psi * th.len() as f64).floor() as usize).min(th.len() - 1);
        th[k].max(f64::MIN_POSITIVE)
    }
}

/// Estimates on a grid of capitals at `config.horizon`, sharing paths
/// across the grid. Falls back to independent per-capital runs when the
/// bridge correction is on.
pub fn estimate_ruin_grid(params: &ModelParams, us: &[f64], config: &SimConfig) -> Result<Vec<RuinEstimate>> {
    if let Some(bad) = us.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        return Err(Error::InvalidParams(format!("initial capital u = {bad} must be positive")));
    }
    if config.bridge_correction {
        return us.iter().map(|&u| estimate_ruin(params, u, config)).collect();
    }
    let th = RuinThresholds::simulate(params, config, &[config.horizon])?;
    Ok(th.estimates(us, 0))
}
