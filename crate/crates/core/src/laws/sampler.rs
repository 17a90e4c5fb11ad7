//! Inverse-cdf sampling.
//!
//! The augmented companion state is tabulated once at equally spaced nodes on
//! `[0, x_max]`; between nodes the cdf is the Taylor polynomial of the state
//! propagator, truncated below 1e-17. A draw `U` is bracketed by the node
//! table (a guide array makes the search O(1)) and then polished by
//! safeguarded Newton on `F(x) - U` to 1e-12.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Open01};

use super::{Companion, JumpLaw};
use crate::error::{Error, Result};

/// Absolute tolerance on `|F(x) - U|`.
pub const CDF_TOL: f64 = 1e-12;
const MIN_NODES: usize = 1024;
const MAX_STEP_NORM: f64 = 0.25;
const TAYLOR_CUTOFF: f64 = 1e-17;

#[derive(Debug, Clone)]
pub struct Sampler {
    companion: Companion,
    step: f64,
    /// Taylor coefficients of `F(x_k + δ)` in δ, `terms` per node.
    taylor: Vec<f64>,
    terms: usize,
    /// `F(x_k)` at the nodes, nondecreasing.
    node_cdf: Vec<f64>,
    guide: Vec<u32>,
}

impl Sampler {
    pub(crate) fn new(law: &JumpLaw) -> Self {
        let companion = law.companion.clone();
        let m = &companion.matrix;
        let norm = m
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
            .max(1e-300);
        let x_top = law.x_max();
        let nodes = ((x_top * norm / MAX_STEP_NORM).ceil() as usize).max(MIN_NODES);
        let step = x_top / nodes as f64;

        let mut terms = 1;
        let mut bound = 1.0;
        while bound > TAYLOR_CUTOFF {
            bound *= norm * step / terms as f64;
            terms += 1;
        }

        let mut taylor = Vec::with_capacity((nodes + 1) * terms);
        let mut node_cdf = Vec::with_capacity(nodes + 1);
        let mut running_max = 0.0_f64;
        for k in 0..=nodes {
            let mut v: DVector<f64> = companion.state(k as f64 * step);
            // Rounding can make F dip by an ulp; the bracket search needs monotone nodes.
            running_max = running_max.max(v[0]);
            node_cdf.push(running_max);
            let mut fact = 1.0;
            for j in 0..terms {
                if j > 0 {
                    v = m * v;
                    fact *= j as f64;
                }
                taylor.push(v[0] / fact);
            }
        }

        let slots = nodes;
        let mut guide = Vec::with_capacity(slots);
        let mut k = 0usize;
        for i in 0..slots {
            let u = i as f64 / slots as f64;
            while k < nodes && node_cdf[k + 1] <= u {
                k += 1;
            }
            guide.push(k as u32);
        }

        Sampler {
            companion,
            step,
            taylor,
            terms,
            node_cdf,
            guide,
        }
    }

    fn nodes(&self) -> usize {
        self.node_cdf.len() - 1
    }

    /// Local cdf and density at `x_k + δ`.
    fn local(&self, k: usize, delta: f64) -> (f64, f64) {
        let c = &self.taylor[k * self.terms..(k + 1) * self.terms];
        let mut value = 0.0;
        let mut slope = 0.0;
        for j in (0..self.terms).rev() {
            slope = slope * delta + value;
            value = value * delta + c[j];
        }
        (value, slope)
    }

    /// Tabulated cdf, for cross-checks against the direct matrix exponential.
    pub fn tabulated_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = ((x / self.step) as usize).min(self.nodes());
        self.local(k, x - k as f64 * self.step).0
    }

    /// `F⁻¹(u)` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Bracket {
                target: u,
                detail: "probability outside (0, 1)".into(),
            });
        }
        let nodes = self.nodes();
        if u >= self.node_cdf[nodes] {
            return self.quantile_beyond_table(u);
        }
        let slot = ((u * self.guide.len() as f64) as usize).min(self.guide.len() - 1);
        let mut k = self.guide[slot] as usize;
        while k < nodes && self.node_cdf[k + 1] <= u {
            k += 1;
        }
        // Bracket: F(x_k) <= u < F(x_{k+1}).
        let (lo_f, hi_f) = (self.node_cdf[k], self.node_cdf[k + 1]);
        let (mut lo, mut hi) = (0.0, self.step);
        let mut delta = self.step * ((u - lo_f) / (hi_f - lo_f)).clamp(0.0, 1.0);
        for _ in 0..100 {
            let (value, slope) = self.local(k, delta);
            let g = value - u;
            if g.abs() <= CDF_TOL {
                return Ok(k as f64 * self.step + delta);
            }
            if g < 0.0 {
                lo = delta;
            } else {
                hi = delta;
            }
            let newton = delta - g / slope;
            delta = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * (k as f64 + 1.0) * self.step {
                return Ok(k as f64 * self.step + delta);
            }
        }
        Err(Error::Bracket {
            target: u,
            detail: format!("no convergence inside node {k}"),
        })
    }

    /// Far tail, `F(x_max) ≤ u`: bisection with the direct propagator.
    fn quantile_beyond_table(&self, u: f64) -> Result<f64> {
        let cdf = |x: f64| self.companion.state(x)[0];
        let mut lo = self.nodes() as f64 * self.step;
        let mut hi = 2.0 * lo;
        let mut expansions = 0;
        while cdf(hi) < u {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Bracket {
                    target: u,
                    detail: "cdf never reaches the target; density is not a probability law".into(),
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = cdf(mid) - u;
            if g.abs() <= CDF_TOL || hi - lo <= f64::EPSILON * hi {
                return Ok(mid);
            }
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        // Validated laws always bracket; a failure here is a broken invariant.
        self.quantile(u).expect("validated law failed to invert its cdf")
    }
}
