//! Power-law fit `log Ψ̂ = log C − β log u` over a capital grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::RuinEstimate;

/// Points need `psi_hat ≥ NOISE_FLOOR · stderr` to enter the fit.
pub const NOISE_FLOOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub beta_hat: f64,
    pub beta_stderr: f64,
    pub log_c_hat: f64,
    pub r_squared: f64,
    pub u_used: Vec<f64>,
    pub beta_predicted: f64,
}

impl TailFit {
    /// Deviation from the predicted exponent in units of the fit stderr.
    pub fn z_score(&self) -> f64 {
        (self.beta_hat - self.beta_predicted) / self.beta_stderr
    }
}

impl fmt::Display for TailFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta_hat = {:.6} +/- {:.6}", self.beta_hat, self.beta_stderr)?;
        writeln!(f, "beta_predicted = {:.6}", self.beta_predicted)?;
        writeln!(f, "log_C_hat = {:.6}", self.log_c_hat)?;
        writeln!(f, "r_squared = {:.6}", self.r_squared)?;
        write!(f, "u_used = {:?}", self.u_used)
    }
}

/// Weighted least squares with delta-method weights `(psi_hat / stderr)²`.
/// Points under the noise floor are dropped; at least three must remain.
pub fn tail_fit(estimates: &[RuinEstimate], beta_predicted: f64) -> Result<TailFit> {
    let used: Vec<&RuinEstimate> = estimates
        .iter()
        .filter(|e| e.u > 0.0 && e.psi_hat > 0.0 && e.psi_hat >= NOISE_FLOOR * e.stderr)
        .collect();
    if used.len() < 3 {
        return Err(Error::TooFewPoints(used.len()));
    }
    let pts: Vec<(f64, f64, f64)> = used
        .iter()
        .map(|e| {
            // Zero stderr (all paths ruined) would give infinite weight.
            let rel = (e.stderr / e.psi_hat).max(1e-300);
            (e.u.ln(), e.psi_hat.ln(), 1.0 / (rel * rel))
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar) * (p.1 - ybar)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParams("tail fit needs at least two distinct u values".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| p.2 * (p.1 - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(TailFit {
        beta_hat: -slope,
        beta_stderr: (1.0 / sxx).sqrt(),
        log_c_hat: intercept,
        r_squared,
        u_used: used.iter().map(|e| e.u).collect(),
        beta_predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(u: f64, psi: f64, stderr: f64) -> RuinEstimate {
        RuinEstimate {
            u,
            psi_hat: psi,
            stderr,
            n_paths: 1000,
            horizon: 1.0,
            fraction_censored: 1.0 - psi,
            n_aborted: 0,
        }
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [4.0f64, 16.0, 64.0].iter().map(|&u| est(u, 2.0 * u.powf(-0.5), 1e-9)).collect();
        let fit = tail_fit(&pts, 0.5).unwrap();
        assert!((fit.beta_hat - 0.5).abs() < 1e-9);
        assert!((fit.log_c_hat - 2f64.ln()).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_gives_zero_exponent() {
        let pts: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&u| est(u, 0.3, 0.01)).collect();
        assert!(tail_fit(&pts, 0.5).unwrap().beta_hat.abs() < 1e-12);
    }

    #[test]
    fn noise_floor_drops_points() {
        let pts = vec![est(1.0, 0.5, 0.01), est(2.0, 0.3, 0.01), est(4.0, 0.001, 0.001)];
        assert!(matches!(tail_fit(&pts, 0.5), Err(Error::TooFewPoints(2))));
    }
}
