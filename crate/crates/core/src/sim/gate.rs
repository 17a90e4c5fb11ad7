//! Applicability check for the power-law tail result.

use std::fmt;

use super::ModelParams;

/// Points of the β′ search grid inside `(0, min(β, 1))`.
const WITNESS_GRID: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    /// `2a/σ² − 1`, infinite when σ = 0.
    pub beta: f64,
    pub sigma_positive: bool,
    pub beta_in_unit_interval: bool,
    /// `2a/σ² < 2`.
    pub drift_bound: bool,
    /// `(β′, E ξ₁^β′)` with the smallest moment found on the grid, if below 1.
    pub witness: Option<(f64, f64)>,
    /// Smallest moment seen on the grid, reported even when it is ≥ 1.
    pub best_moment: Option<(f64, f64)>,
}

impl GateReport {
    pub fn passed(&self) -> bool {
        self.sigma_positive && self.beta_in_unit_interval && self.drift_bound && self.witness.is_some()
    }

    pub fn reasons(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.sigma_positive {
            out.push("sigma must be positive".to_string());
        }
        if !self.beta_in_unit_interval {
            out.push(format!("beta = {} is outside (0, 1)", self.beta));
        }
        if !self.drift_bound {
            out.push(format!("2a/sigma^2 = {} is not below 2", self.beta + 1.0));
        }
        if self.sigma_positive && self.beta_in_unit_interval && self.witness.is_none() {
            out.push(match self.best_moment {
                Some((b, m)) => format!("no beta' with E xi^beta' < 1 (best: beta' = {b:.4}, moment = {m:.6})"),
                None => "fractional moments could not be computed".to_string(),
            });
        }
        out
    }
}

impl fmt::Display for GateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta = {}", self.beta)?;
        writeln!(f, "sigma > 0: {}", self.sigma_positive)?;
        writeln!(f, "beta in (0, 1): {}", self.beta_in_unit_interval)?;
        writeln!(f, "2a/sigma^2 < 2: {}", self.drift_bound)?;
        match self.witness {
            Some((b, m)) => writeln!(f, "moment witness: beta' = {b:.6}, E xi1^beta' = {m:.10}")?,
            None => writeln!(f, "moment witness: none")?,
        }
        write!(f, "gate: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Checks `β ∈ (0, 1)`, `2a/σ² < 2`, and searches a grid of
/// `β′ ∈ (0, min(β, 1))` for `E ξ₁^β′ < 1`.
pub fn check_theorem_preconditions(params: &ModelParams) -> GateReport {
    let sigma_positive = params.sigma > 0.0;
    let beta = if sigma_positive { params.beta() } else { f64::INFINITY };
    let beta_in_unit_interval = beta > 0.0 && beta < 1.0;
    let drift_bound = beta + 1.0 < 2.0;
    let mut best_moment: Option<(f64, f64)> = None;
    if sigma_positive && beta > 0.0 {
        let top = beta.min(1.0);
        for k in 1..=WITNESS_GRID {
            let b = top * k as f64 / (WITNESS_GRID + 1) as f64;
            match params.law1.fractional_moment(b) {
                Ok(m) => {
                    if best_moment.is_none_or(|(_, best)| m < best) {
                        best_moment = Some((b, m));
                    }
                }
                Err(e) => log::warn!("fractional moment at beta' = {b} failed: {e}"),
            }
        }
    }
    GateReport {
        beta,
        sigma_positive,
        beta_in_unit_interval,
        drift_bound,
        witness: best_moment.filter(|&(_, m)| m < 1.0),
        best_moment,
    }
}
