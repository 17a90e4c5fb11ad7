//! Jump-size laws whose densities solve a constant-coefficient linear ODE
//!
//! ```text
//! α⁰ f + α¹ f′ + … + αⁿ f⁽ⁿ⁾ = 0,   f⁽ᵏ⁾(0) = fᵏ,  k < n
//! ```
//!
//! Such densities are exactly those with a proper rational Laplace transform.
//! Evaluation never factors the characteristic polynomial: the state
//! `(f, f′, …, f⁽ⁿ⁻¹⁾)` is propagated by the exponential of the companion
//! matrix, and the cdf by the same system augmented with an integrator.

pub mod presets;
mod sampler;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::quad::{self, Tolerance};

pub use presets::LawSpec;
pub use sampler::Sampler;

/// Relative tolerance of the normalization identity `Σ αⁱ⁺¹ fⁱ = α⁰`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Density values below `-NONNEG_TOL * max f` on the scan grid fail validation.
pub const NONNEG_TOL: f64 = 1e-10;
/// Points in the nonnegativity scan grid.
pub const SCAN_POINTS: usize = 2048;
/// The law is treated as supported on `[0, X_MAX_DECAYS / κ]`, κ the slowest decay rate.
pub const X_MAX_DECAYS: f64 = 50.0;

/// Raw description of one jump law: ODE coefficients `α⁰..αⁿ` and boundary
/// values `f⁰..fⁿ⁻¹`, both in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct RationalDensitySpec {
    ode_coeffs: Vec<f64>,
    boundary_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    order: usize,
    ode_coeffs: Vec<f64>,
    boundary_values: Vec<f64>,
}

impl TryFrom<RawSpec> for RationalDensitySpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = RationalDensitySpec::new(raw.ode_coeffs, raw.boundary_values)?;
        if spec.order() != raw.order {
            return Err(Error::InvalidLaw(format!(
                "order {} does not match {} ode coefficients",
                raw.order,
                spec.ode_coeffs.len()
            )));
        }
        Ok(spec)
    }
}

impl From<RationalDensitySpec> for RawSpec {
    fn from(spec: RationalDensitySpec) -> Self {
        RawSpec {
            order: spec.order(),
            ode_coeffs: spec.ode_coeffs,
            boundary_values: spec.boundary_values,
        }
    }
}

impl RationalDensitySpec {
    /// Checks only the shape (`n + 1` coefficients, `n` boundary values, `n ≥ 1`,
    /// all finite). The analytic invariants are checked by [`Self::validate`].
    pub fn new(ode_coeffs: Vec<f64>, boundary_values: Vec<f64>) -> Result<Self> {
        if ode_coeffs.len() < 2 {
            return Err(Error::InvalidLaw("order must be at least 1".into()));
        }
        if boundary_values.len() + 1 != ode_coeffs.len() {
            return Err(Error::InvalidLaw(format!(
                "order {} needs {} boundary values, got {}",
                ode_coeffs.len() - 1,
                ode_coeffs.len() - 1,
                boundary_values.len()
            )));
        }
        if ode_coeffs.iter().chain(&boundary_values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidLaw("non-finite coefficient".into()));
        }
        Ok(RationalDensitySpec {
            ode_coeffs,
            boundary_values,
        })
    }

    /// Builds the spec whose density has Laplace transform `num(s) / den(s)`.
    ///
    /// `den` supplies the ODE coefficients; the boundary values are the
    /// coefficients of the expansion of the transform at infinity,
    /// `f̂(s) = Σ f⁽ᵏ⁾(0) s⁻ᵏ⁻¹`.
    pub fn from_transform(num: &[f64], den: &[f64]) -> Result<Self> {
        let den = Poly::new(den.to_vec());
        let num = Poly::new(num.to_vec());
        let n = den.degree().unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidLaw("denominator must have positive degree".into()));
        }
        if num.degree().is_some_and(|d| d >= n) {
            return Err(Error::InvalidLaw("transform must be a proper rational function".into()));
        }
        let alpha = den.coeffs().to_vec();
        let lead = alpha[n];
        let mut f: Vec<f64> = Vec::with_capacity(n);
        for m in 0..n {
            let mut acc = num.coeff(n - 1 - m);
            for (k, fk) in f.iter().enumerate() {
                acc -= alpha[n - m + k] * fk;
            }
            f.push(acc / lead);
        }
        RationalDensitySpec::new(alpha, f)
    }

    pub fn order(&self) -> usize {
        self.ode_coeffs.len() - 1
    }

    pub fn ode_coeffs(&self) -> &[f64] {
        &self.ode_coeffs
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary_values
    }

    /// Characteristic polynomial `P(s) = Σ αʲ sʲ`.
    pub fn characteristic(&self) -> Poly<f64> {
        Poly::new(self.ode_coeffs.clone())
    }

    /// Numerator of the Laplace transform, `Σₖ αᵏ Σᵢ₌₁ᵏ sᵏ⁻ⁱ fⁱ⁻¹`.
    pub fn transform_numerator(&self) -> Poly<f64> {
        let n = self.order();
        let mut c = vec![0.0; n];
        for k in 1..=n {
            for i in 1..=k {
                c[k - i] += self.ode_coeffs[k] * self.boundary_values[i - 1];
            }
        }
        Poly::new(c)
    }

    /// `Σ αⁱ⁺¹ fⁱ`, which must equal `α⁰` for a unit-mass density.
    pub fn normalization_sum(&self) -> f64 {
        self.boundary_values
            .iter()
            .enumerate()
            .map(|(i, f)| self.ode_coeffs[i + 1] * f)
            .sum()
    }

    /// Evaluates every invariant and reports each one.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.order();
        let a0 = self.ode_coeffs[0];
        let an = self.ode_coeffs[n];

        report.push("leading coefficient nonzero", an != 0.0, format!("alpha^{n} = {an}"));
        report.push("constant coefficient nonzero", a0 != 0.0, format!("alpha^0 = {a0}"));
        if an == 0.0 {
            return report;
        }

        let sum = self.normalization_sum();
        let scale = a0.abs().max(1.0);
        report.push(
            "normalization",
            (sum - a0).abs() <= NORMALIZATION_TOL * scale,
            format!("sum alpha^(i+1) f^i = {sum}, alpha^0 = {a0}"),
        );

        let decay = match self.decay_rate() {
            Ok(rate) => {
                report.push("integrable", true, format!("slowest decay rate {rate}"));
                rate
            }
            Err(detail) => {
                report.push("integrable", false, detail);
                return report;
            }
        };

        let companion = Companion::new(self);
        let x_max = X_MAX_DECAYS / decay;
        let mut min_f = f64::INFINITY;
        let mut max_f = 0.0_f64;
        let mut argmin = 0.0;
        for x in scan_grid(x_max) {
            let f = companion.state(x)[1];
            if f < min_f {
                min_f = f;
                argmin = x;
            }
            max_f = max_f.max(f.abs());
        }
        report.push(
            "nonnegative",
            min_f >= -NONNEG_TOL * max_f.max(f64::MIN_POSITIVE),
            format!("min f = {min_f:e} at x = {argmin}, max |f| = {max_f:e}"),
        );
        report
    }

    /// Slowest exponential decay rate of the density, or why there is none.
    ///
    /// A root of `P` with nonnegative real part is tolerated only when the
    /// transform numerator also vanishes there, i.e. it does not enter `f`.
    fn decay_rate(&self) -> std::result::Result<f64, String> {
        let p = self.characteristic();
        let num = self.transform_numerator();
        let num_scale = num.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
        let mut rate = f64::INFINITY;
        for r in p.roots() {
            if r.re < 0.0 {
                rate = rate.min(-r.re);
                continue;
            }
            let z = num
                .coeffs()
                .iter()
                .rev()
                .fold(nalgebra::Complex::new(0.0, 0.0), |acc, &c| acc * r + c);
            let mag = r.norm().max(1.0).powi(num.degree().unwrap_or(0) as i32);
            if z.norm() > 1e-8 * num_scale * mag {
                return Err(format!("characteristic root {r} has nonnegative real part"));
            }
        }
        if rate.is_finite() {
            Ok(rate)
        } else {
            Err("no decaying mode".into())
        }
    }
}

/// Hybrid grid on `[0, x_max]`: half linear, half geometric toward 0.
fn scan_grid(x_max: f64) -> impl Iterator<Item = f64> {
    let half = SCAN_POINTS / 2;
    let linear = (0..half).map(move |i| x_max * i as f64 / (half - 1) as f64);
    let lo = x_max * 1e-8;
    let ratio = (x_max / lo).powf(1.0 / (half - 1) as f64);
    let geometric = (0..half).map(move |i| lo * ratio.powi(i as i32));
    linear.chain(geometric)
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        write!(f, "overall: {}", if self.passed() { "pass" } else { "FAIL" })
    }
}

/// Augmented companion system for the state `(F, f, f′, …, f⁽ⁿ⁻¹⁾)`.
#[derive(Debug, Clone)]
pub(crate) struct Companion {
    pub(crate) matrix: DMatrix<f64>,
    pub(crate) initial: DVector<f64>,
}

impl Companion {
    pub(crate) fn new(spec: &RationalDensitySpec) -> Self {
        let n = spec.order();
        let alpha = spec.ode_coeffs();
        let lead = alpha[n];
        let dim = n + 1;
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..n {
            m[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            m[(n, j + 1)] = -alpha[j] / lead;
        }
        let mut initial = DVector::zeros(dim);
        for (k, f) in spec.boundary_values().iter().enumerate() {
            initial[k + 1] = *f;
        }
        Companion { matrix: m, initial }
    }

    pub(crate) fn state(&self, x: f64) -> DVector<f64> {
        (&self.matrix * x).exp() * &self.initial
    }
}

/// A validated jump law.
#[derive(Debug, Clone)]
pub struct JumpLaw {
    spec: RationalDensitySpec,
    companion: Companion,
    decay_rate: f64,
}

impl JumpLaw {
    pub fn new(spec: RationalDensitySpec) -> Result<Self> {
        let report = spec.validate();
        if !report.passed() {
            let failed: Vec<String> = report
                .failures()
                .map(|c| format!("{} ({})", c.name, c.detail))
                .collect();
            return Err(Error::InvalidLaw(failed.join("; ")));
        }
        let decay_rate = spec.decay_rate().map_err(Error::InvalidLaw)?;
        let companion = Companion::new(&spec);
        Ok(JumpLaw {
            spec,
            companion,
            decay_rate,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        JumpLaw::new(presets::exponential(rate)?)
    }

    pub fn erlang(shape: usize, rate: f64) -> Result<Self> {
        JumpLaw::new(presets::erlang(shape, rate)?)
    }

    pub fn hyperexponential(weights: &[f64], rates: &[f64]) -> Result<Self> {
        JumpLaw::new(presets::hyperexponential(weights, rates)?)
    }

    pub fn spec(&self) -> &RationalDensitySpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.spec.order()
    }

    /// Slowest exponential decay rate κ of the density.
    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// Right end of the effective support, `50 / κ`.
    pub fn x_max(&self) -> f64 {
        X_MAX_DECAYS / self.decay_rate
    }

    pub fn density(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "density evaluated at negative x = {x}");
        self.companion.state(x)[1]
    }

    /// `(f, f′, …, f⁽ⁿ⁻¹⁾)` at `x`.
    pub fn derivatives(&self, x: f64) -> Vec<f64> {
        self.companion.state(x).iter().skip(1).copied().collect()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.companion.state(x)[0].clamp(0.0, 1.0)
    }

    pub fn laplace_transform(&self) -> RationalFunction {
        RationalFunction {
            numerator: self.spec.transform_numerator(),
            denominator: self.spec.characteristic(),
        }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }

    /// `E ξ^β′` for `β′ ∈ (0, 1)`.
    pub fn fractional_moment(&self, beta_prime: f64) -> Result<f64> {
        if !(beta_prime > 0.0 && beta_prime < 1.0) {
            return Err(Error::InvalidLaw(format!(
                "fractional moment order {beta_prime} outside (0, 1)"
            )));
        }
        let tol = Tolerance::new(1e-14, 1e-10);
        // x = t², so the x^β′ cusp at the origin becomes t^(2β′+1).
        let head = quad::integrate(
            |t| {
                let x = t * t;
                2.0 * t * x.powf(beta_prime) * self.density(x)
            },
            0.0,
            1.0,
            tol,
        )?;
        let x_end = self.x_max().max(2.0);
        let breaks = panel_breaks(1.0, x_end, 1.0 / self.decay_rate);
        let tail = quad::integrate_panels(|x| x.powf(beta_prime) * self.density(x), &breaks, tol)?;
        Ok(head.value + tail.value)
    }
}

/// Panel endpoints from `a` to `b` with width about `width`.
pub(crate) fn panel_breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    let panels = ((b - a) / width).ceil().clamp(1.0, 400.0) as usize;
    (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}

/// `numerator(s) / denominator(s)`, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    pub numerator: Poly<f64>,
    pub denominator: Poly<f64>,
}

impl RationalFunction {
    pub fn eval(&self, s: f64) -> f64 {
        self.numerator.eval_f64(s) / self.denominator.eval_f64(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_panels, Tolerance};

    fn erlang2() -> RationalDensitySpec {
        RationalDensitySpec::new(vec![1.0, 2.0, 1.0], vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn exponential_spec_validates() {
        let spec = RationalDensitySpec::new(vec![2.0, 1.0], vec![2.0]).unwrap();
        let report = spec.validate();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn wrong_mass_fails_normalization_only() {
        let spec = RationalDensitySpec::new(vec![2.0, 1.0], vec![1.0]).unwrap();
        let report = spec.validate();
        assert!(!report.passed());
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        assert_eq!(failed, ["normalization"]);
    }

    #[test]
    fn erlang_spec_satisfies_its_ode() {
        // f(x) = x e^{-x}: f'' + 2f' + f = 0, f(0) = 0, f'(0) = 1, unit mass.
        let spec = erlang2();
        assert!(spec.validate().passed());
        let f = |x: f64| x * (-x).exp();
        let d1 = |x: f64| (1.0 - x) * (-x).exp();
        let d2 = |x: f64| (x - 2.0) * (-x).exp();
        for x in [0.0, 0.3, 1.0, 4.0] {
            assert!((d2(x) + 2.0 * d1(x) + f(x)).abs() < 1e-15);
        }
        let mass = integrate_panels(f, &panel_breaks(0.0, 60.0, 1.0), Tolerance::default()).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        assert!(RationalDensitySpec::new(vec![1.0], vec![]).is_err());
        assert!(RationalDensitySpec::new(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(RationalDensitySpec::new(vec![f64::NAN, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn zero_leading_coefficient_is_rejected() {
        let spec = RationalDensitySpec::new(vec![1.0, 1.0, 0.0], vec![1.0, -1.0]).unwrap();
        let report = spec.validate();
        assert!(!report.check("leading coefficient nonzero").unwrap().passed);
    }

    #[test]
    fn growing_mode_is_rejected() {
        // f' - f = 0 with f(0) = -1 has unit "mass" by the identity but grows.
        let spec = RationalDensitySpec::new(vec![-1.0, 1.0], vec![-1.0]).unwrap();
        let report = spec.validate();
        assert!(!report.check("integrable").unwrap().passed, "{report}");
    }

    #[test]
    fn negative_density_is_rejected() {
        // f = 4e^{-2x} - e^{-x}: unit mass, negative for x > ln 4.
        let spec = presets::hyperexponential(&[-1.0, 2.0], &[1.0, 2.0]).unwrap();
        let report = spec.validate();
        assert!(!report.check("nonnegative").unwrap().passed, "{report}");
    }

    #[test]
    fn from_transform_recovers_erlang_boundary_values() {
        let spec = RationalDensitySpec::from_transform(&[1.0], &[1.0, 2.0, 1.0]).unwrap();
        assert_eq!(spec, erlang2());
    }

    #[test]
    fn scaled_coefficients_describe_the_same_law() {
        let a = JumpLaw::new(erlang2()).unwrap();
        let b = JumpLaw::new(RationalDensitySpec::new(vec![-3.0, -6.0, -3.0], vec![0.0, 1.0]).unwrap()).unwrap();
        for x in [0.1, 1.0, 7.0] {
            assert!((a.density(x) - b.density(x)).abs() < 1e-15);
        }
        assert!((b.laplace_transform().eval(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip_keeps_order_key() {
        let text = toml::to_string(&erlang2()).unwrap();
        assert!(text.contains("order = 2"));
        let back: RationalDensitySpec = toml::from_str(&text).unwrap();
        assert_eq!(back, erlang2());
        let bad = "order = 3\node_coeffs = [1.0, 2.0, 1.0]\nboundary_values = [0.0, 1.0]\n";
        assert!(toml::from_str::<RationalDensitySpec>(bad).is_err());
    }
}
