//! Named laws and their config syntax: `exp(mu)`, `erlang(k, mu)`,
//! `hyperexp([p1, p2, ...], [mu1, mu2, ...])`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::RationalDensitySpec;
use crate::error::{Error, Result};
use crate::poly::Poly;

pub fn exponential(rate: f64) -> Result<RationalDensitySpec> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidLaw(format!("exponential rate {rate} must be positive")));
    }
    RationalDensitySpec::new(vec![rate, 1.0], vec![rate])
}

/// Gamma law with integer shape, `f(x) = μᵏ xᵏ⁻¹ e^{-μx} / (k-1)!`.
pub fn erlang(shape: usize, rate: f64) -> Result<RationalDensitySpec> {
    if shape == 0 {
        return Err(Error::InvalidLaw("erlang shape must be at least 1".into()));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidLaw(format!("erlang rate {rate} must be positive")));
    }
    let linear = Poly::new(vec![rate, 1.0]);
    let den = (1..shape).fold(linear.clone(), |acc, _| &acc * &linear);
    RationalDensitySpec::from_transform(&[rate.powi(shape as i32)], den.coeffs())
}

/// Mixture `Σ pᵢ μᵢ e^{-μᵢ x}`.
pub fn hyperexponential(weights: &[f64], rates: &[f64]) -> Result<RationalDensitySpec> {
    if weights.is_empty() || weights.len() != rates.len() {
        return Err(Error::InvalidLaw(
            "hyperexp needs equally many weights and rates".into(),
        ));
    }
    if rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidLaw("hyperexp rates must be positive".into()));
    }
    let factors: Vec<Poly<f64>> = rates.iter().map(|&r| Poly::new(vec![r, 1.0])).collect();
    let product = |skip: Option<usize>| {
        factors
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .fold(Poly::new(vec![1.0]), |acc, (_, f)| &acc * f)
    };
    let den = product(None);
    let num = weights
        .iter()
        .zip(rates)
        .enumerate()
        .fold(Poly::zero(), |acc, (i, (&p, &r))| &acc + &product(Some(i)).scale(&(p * r)));
    RationalDensitySpec::from_transform(num.coeffs(), den.coeffs())
}

/// A law as written in a scenario config: a preset string or an explicit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Preset(String),
    Explicit(RationalDensitySpec),
}

impl LawSpec {
    pub fn resolve(&self) -> Result<RationalDensitySpec> {
        match self {
            LawSpec::Explicit(spec) => Ok(spec.clone()),
            LawSpec::Preset(text) => parse_preset(text),
        }
    }
}

impl fmt::Display for LawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawSpec::Preset(text) => f.write_str(text),
            LawSpec::Explicit(spec) => write!(
                f,
                "ode_coeffs={:?} boundary_values={:?}",
                spec.ode_coeffs(),
                spec.boundary_values()
            ),
        }
    }
}

fn parse_preset(text: &str) -> Result<RationalDensitySpec> {
    let bad = || Error::Config(format!("unrecognized law preset `{text}`"));
    let text = text.trim();
    let open = text.find('(').ok_or_else(bad)?;
    let inner = text
        .strip_suffix(')')
        .map(|s| &s[open + 1..])
        .ok_or_else(bad)?;
    let name = text[..open].trim().to_ascii_lowercase();
    let numbers = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| bad()))
            .collect()
    };
    match name.as_str() {
        "exp" => match numbers(inner)?.as_slice() {
            [rate] => exponential(*rate),
            _ => Err(bad()),
        },
        "erlang" => match numbers(inner)?.as_slice() {
            [k, rate] if k.fract() == 0.0 && *k >= 1.0 => erlang(*k as usize, *rate),
            _ => Err(bad()),
        },
        "hyperexp" => {
            let lists: Vec<&str> = inner
                .split(']')
                .map(|s| s.trim_start_matches([',', ' ']).trim_start_matches('['))
                .filter(|s| !s.trim().is_empty())
                .collect();
            match lists.as_slice() {
                [p, mu] => hyperexponential(&numbers(p)?, &numbers(mu)?),
                _ => Err(bad()),
            }
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_boundary_values() {
        // μ³x²e^{-μx}/2 has f(0) = f'(0) = 0 and f''(0) = μ³.
        let spec = erlang(3, 2.0).unwrap();
        assert_eq!(spec.ode_coeffs(), &[8.0, 12.0, 6.0, 1.0]);
        assert_eq!(spec.boundary_values(), &[0.0, 0.0, 8.0]);
    }

    #[test]
    fn hyperexp_boundary_values_match_derivatives() {
        let (p, mu) = ([0.3, 0.7], [1.0, 3.0]);
        let spec = hyperexponential(&p, &mu).unwrap();
        for k in 0..2 {
            let want: f64 = p
                .iter()
                .zip(&mu)
                .map(|(p, m)| p * m * (-m).powi(k as i32))
                .sum();
            assert!((spec.boundary_values()[k] - want).abs() < 1e-14);
        }
        assert!(spec.validate().passed());
    }

    #[test]
    fn parses_presets() {
        let parse = |s: &str| LawSpec::Preset(s.into()).resolve().unwrap();
        assert_eq!(parse("exp(2)"), exponential(2.0).unwrap());
        assert_eq!(parse(" Erlang(2, 1.5) "), erlang(2, 1.5).unwrap());
        assert_eq!(
            parse("hyperexp([0.3, 0.7], [1, 3])"),
            hyperexponential(&[0.3, 0.7], &[1.0, 3.0]).unwrap()
        );
        for bad in ["exp", "exp(1, 2)", "erlang(1.5, 1)", "gamma(2)", "hyperexp([1], [1], [1])"] {
            assert!(LawSpec::Preset(bad.into()).resolve().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_accepts_both_forms() {
        #[derive(Deserialize)]
        struct Wrap {
            a: LawSpec,
            b: LawSpec,
        }
        let w: Wrap = toml::from_str(
            "a = \"exp(1)\"\n[b]\norder = 1\node_coeffs = [2.0, 1.0]\nboundary_values = [2.0]\n",
        )
        .unwrap();
        assert_eq!(w.a.resolve().unwrap(), exponential(1.0).unwrap());
        assert_eq!(w.b.resolve().unwrap(), exponential(2.0).unwrap());
    }
}
