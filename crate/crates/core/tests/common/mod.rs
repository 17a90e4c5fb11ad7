//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use ruin_core::laws::JumpLaw;
use ruin_core::sim::ModelParams;

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value `Q_KS(λ)` with Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn exp_cdf(mu: f64, x: f64) -> f64 {
    1.0 - (-mu * x).exp()
}

pub fn erlang2_cdf(mu: f64, x: f64) -> f64 {
    1.0 - (-mu * x).exp() * (1.0 + mu * x)
}

pub fn hyperexp_cdf(weights: &[f64], rates: &[f64], x: f64) -> f64 {
    weights.iter().zip(rates).map(|(p, mu)| p * exp_cdf(*mu, x)).sum()
}

/// Euler–Maruyama on the reserve SDE with exponential jumps drawn straight
/// from `rand_distr`, checking for ruin after every step.
pub struct EulerOracle {
    pub a: f64,
    pub sigma: f64,
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl EulerOracle {
    /// Ruin before `horizon` from capital `u`, stepping by `dt`.
    pub fn ruined<R: Rng>(&self, u: f64, horizon: f64, dt: f64, rng: &mut R) -> bool {
        let claims = Exp::new(self.mu1).unwrap();
        let premiums = Exp::new(self.mu2).unwrap();
        let p_claim = 1.0 - (-self.lambda1 * dt).exp();
        let p_premium = 1.0 - (-self.lambda2 * dt).exp();
        let steps = (horizon / dt).round() as usize;
        let sqdt = dt.sqrt();
        let mut x = u;
        for _ in 0..steps {
            let z: f64 = StandardNormal.sample(rng);
            x += x * (self.a * dt + self.sigma * sqdt * z) + self.c * dt;
            if rng.random::<f64>() < p_premium {
                x += premiums.sample(rng);
            }
            if rng.random::<f64>() < p_claim {
                x -= claims.sample(rng);
            }
            if x < 0.0 {
                return true;
            }
            if x > 1e12 {
                return false;
            }
        }
        false
    }

    /// Fraction ruined and its binomial stderr over `n` paths.
    pub fn estimate(&self, u: f64, horizon: f64, dt: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hits = (0..n).filter(|_| self.ruined(u, horizon, dt, &mut rng)).count();
        let p = hits as f64 / n as f64;
        (p, (p * (1.0 - p) / n as f64).sqrt())
    }
}

/// A random valid law of order `n`: a hyperexponential with distinct rates
/// or, one time in three, an Erlang.
pub fn random_law<R: Rng>(n: usize, rng: &mut R) -> JumpLaw {
    if rng.random_range(0..3) == 0 {
        return JumpLaw::erlang(n, rng.random_range(0.5..4.0)).unwrap();
    }
    let mut rates: Vec<f64> = Vec::with_capacity(n);
    while rates.len() < n {
        let r: f64 = rng.random_range(0.5..4.0);
        if rates.iter().all(|q| (q - r).abs() > 0.2) {
            rates.push(r);
        }
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    JumpLaw::hyperexponential(&weights, &rates).unwrap()
}

/// Random parameters with both laws of order `n` and `2a/σ² − 1` kept away
/// from the integers.
pub fn random_params<R: Rng>(n: usize, rng: &mut R) -> ModelParams {
    let sigma: f64 = rng.random_range(0.1..0.6);
    let beta: f64 = rng.random_range(0.05..0.95);
    let a = 0.5 * (beta + 1.0) * sigma * sigma;
    ModelParams::new(
        a,
        sigma,
        rng.random_range(0.5..2.0),
        rng.random_range(0.2..2.0),
        rng.random_range(0.2..2.0),
        random_law(n, rng),
        random_law(n, rng),
    )
    .unwrap()
}

/// Product of two polynomials in ascending coefficients.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

pub fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}
