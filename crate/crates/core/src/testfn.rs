//! Smooth test functions with exact derivatives, used to check the reduction
//! identities away from the ruin probability itself.

use std::fmt;

pub trait TestFunction: Sync + fmt::Debug {
    /// `g(u), g′(u), …, g⁽ᵏ⁾(u)`.
    fn derivatives(&self, u: f64, k: usize) -> Vec<f64>;

    /// Exponential growth rate of the derivatives as `u → −∞`; zero for
    /// bounded functions. Integrals against a claim density need the density
    /// to decay faster than this.
    fn left_growth(&self) -> f64;

    fn value(&self, u: f64) -> f64 {
        self.derivatives(u, 0)[0]
    }
}

/// `g(u) = e^{−κu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    pub rate: f64,
}

impl TestFunction for Exponential {
    fn derivatives(&self, u: f64, k: usize) -> Vec<f64> {
        let mut d = Vec::with_capacity(k + 1);
        let mut v = (-self.rate * u).exp();
        for _ in 0..=k {
            d.push(v);
            v *= -self.rate;
        }
        d
    }

    fn left_growth(&self) -> f64 {
        self.rate.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero;

impl TestFunction for Zero {
    fn derivatives(&self, _u: f64, k: usize) -> Vec<f64> {
        vec![0.0; k + 1]
    }

    fn left_growth(&self) -> f64 {
        0.0
    }
}

/// `g(u) = (1 + u²)^{−β/2}`: bounded on the whole line with a power tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecay {
    pub beta: f64,
}

impl TestFunction for PowerDecay {
    fn derivatives(&self, u: f64, k: usize) -> Vec<f64> {
        // Taylor jet of h = w^p with w(ε) = 1 + (u + ε)², via
        // k·w₀·h_k = Σ_{j=1}^{k} ((p + 1)j − k)·w_j·h_{k−j}.
        let p = -0.5 * self.beta;
        let w = [1.0 + u * u, 2.0 * u, 1.0];
        let mut h = vec![w[0].powf(p)];
        for n in 1..=k {
            let mut acc = 0.0;
            for (j, wj) in w.iter().enumerate().take(n.min(2) + 1).skip(1) {
                acc += ((p + 1.0) * j as f64 - n as f64) * wj * h[n - j];
            }
            h.push(acc / (n as f64 * w[0]));
        }
        let mut fact = 1.0;
        h.iter()
            .enumerate()
            .map(|(n, c)| {
                if n > 0 {
                    fact *= n as f64;
                }
                c * fact
            })
            .collect()
    }

    fn left_growth(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_derivatives_alternate() {
        let d = Exponential { rate: 2.0 }.derivatives(0.0, 3);
        assert_eq!(d, vec![1.0, -2.0, 4.0, -8.0]);
    }

    #[test]
    fn power_decay_matches_closed_forms() {
        // β = −2 gives g = 1 + u², a quick polynomial check.
        let d = PowerDecay { beta: -2.0 }.derivatives(1.5, 4);
        let want = [1.0 + 2.25, 3.0, 2.0, 0.0, 0.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-13, "{d:?}");
        }
        // β = 2: g = 1/(1+u²), g′ = −2u/(1+u²)², g″ = (6u² − 2)/(1+u²)³.
        let u = 0.7f64;
        let w = 1.0 + u * u;
        let d = PowerDecay { beta: 2.0 }.derivatives(u, 2);
        assert!((d[1] + 2.0 * u / (w * w)).abs() < 1e-14);
        assert!((d[2] - (6.0 * u * u - 2.0) / (w * w * w)).abs() < 1e-14);
    }
}
