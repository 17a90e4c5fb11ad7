//! Reduction of the integro-differential equation for the ruin probability
//! to a linear ODE with coefficients quadratic in `u`.
//!
//! The equation is `L(Ψ) + λ₁I₁(Ψ) + λ₂I₂(Ψ) = 0` with
//! `L = (σ²/2)u²D² + (au + c)D − (λ₁ + λ₂)`. Applying `T = P₁(D)P₂*(D)`
//! removes both integrals: `P₁(D)I₁Ψ` and `P₂*(D)I₂Ψ` are finite combinations
//! of derivatives of Ψ (see [`proposition1_rhs`], [`proposition2_rhs`]).
//!
//! The coefficients are built mechanically: every term is kept as a table of
//! `u^p Ψ^{(j)}` coefficients and differentiated with the product rule. The
//! closed-form sums for `a_j, b_j, c_j, d_j, g_j` are evaluated separately by
//! [`audit_printed_formulas`] and compared.

use std::fmt;

use crate::error::{Error, Result};
use crate::laws::{JumpLaw, RationalDensitySpec};
use crate::quad::{self, Tolerance};
use crate::scalar::{lift, negligible, sign, Rational, Scalar};
use crate::sim::ModelParams;
use crate::testfn::TestFunction;

/// Relative tolerance for identities checked in floating point.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Model inputs lifted into a coefficient field.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCoefficients<T> {
    pub a: T,
    pub sigma_sq: T,
    pub c: T,
    pub lambda1: T,
    pub lambda2: T,
    pub alpha1: Vec<T>,
    pub f1: Vec<T>,
    pub alpha2: Vec<T>,
    pub f2: Vec<T>,
}

impl<T: Scalar> ModelCoefficients<T> {
    pub fn from_params(p: &ModelParams) -> Self {
        let sigma = T::from_f64(p.sigma);
        ModelCoefficients {
            a: T::from_f64(p.a),
            sigma_sq: sigma.clone() * sigma,
            c: T::from_f64(p.c),
            lambda1: T::from_f64(p.lambda1),
            lambda2: T::from_f64(p.lambda2),
            alpha1: lift(p.law1.spec().ode_coeffs()),
            f1: lift(p.law1.spec().boundary_values()),
            alpha2: lift(p.law2.spec().ode_coeffs()),
            f2: lift(p.law2.spec().boundary_values()),
        }
    }

    pub fn n1(&self) -> usize {
        self.alpha1.len() - 1
    }

    pub fn n2(&self) -> usize {
        self.alpha2.len() - 1
    }

    fn total_intensity(&self) -> T {
        self.lambda1.clone() + self.lambda2.clone()
    }
}

/// Coefficients `t_m = Σ_{j+k=m} α₁ʲ α₂ᵏ (−1)ᵏ` of `T = P₁(D)P₂*(D)`, for
/// `m = 0..=2n` with `n = max(n₁, n₂)` (the shorter operator is padded with
/// zero coefficients).
pub fn convolve_operators<T: Scalar>(alpha1: &[T], alpha2: &[T]) -> Vec<T> {
    let n = alpha1.len().max(alpha2.len()) - 1;
    let mut t = vec![T::zero(); 2 * n + 1];
    for (j, x) in alpha1.iter().enumerate() {
        for (k, y) in alpha2.iter().enumerate() {
            t[j + k] = t[j + k].clone() + x.clone() * y.clone() * sign::<T>(k);
        }
    }
    t
}

/// `Σ_{i=k}^{n−1} α^{i+1} f^{i−k}` for `0 ≤ k < n`.
pub fn boundary_sum<T: Scalar>(alpha: &[T], f: &[T], k: usize) -> Result<T> {
    let n = alpha.len() - 1;
    if k >= n {
        return Err(Error::OutOfRange { index: k, bound: n });
    }
    Ok((k..n).fold(T::zero(), |acc, i| acc + alpha[i + 1].clone() * f[i - k].clone()))
}

/// Coefficient of `Ψ^{(k)}` in `P₁(d/du)I₁(Ψ)`.
pub fn proposition1_rhs(spec: &RationalDensitySpec, k: usize) -> Result<f64> {
    boundary_sum(spec.ode_coeffs(), spec.boundary_values(), k)
}

/// Coefficient of `Ψ^{(k)}` in `P₂*(d/du)I₂(Ψ)`.
pub fn proposition2_rhs(spec: &RationalDensitySpec, k: usize) -> Result<f64> {
    Ok(sign::<f64>(k) * boundary_sum(spec.ode_coeffs(), spec.boundary_values(), k)?)
}

/// `Σ_j (c₀ + c₁u + c₂u²)_j Ψ^{(j)}`, stored as `terms[j] = [c₀, c₁, c₂]`.
#[derive(Debug, Clone)]
struct OperatorTerms<T> {
    terms: Vec<[T; 3]>,
}

impl<T: Scalar> OperatorTerms<T> {
    fn zero(len: usize) -> Self {
        OperatorTerms {
            terms: vec![[T::zero(), T::zero(), T::zero()]; len],
        }
    }

    fn add(&mut self, j: usize, power: usize, value: T) {
        if self.terms.len() <= j {
            self.terms.resize(j + 1, [T::zero(), T::zero(), T::zero()]);
        }
        let slot = &mut self.terms[j][power];
        *slot = slot.clone() + value;
    }

    /// `D(u^p Ψ^{(j)}) = p u^{p−1} Ψ^{(j)} + u^p Ψ^{(j+1)}`.
    fn differentiate(&self) -> Self {
        let mut out = OperatorTerms::zero(self.terms.len() + 1);
        for (j, row) in self.terms.iter().enumerate() {
            for (p, c) in row.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                out.add(j + 1, p, c.clone());
                if p > 0 {
                    out.add(j, p - 1, c.clone() * T::from_i64(p as i64));
                }
            }
        }
        out
    }

    /// `Σ_m ops[m] D^m` applied to `self`.
    fn apply(&self, ops: &[T]) -> Self {
        let mut out = OperatorTerms::zero(self.terms.len() + ops.len());
        let mut power = self.clone();
        for (m, w) in ops.iter().enumerate() {
            if m > 0 {
                power = power.differentiate();
            }
            if w.is_zero() {
                continue;
            }
            for (j, row) in power.terms.iter().enumerate() {
                for (p, c) in row.iter().enumerate() {
                    out.add(j, p, c.clone() * w.clone());
                }
            }
        }
        out
    }

    fn get(&self, j: usize, p: usize) -> T {
        self.terms.get(j).map_or_else(T::zero, |row| row[p].clone())
    }
}

/// One coefficient `q_j(u) = a u² + b u + c` of the reduced ODE, with
/// `c = d + g + drift`.
#[derive(Debug, Clone, PartialEq)]
pub struct UQuadraticPoly<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    /// Premium and total-intensity part of `c`.
    pub d: T,
    /// Part of `c` coming from the two integral terms.
    pub g: T,
    /// Part of `c` coming from the diffusion and investment drift.
    pub drift: T,
}

impl<T: Scalar> UQuadraticPoly<T> {
    pub fn to_f64(&self) -> UQuadraticPoly<f64> {
        UQuadraticPoly {
            a: self.a.to_f64(),
            b: self.b.to_f64(),
            c: self.c.to_f64(),
            d: self.d.to_f64(),
            g: self.g.to_f64(),
            drift: self.drift.to_f64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.c.is_zero()
    }
}

impl UQuadraticPoly<f64> {
    pub fn eval(&self, u: f64) -> f64 {
        (self.a * u + self.b) * u + self.c
    }
}

/// `Σ_{j=1}^{N} q_j(u) Ψ^{(j)}(u) = 0` with `N = n₁ + n₂ + 2` (`2n + 2` for
/// equal orders). `coeffs[0]` is kept so that `q₀ ≡ 0` stays checkable.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedODE<T> {
    pub n1: usize,
    pub n2: usize,
    pub coeffs: Vec<UQuadraticPoly<T>>,
    /// Coefficients of `T = P₁P₂*`.
    pub operator: Vec<T>,
    pub a: T,
    pub sigma_sq: T,
    pub c: T,
}

impl<T: Scalar> ReducedODE<T> {
    pub fn build(m: &ModelCoefficients<T>) -> Result<Self> {
        if m.sigma_sq.is_zero() {
            return Err(Error::InvalidParams("the reduction needs sigma > 0".into()));
        }
        let (n1, n2) = (m.n1(), m.n2());
        let order = n1 + n2 + 2;
        let t = convolve_operators(&m.alpha1, &m.alpha2);
        let half = T::one() / T::from_i64(2);

        let mut diffusion = OperatorTerms::zero(3);
        diffusion.add(2, 2, half * m.sigma_sq.clone());
        diffusion.add(1, 1, m.a.clone());
        let diffusion = diffusion.apply(&t);

        let mut premium = OperatorTerms::zero(2);
        premium.add(1, 0, m.c.clone());
        premium.add(0, 0, -m.total_intensity());
        let premium = premium.apply(&t);

        // P₁(D)I₁Ψ = Σ_k A_k Ψ^{(k)}, then P₂*(D); and symmetrically for I₂.
        let mut first = OperatorTerms::zero(n1);
        for k in 0..n1 {
            first.add(k, 0, m.lambda1.clone() * boundary_sum(&m.alpha1, &m.f1, k)?);
        }
        let adjoint2: Vec<T> = m
            .alpha2
            .iter()
            .enumerate()
            .map(|(k, x)| x.clone() * sign::<T>(k))
            .collect();
        let first = first.apply(&adjoint2);
        let mut second = OperatorTerms::zero(n2);
        for k in 0..n2 {
            second.add(k, 0, m.lambda2.clone() * sign::<T>(k) * boundary_sum(&m.alpha2, &m.f2, k)?);
        }
        let second = second.apply(&m.alpha1);

        let coeffs = (0..=order)
            .map(|j| {
                let drift = diffusion.get(j, 0);
                let d = premium.get(j, 0);
                let g = first.get(j, 0) + second.get(j, 0);
                UQuadraticPoly {
                    a: diffusion.get(j, 2),
                    b: diffusion.get(j, 1),
                    c: drift.clone() + d.clone() + g.clone(),
                    d,
                    g,
                    drift,
                }
            })
            .collect();
        let ode = ReducedODE {
            n1,
            n2,
            coeffs,
            operator: t,
            a: m.a.clone(),
            sigma_sq: m.sigma_sq.clone(),
            c: m.c.clone(),
        };
        ode.check_invariants()?;
        Ok(ode)
    }

    /// `N`, the highest derivative order.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `α₁^{n₁} α₂^{n₂} (−1)^{n₂}`, the top coefficient of `T`.
    pub fn top_operator_coefficient(&self) -> T {
        self.operator[self.n1 + self.n2].clone()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: String| Err(Error::Identity(what));
        let n = self.order();
        let q0 = &self.coeffs[0];
        let scale0 = q0.d.to_f64().abs() + q0.g.to_f64().abs();
        // c₀ is the normalization defect of the two laws, which validation
        // bounds only to rounding, so this check uses a tolerance even when
        // the arithmetic is exact.
        if !(q0.a.is_zero() && q0.b.is_zero() && q0.c.to_f64().abs() <= IDENTITY_TOL * scale0) {
            return fail(format!("q_0 must vanish, got c_0 = {:e}", q0.c.to_f64()));
        }
        let top = &self.coeffs[n];
        if !negligible(&top.b, 1.0, 0.0) || !negligible(&top.c, 1.0, 0.0) {
            return fail(format!("b_{n} = c_{n} = 0 violated"));
        }
        let t_top = self.top_operator_coefficient();
        let half = T::one() / T::from_i64(2);
        let want_a = half * self.sigma_sq.clone() * t_top.clone();
        if !negligible(&(top.a.clone() - want_a.clone()), want_a.to_f64().abs(), IDENTITY_TOL) || top.a.is_zero() {
            return fail(format!("a_{n} = (sigma^2/2) alpha1^n1 alpha2^n2 (-1)^n2 != 0 violated"));
        }
        let want_c = self.c.clone() * t_top;
        let below = &self.coeffs[n - 1].c;
        if !negligible(&(below.clone() - want_c.clone()), want_c.to_f64().abs(), IDENTITY_TOL) || below.is_zero() {
            return fail(format!("c_{} = c alpha1^n1 alpha2^n2 (-1)^n2 != 0 violated", n - 1));
        }
        if top.a.to_f64() < 0.0 {
            log::info!("leading coefficient a_{n} = {:e} is negative (the ODE is defined up to sign)", top.a.to_f64());
        }
        Ok(())
    }

    pub fn to_f64(&self) -> ReducedODE<f64> {
        ReducedODE {
            n1: self.n1,
            n2: self.n2,
            coeffs: self.coeffs.iter().map(UQuadraticPoly::to_f64).collect(),
            operator: self.operator.iter().map(Scalar::to_f64).collect(),
            a: self.a.to_f64(),
            sigma_sq: self.sigma_sq.to_f64(),
            c: self.c.to_f64(),
        }
    }
}

impl ReducedODE<f64> {
    /// `Σ_j q_j(u) g^{(j)}(u)` and `Σ_j |q_j(u) g^{(j)}(u)|`.
    pub fn apply(&self, u: f64, derivs: &[f64]) -> (f64, f64) {
        self.coeffs
            .iter()
            .zip(derivs)
            .fold((0.0, 0.0), |(s, m), (q, d)| {
                let term = q.eval(u) * d;
                (s + term, m + term.abs())
            })
    }
}

pub fn build_reduced_ode(params: &ModelParams) -> Result<ReducedODE<f64>> {
    ReducedODE::build(&ModelCoefficients::from_params(params))
}

/// Same construction in exact rational arithmetic.
pub fn build_reduced_ode_exact(params: &ModelParams) -> Result<ReducedODE<Rational>> {
    ReducedODE::build(&ModelCoefficients::from_params(params))
}

/// One comparison between a mechanically derived quantity and its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub quantity: String,
    pub mechanical: f64,
    pub closed_form: f64,
    pub agree: bool,
    /// Whether disagreement counts as a failure or is only reported.
    pub asserted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.agree || !r.asserted)
    }

    pub fn disagreements(&self) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(|r| !r.agree)
    }

    pub(crate) fn compare<T: Scalar>(&mut self, quantity: String, mechanical: &T, closed: &T, asserted: bool) {
        let scale = mechanical.to_f64().abs().max(closed.to_f64().abs()).max(1.0);
        let agree = negligible(&(mechanical.clone() - closed.clone()), scale, IDENTITY_TOL);
        self.rows.push(AuditRow {
            quantity,
            mechanical: mechanical.to_f64(),
            closed_form: closed.to_f64(),
            agree,
            asserted,
        });
    }

    pub fn extend(&mut self, other: AuditReport) {
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let status = match (r.agree, r.asserted) {
                (true, _) => "ok",
                (false, true) => "FAIL",
                (false, false) => "differs (reported only)",
            };
            writeln!(
                f,
                "{:<12} derived = {:>24.16e}  closed form = {:>24.16e}  {status}",
                r.quantity, r.mechanical, r.closed_form
            )?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "audit: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Evaluates the closed-form double sums for `a_j, b_j, c_j, d_j, g_j` over
/// `k, m ∈ 0..=n` (zero-padded coefficients) and compares them with `ode`.
/// Differences in `g_j` are reported but not asserted.
pub fn audit_printed_formulas<T: Scalar>(m: &ModelCoefficients<T>, ode: &ReducedODE<T>) -> Result<AuditReport> {
    let n = m.n1().max(m.n2());
    let pad = |v: &[T]| {
        let mut v = v.to_vec();
        v.resize(n + 1, T::zero());
        v
    };
    let (al1, al2) = (pad(&m.alpha1), pad(&m.alpha2));
    let (f1, f2) = (pad(&m.f1), pad(&m.f2));
    let half = T::one() / T::from_i64(2);
    let term = |k: usize, mm: usize| al1[k].clone() * al2[mm].clone() * sign::<T>(mm);
    // Σ over k + m = target, k, m ∈ 0..=n, of w(k + m)·α₁ᵏα₂ᵐ(−1)ᵐ.
    let pair_sum = |target: isize, w: &dyn Fn(usize) -> T| {
        let mut acc = T::zero();
        if target < 0 {
            return acc;
        }
        let target = target as usize;
        for k in 0..=n {
            if let Some(mm) = target.checked_sub(k).filter(|&mm| mm <= n) {
                acc = acc + w(k + mm) * term(k, mm);
            }
        }
        acc
    };
    let inner = |alpha: &[T], f: &[T], k: usize| -> T {
        (k..n).fold(T::zero(), |acc, i| acc + alpha[i + 1].clone() * f[i - k].clone())
    };

    let mut report = AuditReport::default();
    for (j, q) in ode.coeffs.iter().enumerate() {
        let ji = j as isize;
        let a = half.clone() * m.sigma_sq.clone() * pair_sum(ji - 2, &|_| T::one());
        let b = pair_sum(ji - 1, &|s| m.sigma_sq.clone() * T::from_i64(s as i64) + m.a.clone());
        let drift = pair_sum(ji, &|s| {
            let s_t = T::from_i64(s as i64);
            s_t.clone() * (half.clone() * m.sigma_sq.clone() * s_t + m.a.clone() - half.clone() * m.sigma_sq.clone())
        });
        let d = m.c.clone() * pair_sum(ji - 1, &|_| T::one()) - m.total_intensity() * pair_sum(ji, &|_| T::one());
        let mut g = T::zero();
        for k in 0..n {
            if let Some(mm) = j.checked_sub(k).filter(|&mm| mm <= n) {
                g = g + m.lambda1.clone() * al2[mm].clone() * sign::<T>(mm) * inner(&al1, &f1, k)
                    + m.lambda2.clone() * al1[mm].clone() * sign::<T>(k) * inner(&al2, &f2, k);
            }
        }
        let c = d.clone() + g.clone() + drift.clone();
        report.compare(format!("a_{j}"), &q.a, &a, true);
        report.compare(format!("b_{j}"), &q.b, &b, true);
        report.compare(format!("drift_{j}"), &q.drift, &drift, true);
        report.compare(format!("d_{j}"), &q.d, &d, true);
        report.compare(format!("g_{j}"), &q.g, &g, false);
        report.compare(format!("c_{j}"), &q.c, &c, false);
    }
    let top = &ode.coeffs[ode.order()].a;
    if top.to_f64() <= 0.0 {
        report.notes.push(format!(
            "a_{} = {:e} is not positive; the sign follows (-1)^n2 times the leading law coefficients",
            ode.order(),
            top.to_f64()
        ));
    }
    Ok(report)
}

/// Pointwise comparison of `T(Lg + λ₁I₁g + λ₂I₂g)(u)` with `Σ q_j(u)g^{(j)}(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityPoint {
    pub u: f64,
    /// Direct side: derivatives of `Lg` plus quadrature of the integrals.
    pub direct: f64,
    /// Reduced side: the ODE applied to `g`.
    pub reduced: f64,
    pub rel_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub points: Vec<IdentityPoint>,
}

impl IdentityReport {
    pub fn max_rel_residual(&self) -> f64 {
        self.points.iter().map(|p| p.rel_residual).fold(0.0, f64::max)
    }
}

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-15, 1e-12)
}

/// `∫₀^∞ h(y) f(y) dy`, truncated where `e^{−rate·y}` is negligible.
fn integrate_against(law: &JumpLaw, rate: f64, h: impl Fn(f64) -> f64) -> Result<f64> {
    let end = 50.0 / rate;
    let breaks = crate::laws::panel_breaks(0.0, end, 1.0 / rate);
    Ok(quad::integrate_panels(|y| h(y) * law.density(y), &breaks, quad_tol())?.value)
}

fn check_decay(law: &JumpLaw, g: &dyn TestFunction) -> Result<f64> {
    let rate = law.decay_rate() - g.left_growth();
    if rate <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "test function grows like e^({}|u|) to the left but the claim density only decays like e^(-{}y)",
            g.left_growth(),
            law.decay_rate()
        )));
    }
    Ok(rate)
}

/// Checks the reduction on a test function `g` at each `u`.
pub fn verify_identity_on_testfn(
    params: &ModelParams,
    ode: &ReducedODE<f64>,
    g: &dyn TestFunction,
    us: &[f64],
) -> Result<IdentityReport> {
    let rate1 = check_decay(&params.law1, g)?;
    let rate2 = params.law2.decay_rate();
    let t = &ode.operator;
    let top = t.len() - 1;
    let tg = |x: f64| -> f64 {
        let d = g.derivatives(x, top);
        t.iter().zip(&d).map(|(w, v)| w * v).sum()
    };
    let half_s2 = 0.5 * params.sigma * params.sigma;
    let lambda = params.total_intensity();
    let mut points = Vec::with_capacity(us.len());
    for &u in us {
        let d = g.derivatives(u, top + 2);
        // D^m(Lg) by the product rule on u² and u.
        let mut direct = 0.0;
        for (m, w) in t.iter().enumerate() {
            let mf = m as f64;
            let dm = half_s2 * (u * u * d[m + 2] + 2.0 * mf * u * d[m + 1] + mf * (mf - 1.0) * d[m])
                + params.a * (u * d[m + 1] + mf * d[m])
                + params.c * d[m + 1]
                - lambda * d[m];
            direct += w * dm;
        }
        direct += params.lambda1 * integrate_against(&params.law1, rate1, |y| tg(u - y))?;
        direct += params.lambda2 * integrate_against(&params.law2, rate2, |y| tg(u + y))?;
        let (reduced, scale) = ode.apply(u, &g.derivatives(u, ode.order()));
        let diff = (direct - reduced).abs();
        let rel_residual = if scale > 0.0 { diff / scale } else { diff };
        points.push(IdentityPoint {
            u,
            direct,
            reduced,
            rel_residual,
        });
    }
    Ok(IdentityReport { points })
}

/// Which integral term a proposition check concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSide {
    /// `I₁Ψ(u) = ∫ Ψ(u − y) f₁(y) dy` with `P₁(d/du)`.
    Claims,
    /// `I₂Ψ(u) = ∫ Ψ(u + y) f₂(y) dy` with `P₂*(d/du)`.
    Premiums,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropositionCheck {
    pub u: f64,
    /// Operator applied to the integral (quadrature plus finite differences).
    pub lhs: f64,
    /// Finite combination of derivatives of `g`.
    pub rhs: f64,
    pub residual: f64,
}

/// Weights of the central difference for the `order`-th derivative with
/// eighth-order accuracy, on offsets `−r..=r` (Fornberg's recursion).
fn central_weights(order: usize) -> Vec<f64> {
    let r = 4 + (order.max(1) - 1) / 2;
    let xs: Vec<f64> = (-(r as i64)..=r as i64).map(|i| i as f64).collect();
    let npts = xs.len();
    let mut c = vec![vec![0.0; order + 1]; npts];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    for i in 1..npts {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=order.min(i)).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=order.min(i)).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[order]).collect()
}

/// Finite-difference step for the proposition checks.
pub const FD_STEP: f64 = 0.1;

/// Checks one of the two propositions for `law` and test function `g` at `u`.
pub fn check_proposition(law: &JumpLaw, side: JumpSide, g: &dyn TestFunction, u: f64) -> Result<PropositionCheck> {
    let spec = law.spec();
    let alpha = spec.ode_coeffs();
    let n = spec.order();
    let integral = |v: f64| -> Result<f64> {
        match side {
            JumpSide::Claims => {
                let rate = check_decay(law, g)?;
                integrate_against(law, rate, |y| g.value(v - y))
            }
            JumpSide::Premiums => integrate_against(law, law.decay_rate(), |y| g.value(v + y)),
        }
    };
    let mut lhs = alpha[0] * integral(u)?;
    for (k, ak) in alpha.iter().enumerate().skip(1) {
        let w = central_weights(k);
        let r = (w.len() / 2) as i64;
        let mut dk = 0.0;
        for (i, wi) in w.iter().enumerate() {
            if *wi != 0.0 {
                dk += wi * integral(u + (i as i64 - r) as f64 * FD_STEP)?;
            }
        }
        dk /= FD_STEP.powi(k as i32);
        let s = if side == JumpSide::Premiums { sign::<f64>(k) } else { 1.0 };
        lhs += s * ak * dk;
    }
    let d = g.derivatives(u, n);
    let mut rhs = 0.0;
    for (k, dk) in d.iter().enumerate().take(n) {
        let coeff = match side {
            JumpSide::Claims => proposition1_rhs(spec, k)?,
            JumpSide::Premiums => proposition2_rhs(spec, k)?,
        };
        rhs += coeff * dk;
    }
    Ok(PropositionCheck {
        u,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
