mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use ruin_core::error::Error;
use ruin_core::laplace::{
    audit_printed_laplace, build_laplace_ode, frobenius_series, indicial_roots, scaled_wronskian, LaplaceODE,
};
use ruin_core::laws::{JumpLaw, RationalDensitySpec};
use ruin_core::reduction::{build_reduced_ode, build_reduced_ode_exact, ReducedODE};
use ruin_core::sim::ModelParams;

fn exp_params(a: f64, sigma_sq: f64) -> ModelParams {
    let e = JumpLaw::exponential(1.0).unwrap();
    ModelParams::new(a, sigma_sq.sqrt(), 1.0, 1.0, 1.0, e.clone(), e).unwrap()
}

fn lode_for(p: &ModelParams) -> LaplaceODE<f64> {
    build_laplace_ode(&build_reduced_ode(p).unwrap()).unwrap()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Transform of `Σ_j q_j(u) G^{(j−1)}(u)` for `G = u^M e^{−u}`, in closed
/// form, with the sum of absolute term sizes.
fn transformed_reduced_side(ode: &ReducedODE<f64>, m: usize, s: f64) -> (f64, f64) {
    // Ascending coefficients of the polynomial factor of the whole sum.
    let mut poly = vec![0.0; m + 3];
    for (j, q) in ode.coeffs.iter().enumerate().skip(1) {
        let k = j - 1;
        for i in 0..=k.min(m) {
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            let w = binomial(k, i) * sign * factorial(m) / factorial(m - i);
            let d = m - i;
            poly[d] += w * q.c;
            poly[d + 1] += w * q.b;
            poly[d + 2] += w * q.a;
        }
    }
    poly.iter().enumerate().fold((0.0, 0.0), |(v, a), (d, c)| {
        let t = c * factorial(d) / (s + 1.0).powi(d as i32 + 1);
        (v + t, a + t.abs())
    })
}

#[test]
fn transform_of_reduced_operator_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for trial in 0..15 {
        let n = 1 + trial % 3;
        let p = random_params(n, &mut rng);
        let ode = build_reduced_ode(&p).unwrap();
        let lode = build_laplace_ode(&ode).unwrap();
        let m = ode.order();
        for s in [0.05, 0.3, 1.0, 2.0, 7.0] {
            let (want, scale) = transformed_reduced_side(&ode, m, s);
            let g0 = factorial(m) / (s + 1.0).powi(m as i32 + 1);
            let g1 = -(m as f64 + 1.0) * g0 / (s + 1.0);
            let g2 = (m as f64 + 1.0) * (m as f64 + 2.0) * g0 / (s + 1.0).powi(2);
            let got = lode.p.eval_f64(s) * g2 + lode.l.eval_f64(s) * g1 + lode.r.eval_f64(s) * g0;
            assert!((got - want).abs() <= 1e-10 * scale, "set {trial}, s = {s}: {got} vs {want}");
        }
    }
}

#[test]
fn structure_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..50 {
        let n = 1 + trial % 3;
        let p = random_params(n, &mut rng);
        let ode = build_reduced_ode(&p).unwrap();
        let lode = build_laplace_ode(&ode).unwrap();
        assert_eq!(lode.p.coeff(0), 0.0);
        assert!(lode.p.degree().unwrap() <= 2 * n + 1);
        assert_eq!(lode.p.coeff(1), ode.coeffs[2].a);
        let drift = 2.0 * p.a / (p.sigma * p.sigma);
        assert!(rel_close(lode.l0, 2.0 - drift, 1e-12));
        assert!(lode.r0.abs() <= 1e-12);
        // The top coefficient of r carries c_{N−1}.
        let top = ode.order() - 1;
        assert!(rel_close(lode.r.coeff(top - 1), ode.coeffs[top].c, 1e-12));
    }
}

#[test]
fn two_sided_exponential_has_cubic_p() {
    let lode = lode_for(&exp_params(0.03, 0.04));
    assert_eq!(lode.p.degree(), Some(3));
}

#[test]
fn indicial_root_examples() {
    let roots = indicial_roots(&lode_for(&exp_params(0.03, 0.04))).unwrap();
    assert!(roots.0.abs() < 1e-12 && (roots.1 - 0.5).abs() < 1e-12);
    let roots = indicial_roots(&lode_for(&exp_params(0.035, 0.05))).unwrap();
    assert!((roots.1 - 0.4).abs() < 1e-12);
    assert!(matches!(
        indicial_roots(&lode_for(&exp_params(0.02, 0.04))),
        Err(Error::Resonance { .. })
    ));
    // 2a/σ² ≥ 2 is outside the supported range.
    assert!(indicial_roots(&lode_for(&exp_params(0.05, 0.04))).is_err());
}

#[test]
fn roots_invariant_under_rescaled_law_operator() {
    let base = JumpLaw::hyperexponential(&[0.4, 0.6], &[1.0, 2.5]).unwrap();
    let other = JumpLaw::erlang(2, 1.0).unwrap();
    let reference = indicial_roots(&lode_for(
        &ModelParams::new(0.03, 0.2, 1.0, 1.0, 1.0, base.clone(), other.clone()).unwrap(),
    ))
    .unwrap();
    for k in [3.0, -2.0, 0.1] {
        let alpha: Vec<f64> = base.spec().ode_coeffs().iter().map(|x| k * x).collect();
        let spec = RationalDensitySpec::new(alpha, base.spec().boundary_values().to_vec()).unwrap();
        let scaled = JumpLaw::new(spec).unwrap();
        for (l1, l2) in [(scaled.clone(), other.clone()), (other.clone(), scaled.clone())] {
            let p = ModelParams::new(0.03, 0.2, 1.0, 1.0, 1.0, l1, l2).unwrap();
            let roots = indicial_roots(&lode_for(&p)).unwrap();
            assert!((roots.0 - reference.0).abs() < 1e-12 && (roots.1 - reference.1).abs() < 1e-12);
        }
    }
}

#[test]
fn series_solutions_and_wronskian() {
    let exact = build_reduced_ode_exact(&exp_params(0.035, 0.05)).unwrap();
    let lode = LaplaceODE::build(&exact).unwrap();
    let (r1, r2) = lode.exponents();
    let s1 = frobenius_series(&lode, &r1, 20).unwrap().to_f64();
    let s2 = frobenius_series(&lode, &r2, 20).unwrap().to_f64();
    assert_eq!(s1.gamma[0], 1.0);
    assert_eq!(s2.gamma[0], 1.0);
    assert_eq!(s1.terms(), 20);
    let want = s2.rho - s1.rho;
    assert!((want - 0.4).abs() < 1e-12);
    let w = scaled_wronskian(&s1, &s2, 1e-7);
    assert!((w - want).abs() < 1e-5, "scaled Wronskian {w}");
    // The scaled Wronskian is analytic, so it moves smoothly away from 0.
    let w_far = scaled_wronskian(&s1, &s2, 1e-2);
    assert!(w_far.is_finite() && w_far != 0.0);
    assert!(frobenius_series(&lode, &r2, 5).is_err());
}

#[test]
fn closed_form_laplace_coefficients_audit() {
    let exact = build_reduced_ode_exact(&exp_params(0.03, 0.04)).unwrap();
    let lode = LaplaceODE::build(&exact).unwrap();
    let report = audit_printed_laplace(&exact, &lode);
    // The l coefficients are asserted; the r coefficients are only reported.
    assert!(report.passed(), "{report}");
    assert!(report.rows.iter().filter(|r| r.quantity.starts_with("b~")).all(|r| r.agree));
    if report.disagreements().any(|r| r.quantity.starts_with("c~")) {
        assert!(!report.notes.is_empty());
    }
}
