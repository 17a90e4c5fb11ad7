use std::fs;
use std::path::Path;

use ruin_core::config::Scenario;
use ruin_core::pipeline::{read_estimates, run_scenario, write_estimates};
use ruin_core::sim::RuinEstimate;

const SMALL: &str = r#"
[model]
a = 0.035
sigma = 0.25
c = 1.0
lambda1 = 1.0
lambda2 = 0.5
law1 = "erlang(2, 3)"
law2 = "exp(1)"

[sim]
horizon = 40.0
substep = 0.1
n_paths = 4000
seed = 9

[u_grid]
values = [0.5, 1.0, 2.0, 4.0]
"#;

fn header_hash(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap();
    first.strip_prefix("# config_sha256: ").unwrap_or_else(|| panic!("{}: {first}", path.display())).to_string()
}

#[test]
fn full_run_writes_hashed_outputs() {
    let s = Scenario::from_toml(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_scenario(&s, dir.path()).unwrap();
    assert!(summary.success(), "{:?}", summary.failures);
    assert!(summary.gate.passed());
    assert_eq!(summary.estimates.len(), 4);
    assert_eq!(summary.horizon_checks.len(), 4);
    for name in ["coefficients.csv", "laplace.csv", "frobenius_rho2.csv", "estimates.csv", "horizon_check.csv"] {
        let path = dir.path().join(name);
        assert_eq!(header_hash(&path), s.hash(), "{name}");
    }
    let audit = fs::read_to_string(dir.path().join("audit.txt")).unwrap();
    assert!(audit.contains(&s.hash()));
    assert!(audit.contains("tail fit"));
    let back = read_estimates(&dir.path().join("estimates.csv")).unwrap();
    assert_eq!(back.len(), 4);
    for (a, b) in back.iter().zip(&summary.estimates) {
        assert_eq!(a.u, b.u);
        assert_eq!(a.psi_hat, b.psi_hat);
    }
    // Ruin probability falls with capital.
    assert!(summary.estimates.windows(2).all(|w| w[0].psi_hat >= w[1].psi_hat));
}

#[test]
fn malformed_config_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(Scenario::from_toml(&SMALL.replace("n_paths = 4000", "n_paths = \"many\"")).is_err());
    assert!(Scenario::from_toml(&SMALL.replace("[u_grid]", "[ugrid]")).is_err());

    let mut bad = Scenario::from_toml(SMALL).unwrap();
    bad.sim.substep = 100.0;
    assert!(run_scenario(&bad, &out).is_err());
    assert!(!out.exists());

    let mut bad_law = Scenario::from_toml(SMALL).unwrap();
    bad_law.model.law1 = ruin_core::laws::LawSpec::Preset("erlang(0, 1)".into());
    assert!(run_scenario(&bad_law, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn failed_gate_still_simulates() {
    // 2a/σ² − 1 = 1.5 is outside (0, 1).
    let text = SMALL.replace("a = 0.035", "a = 0.078125");
    let s = Scenario::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_scenario(&s, dir.path()).unwrap();
    assert!(!summary.gate.passed());
    assert!(summary.notes.iter().any(|n| n.contains("theorem preconditions")));
    assert_eq!(summary.estimates.len(), 4);
    assert!(dir.path().join("estimates.csv").exists());
}

#[test]
fn zero_volatility_skips_the_analysis() {
    let text = SMALL.replace("sigma = 0.25", "sigma = 0.0").replace("a = 0.035", "a = 0.0");
    let s = Scenario::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_scenario(&s, dir.path()).unwrap();
    assert!(summary.notes.iter().any(|n| n.contains("sigma = 0")));
    assert!(!dir.path().join("coefficients.csv").exists());
    assert!(dir.path().join("estimates.csv").exists());
}

#[test]
fn pilot_grid_is_geometric_and_starts_near_target() {
    let text = SMALL.replace("values = [0.5, 1.0, 2.0, 4.0]", "points = 5\nratio = 3.0\nstart_psi = 0.25");
    let s = Scenario::from_toml(&text).unwrap();
    let params = s.model.build().unwrap();
    let us = s.u_grid.resolve(&params, &s.sim).unwrap();
    assert_eq!(us.len(), 5);
    for w in us.windows(2) {
        assert!((w[1] / w[0] - 3.0).abs() < 1e-12);
    }
    let est = ruin_core::sim::estimate_ruin(&params, us[0], &s.sim).unwrap();
    assert!((0.15..0.35).contains(&est.psi_hat), "psi at u0 = {}", est.psi_hat);
}

#[test]
fn estimates_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let est = vec![
        RuinEstimate::from_counts(1.5, 40, 0, 100, 10.0),
        RuinEstimate::from_counts(3.0, 7, 0, 100, 10.0),
    ];
    write_estimates(&path, "abc", &est).unwrap();
    assert_eq!(header_hash(&path), "abc");
    assert_eq!(read_estimates(&path).unwrap(), est);
}
