use std::fs;
use std::path::Path;
use std::process::{Command, Output};

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
horizon = 20.0
substep = 0.1
n_paths = 2000
seed = 3

[u_grid]
values = [0.5, 1.0, 2.0, 4.0]
"#;

fn ruin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruin"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("running the binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn scenario(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.display().to_string()
}

#[test]
fn validate_density_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = ruin(dir.path(), &["validate-density", "--law", "exp(2)", "--law", "erlang(2, 1)"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("== exp(2) ==") && text.contains("== erlang(2, 1) =="));

    let out = ruin(dir.path(), &["validate-density", "--law", "erlang(0, 1)"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ruin(dir.path(), &["reduce"]).status.code(), Some(2));
    assert_eq!(ruin(dir.path(), &["reduce", "--config", "nowhere.toml"]).status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn reduce_writes_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path());
    let out = ruin(dir.path(), &["reduce", "--config", &cfg, "--out", "r"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = fs::read_to_string(dir.path().join("r/coefficients.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256: "));
    assert!(dir.path().join("r/reduce_audit.txt").exists());
}

#[test]
fn indicial_and_frobenius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path());
    let out = ruin(dir.path(), &["indicial", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let out = ruin(dir.path(), &["frobenius", "--config", &cfg, "--terms", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    for name in ["frobenius_rho1.csv", "frobenius_rho2.csv", "wronskian.csv"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
}

#[test]
fn simulate_then_tailfit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path());
    let out = ruin(dir.path(), &["simulate", "--config", &cfg, "--seed", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let est = dir.path().join("out/estimates.csv");
    assert!(est.exists());
    let out = ruin(dir.path(), &["tailfit", "--estimates", est.to_str().unwrap(), "--beta-predicted", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!stdout(&out).is_empty());
}

#[test]
fn seed_override_changes_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path());
    let read = |seed: &str| {
        let out = ruin(dir.path(), &["simulate", "--config", &cfg, "--seed", seed, "--out", seed]);
        assert_eq!(out.status.code(), Some(0));
        fs::read_to_string(dir.path().join(seed).join("estimates.csv")).unwrap()
    };
    let a = read("1");
    assert_eq!(a, read("1"));
    assert_ne!(a, read("2"));
}

#[test]
fn full_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path());
    let out = ruin(dir.path(), &["run", "--config", &cfg, "--threads", "2"]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let audit = fs::read_to_string(dir.path().join("out/audit.txt")).unwrap();
    assert!(audit.contains("config_sha256"));
    assert!(stdout(&out).contains("wrote"));
}

#[test]
fn check_identities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path());
    let out = ruin(dir.path(), &["check-identities", "--config", &cfg, "--points", "1,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}
