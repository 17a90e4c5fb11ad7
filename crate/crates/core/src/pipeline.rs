//! Scenario runner: structural checks, simulation, tail fit, and the files
//! they produce.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::laplace::{
    audit_printed_laplace, frobenius_series, indicial_roots, residual_slope, scaled_wronskian, FrobeniusSolution,
    LaplaceODE,
};
use crate::reduction::{
    audit_printed_formulas, build_reduced_ode, build_reduced_ode_exact, check_proposition,
    verify_identity_on_testfn, AuditReport, JumpSide, ModelCoefficients, ReducedODE,
};
use crate::scalar::{Rational, Scalar};
use crate::sim::{check_theorem_preconditions, GateReport, ModelParams, RuinEstimate, RuinThresholds, SimConfig};
use crate::tailfit::{tail_fit, TailFit};
use crate::testfn::Exponential;

/// Relative tolerance of the reduction identity on a test function.
pub const IDENTITY_CHECK_TOL: f64 = 1e-6;
/// Absolute tolerance (relative once values exceed 1) of the proposition checks.
pub const PROPOSITION_CHECK_TOL: f64 = 1e-7;
/// Window and minimum slope for the Frobenius residual diagnostic.
pub const RESIDUAL_WINDOW: (f64, f64) = (1e-3, 1e-1);

/// Opens a CSV file whose first line is a `#` comment with the config hash.
pub fn csv_writer(path: &Path, config_hash: &str) -> Result<csv::Writer<File>> {
    let mut file = File::create(path)?;
    writeln!(file, "# config_sha256: {config_hash}")?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_coefficients(path: &Path, hash: &str, ode: &ReducedODE<f64>) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["j", "a_j", "b_j", "c_j", "d_j", "g_j"])?;
    for (j, q) in ode.coeffs.iter().enumerate() {
        w.write_record([j.to_string(), fmt(q.a), fmt(q.b), fmt(q.c), fmt(q.d), fmt(q.g)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_laplace(path: &Path, hash: &str, lode: &LaplaceODE<f64>) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["i", "p_i", "l_i", "r_i"])?;
    let len = lode.p.coeffs().len().max(lode.l.coeffs().len()).max(lode.r.coeffs().len());
    for i in 0..len {
        w.write_record([i.to_string(), fmt(lode.p.coeff(i)), fmt(lode.l.coeff(i)), fmt(lode.r.coeff(i))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gamma(path: &Path, hash: &str, sol: &FrobeniusSolution<f64>) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["m", "gamma_m"])?;
    for (m, g) in sol.gamma.iter().enumerate() {
        w.write_record([m.to_string(), fmt(*g)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_estimates(path: &Path, hash: &str, estimates: &[RuinEstimate]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["u", "psi_hat", "stderr", "n_paths", "horizon", "fraction_censored"])?;
    for e in estimates {
        w.write_record([
            fmt(e.u),
            fmt(e.psi_hat),
            fmt(e.stderr),
            e.n_paths.to_string(),
            fmt(e.horizon),
            fmt(e.fraction_censored),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a file written by [`write_estimates`].
pub fn read_estimates(path: &Path) -> Result<Vec<RuinEstimate>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("bad estimates row {row:?}")))
        };
        out.push(RuinEstimate {
            u: field(0)?,
            psi_hat: field(1)?,
            stderr: field(2)?,
            n_paths: field(3)? as u64,
            horizon: field(4)?,
            fraction_censored: field(5)?,
            n_aborted: 0,
        });
    }
    Ok(out)
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Ruin estimates at `T` and `2T` for one capital.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonCheck {
    pub u: f64,
    pub psi_hat: f64,
    pub psi_hat_doubled: f64,
    pub stderr: f64,
    /// `|Ψ̂(2T) − Ψ̂(T)| < 2·stderr`.
    pub stable: bool,
}

/// Estimates on the grid at `sim.horizon`, plus the doubled-horizon
/// comparison when requested. One set of paths serves both.
pub fn simulate_grid(
    params: &ModelParams,
    sim: &SimConfig,
    us: &[f64],
    horizon_doubling: bool,
) -> Result<(Vec<RuinEstimate>, Vec<HorizonCheck>)> {
    if sim.bridge_correction {
        let est = crate::sim::estimate_ruin_grid(params, us, sim)?;
        return Ok((est, Vec::new()));
    }
    let checkpoints = if horizon_doubling {
        vec![sim.horizon, 2.0 * sim.horizon]
    } else {
        vec![sim.horizon]
    };
    let th = RuinThresholds::simulate(params, sim, &checkpoints)?;
    let est = th.estimates(us, 0);
    let checks = if horizon_doubling {
        est.iter()
            .zip(th.estimates(us, 1))
            .map(|(a, b)| HorizonCheck {
                u: a.u,
                psi_hat: a.psi_hat,
                psi_hat_doubled: b.psi_hat,
                stderr: a.stderr,
                stable: (b.psi_hat - a.psi_hat).abs() < 2.0 * a.stderr,
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((est, checks))
}

/// Reduced ODE with every structural and numerical check that applies.
pub struct ReductionOutcome {
    pub ode: ReducedODE<f64>,
    pub exact: ReducedODE<Rational>,
    pub audit: AuditReport,
    /// Assertion-level failures.
    pub failures: Vec<String>,
    pub text: String,
}

/// Builds the reduced ODE in both arithmetics, audits the closed forms, and
/// checks the identity and both propositions on an exponential test function.
pub fn reduction_checks(params: &ModelParams, points: &[f64]) -> Result<ReductionOutcome> {
    let ode = build_reduced_ode(params)?;
    let exact = build_reduced_ode_exact(params)?;
    let coeffs = ModelCoefficients::<Rational>::from_params(params);
    let mut audit = audit_printed_formulas(&coeffs, &exact)?;
    for (j, (e, f)) in exact.coeffs.iter().zip(&ode.coeffs).enumerate() {
        for (name, x, y) in [("a", &e.a, f.a), ("b", &e.b, f.b), ("c", &e.c, f.c)] {
            audit.compare(format!("{name}_{j} f64"), &x.to_f64(), &y, true);
        }
    }
    let mut failures: Vec<String> = audit
        .rows
        .iter()
        .filter(|r| r.asserted && !r.agree)
        .map(|r| format!("closed form disagrees for {}", r.quantity))
        .collect();
    let mut text = String::new();
    writeln!(text, "== reduced ODE (order {}) ==", ode.order()).ok();
    writeln!(text, "{audit}").ok();

    // e^{−κu} with κ below the claim decay rate keeps I₁ finite.
    let rate = (0.5 * params.law1.decay_rate()).min(1.0);
    let g = Exponential { rate };
    writeln!(text, "\n== identity checks with g(u) = exp(-{rate} u) ==").ok();
    let id = verify_identity_on_testfn(params, &ode, &g, points)?;
    for p in &id.points {
        let ok = p.rel_residual <= IDENTITY_CHECK_TOL;
        writeln!(
            text,
            "u = {:<6} direct = {:>22.15e} reduced = {:>22.15e} rel = {:.3e} {}",
            p.u,
            p.direct,
            p.reduced,
            p.rel_residual,
            if ok { "ok" } else { "FAIL" }
        )
        .ok();
        if !ok {
            failures.push(format!("reduction identity at u = {}: {:e}", p.u, p.rel_residual));
        }
    }
    for (law, side, label) in [
        (&params.law1, JumpSide::Claims, "claims"),
        (&params.law2, JumpSide::Premiums, "premiums"),
    ] {
        for &u in points {
            let c = check_proposition(law, side, &g, u)?;
            let ok = c.residual <= PROPOSITION_CHECK_TOL * c.lhs.abs().max(1.0);
            writeln!(
                text,
                "{label:<8} u = {:<6} operator = {:>22.15e} boundary sum = {:>22.15e} |diff| = {:.3e} {}",
                u,
                c.lhs,
                c.rhs,
                c.residual,
                if ok { "ok" } else { "FAIL" }
            )
            .ok();
            if !ok {
                failures.push(format!("{label} proposition at u = {u}: {:e}", c.residual));
            }
        }
    }
    Ok(ReductionOutcome {
        ode,
        exact,
        audit,
        failures,
        text,
    })
}

pub struct LaplaceOutcome {
    pub lode: LaplaceODE<f64>,
    pub roots: Option<(f64, f64)>,
    pub series: Vec<FrobeniusSolution<f64>>,
    pub residual_slope: Option<f64>,
    pub failures: Vec<String>,
    pub text: String,
}

/// Laplace-domain equation, indicial roots and Frobenius series (exact
/// arithmetic), with the residual and Wronskian diagnostics.
pub fn laplace_checks(exact: &ReducedODE<Rational>, terms: usize) -> Result<LaplaceOutcome> {
    let lode_exact = LaplaceODE::build(exact)?;
    let lode = lode_exact.to_f64();
    let audit = audit_printed_laplace(exact, &lode_exact);
    let mut failures: Vec<String> = audit
        .rows
        .iter()
        .filter(|r| r.asserted && !r.agree)
        .map(|r| format!("closed form disagrees for {}", r.quantity))
        .collect();
    let mut text = String::new();
    writeln!(text, "== Laplace-domain equation ==\n{lode}\n{audit}").ok();
    let mut out = LaplaceOutcome {
        lode,
        roots: None,
        series: Vec::new(),
        residual_slope: None,
        failures: Vec::new(),
        text: String::new(),
    };
    match indicial_roots(&out.lode) {
        Err(e) => {
            writeln!(text, "indicial roots: {e}").ok();
        }
        Ok((r1, r2)) => {
            writeln!(text, "indicial roots: rho1 = {r1}, rho2 = {r2}").ok();
            out.roots = Some((r1, r2));
            let (e1, e2) = lode_exact.exponents();
            for rho in [e1, e2] {
                let sol = frobenius_series(&lode_exact, &rho, terms)?;
                if rho == lode_exact.exponents().1 {
                    let q = sol.residual_poly(&lode_exact).to_f64();
                    let slope = residual_slope(rho.to_f64(), &q, RESIDUAL_WINDOW.0, RESIDUAL_WINDOW.1, 21);
                    writeln!(
                        text,
                        "residual slope of the rho2 series (N = {terms}) on [{}, {}]: {slope:.4}",
                        RESIDUAL_WINDOW.0, RESIDUAL_WINDOW.1
                    )
                    .ok();
                    if slope < terms as f64 - 2.0 {
                        failures.push(format!("Frobenius residual slope {slope} below {}", terms - 2));
                    }
                    out.residual_slope = Some(slope);
                }
                out.series.push(sol.to_f64());
            }
            let w0 = scaled_wronskian(&out.series[0], &out.series[1], 1e-8);
            writeln!(text, "scaled Wronskian near 0: {w0:.12} (expected rho2 - rho1 = {})", r2 - r1).ok();
            writeln!(text, "radius hint: {}", out.series[0].radius_hint).ok();
        }
    }
    out.failures = failures;
    out.text = text;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub gate: GateReport,
    pub beta_predicted: f64,
    pub u_grid: Vec<f64>,
    pub estimates: Vec<RuinEstimate>,
    pub horizon_checks: Vec<HorizonCheck>,
    pub tail_fit: Option<TailFit>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    /// No assertion-level invariant failed.
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs the whole pipeline and writes its outputs to `out_dir`.
///
/// Configuration and law errors are returned before anything is written.
/// Invariant failures are collected in [`RunSummary::failures`]; a failed
/// theorem gate is only noted and simulation still runs.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunSummary> {
    scenario.validate()?;
    let params = scenario.model.build()?;
    let hash = scenario.hash();
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let mut report = String::new();
    writeln!(report, "config_sha256: {hash}\n").ok();

    for (name, law) in [("law1", &params.law1), ("law2", &params.law2)] {
        writeln!(report, "== {name} ==\n{}\n", law.spec().validate()).ok();
    }

    let gate = check_theorem_preconditions(&params);
    writeln!(report, "== theorem preconditions ==\n{gate}\n").ok();
    if !gate.passed() {
        notes.push(format!("theorem preconditions not met: {}", gate.reasons().join("; ")));
    }

    if params.sigma > 0.0 {
        let red = reduction_checks(&params, &scenario.checks.identity_points)?;
        report.push_str(&red.text);
        report.push('\n');
        failures.extend(red.failures);
        let path = out_dir.join("coefficients.csv");
        write_coefficients(&path, &hash, &red.ode)?;
        files.push(path);
        match laplace_checks(&red.exact, scenario.checks.frobenius_terms) {
            Ok(lap) => {
                report.push_str(&lap.text);
                report.push('\n');
                failures.extend(lap.failures);
                let path = out_dir.join("laplace.csv");
                write_laplace(&path, &hash, &lap.lode)?;
                files.push(path);
                if let Some(sol) = lap.series.get(1) {
                    let path = out_dir.join("frobenius_rho2.csv");
                    write_gamma(&path, &hash, sol)?;
                    files.push(path);
                }
            }
            Err(e @ Error::Identity(_)) => failures.push(e.to_string()),
            Err(e) => notes.push(format!("Laplace analysis skipped: {e}")),
        }
    } else {
        notes.push("sigma = 0: reduction and Laplace analysis skipped".into());
    }

    let u_grid = scenario.u_grid.resolve(&params, &scenario.sim)?;
    let (estimates, horizon_checks) =
        simulate_grid(&params, &scenario.sim, &u_grid, scenario.checks.horizon_doubling)?;
    let path = out_dir.join("estimates.csv");
    write_estimates(&path, &hash, &estimates)?;
    files.push(path);
    let aborted: u64 = estimates.iter().map(|e| e.n_aborted).max().unwrap_or(0);
    if aborted > 0 {
        notes.push(format!("{aborted} paths hit the overflow guard and were counted as not ruined"));
    }
    if !horizon_checks.is_empty() {
        let path = out_dir.join("horizon_check.csv");
        let mut w = csv_writer(&path, &hash)?;
        w.write_record(["u", "psi_hat", "psi_hat_doubled_horizon", "stderr", "stable"])?;
        for h in &horizon_checks {
            w.write_record([fmt(h.u), fmt(h.psi_hat), fmt(h.psi_hat_doubled), fmt(h.stderr), h.stable.to_string()])?;
            if !h.stable {
                notes.push(format!(
                    "u = {}: doubling the horizon moved psi_hat from {} to {}; raise the horizon",
                    h.u, h.psi_hat, h.psi_hat_doubled
                ));
            }
        }
        w.flush()?;
        files.push(path);
    }

    let beta_predicted = gate.beta;
    writeln!(report, "== tail fit ==").ok();
    let fit = match tail_fit(&estimates, beta_predicted) {
        Ok(fit) => {
            writeln!(report, "{fit}").ok();
            Some(fit)
        }
        Err(e) => {
            writeln!(report, "{e}").ok();
            notes.push(format!("tail fit unavailable: {e}"));
            None
        }
    };

    writeln!(report, "\n== notes ==").ok();
    for n in &notes {
        writeln!(report, "- {n}").ok();
    }
    writeln!(report, "\n== failures ==").ok();
    for f in &failures {
        writeln!(report, "- {f}").ok();
    }
    writeln!(report, "\nstatus: {}", if failures.is_empty() { "PASS" } else { "FAIL" }).ok();
    let path = out_dir.join("audit.txt");
    std::fs::write(&path, report)?;
    files.push(path);

    Ok(RunSummary {
        config_hash: hash,
        gate,
        beta_predicted,
        u_grid,
        estimates,
        horizon_checks,
        tail_fit: fit,
        failures,
        notes,
        files,
    })
}
