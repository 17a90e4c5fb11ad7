use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ruin_core::config::Scenario;
use ruin_core::laplace::scaled_wronskian;
use ruin_core::laws::LawSpec;
use ruin_core::pipeline::{self, csv_writer, RESIDUAL_WINDOW};
use ruin_core::sim::check_theorem_preconditions;
use ruin_core::tailfit::tail_fit;

#[derive(Parser)]
#[command(name = "ruin", version, about = "Ruin probability with risky investment and two-sided rational jumps")]
struct Cli {
    /// Scenario file (TOML with [model], [sim] and [u_grid] blocks).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for path simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate jump laws: the scenario's two laws, or presets given with --law.
    ValidateDensity {
        /// A preset such as "exp(2)" or "erlang(2, 1)"; repeatable.
        #[arg(long)]
        law: Vec<String>,
    },
    /// Build the reduced ODE; writes coefficients.csv and reduce_audit.txt.
    Reduce,
    /// Print the Laplace-domain coefficients, indicial roots and gate report.
    Indicial,
    /// Frobenius series at both exponents; writes gamma tables and the residual slope.
    Frobenius {
        #[arg(long, default_value_t = 20)]
        terms: usize,
    },
    /// Monte Carlo estimates on the u-grid; writes estimates.csv.
    Simulate,
    /// Fit the tail exponent to an estimates CSV.
    Tailfit {
        /// Estimates file (default: <out>/estimates.csv).
        #[arg(long)]
        estimates: Option<PathBuf>,
        /// Exponent to compare against (default: from the scenario).
        #[arg(long)]
        beta_predicted: Option<f64>,
    },
    /// Full pipeline: checks, simulation, tail fit, audit report.
    Run,
    /// Reduction identity and both propositions on an exponential test function.
    CheckIdentities {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 5.0])]
        points: Vec<f64>,
    },
}

fn load(cli: &Cli) -> Result<Scenario> {
    let path = cli.config.as_ref().context("--config is required for this subcommand")?;
    let mut s = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        s.sim.seed = seed;
    }
    Ok(s)
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Ok(true) when every invariant held.
fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::ValidateDensity { law } => {
            let specs: Vec<(String, LawSpec)> = if law.is_empty() {
                let s = load(cli)?;
                vec![("law1".into(), s.model.law1), ("law2".into(), s.model.law2)]
            } else {
                law.iter().map(|l| (l.clone(), LawSpec::Preset(l.clone()))).collect()
            };
            let mut ok = true;
            for (name, spec) in specs {
                let spec = spec.resolve()?;
                let report = spec.validate();
                println!("== {name} ==\n{report}\n");
                ok &= report.passed();
            }
            Ok(ok)
        }
        Command::Reduce => {
            let s = load(cli)?;
            let params = s.model.build()?;
            let red = pipeline::reduction_checks(&params, &s.checks.identity_points)?;
            ensure_out(&cli.out)?;
            let hash = s.hash();
            pipeline::write_coefficients(&cli.out.join("coefficients.csv"), &hash, &red.ode)?;
            let mut text = format!("config_sha256: {hash}\n\n{}", red.text);
            for f in &red.failures {
                text.push_str(&format!("\nFAIL: {f}"));
            }
            std::fs::write(cli.out.join("reduce_audit.txt"), &text)?;
            println!("{text}");
            Ok(red.failures.is_empty())
        }
        Command::Indicial => {
            let s = load(cli)?;
            let params = s.model.build()?;
            let exact = ruin_core::reduction::build_reduced_ode_exact(&params)?;
            let lap = pipeline::laplace_checks(&exact, s.checks.frobenius_terms)?;
            println!("{}", lap.text);
            println!("== theorem preconditions ==\n{}", check_theorem_preconditions(&params));
            Ok(lap.failures.is_empty())
        }
        Command::Frobenius { terms } => {
            let s = load(cli)?;
            let params = s.model.build()?;
            let exact = ruin_core::reduction::build_reduced_ode_exact(&params)?;
            let lap = pipeline::laplace_checks(&exact, *terms)?;
            if lap.series.len() != 2 {
                bail!("no Frobenius series: {}", lap.text.lines().last().unwrap_or(""));
            }
            ensure_out(&cli.out)?;
            let hash = s.hash();
            for (k, sol) in lap.series.iter().enumerate() {
                let path = cli.out.join(format!("frobenius_rho{}.csv", k + 1));
                pipeline::write_gamma(&path, &hash, sol)?;
                println!("rho{} = {}: wrote {}", k + 1, sol.rho, path.display());
            }
            let slope = lap.residual_slope.unwrap_or(f64::NAN);
            println!(
                "residual slope of the rho2 series (N = {terms}) on [{}, {}]: {slope:.4}",
                RESIDUAL_WINDOW.0, RESIDUAL_WINDOW.1
            );
            let mut w = csv_writer(&cli.out.join("wronskian.csv"), &hash)?;
            w.write_record(["s", "scaled_wronskian"])?;
            for e in 1..=8 {
                let s_val = 10f64.powi(-e);
                w.write_record([format!("{s_val:e}"), format!("{:e}", scaled_wronskian(&lap.series[0], &lap.series[1], s_val))])?;
            }
            w.flush()?;
            Ok(lap.failures.is_empty())
        }
        Command::Simulate => {
            let s = load(cli)?;
            let params = s.model.build()?;
            let us = s.u_grid.resolve(&params, &s.sim)?;
            let (est, checks) = pipeline::simulate_grid(&params, &s.sim, &us, s.checks.horizon_doubling)?;
            ensure_out(&cli.out)?;
            let path = cli.out.join("estimates.csv");
            pipeline::write_estimates(&path, &s.hash(), &est)?;
            println!("{:>12} {:>12} {:>12} {:>10}", "u", "psi_hat", "stderr", "censored");
            for e in &est {
                println!("{:>12.4} {:>12.6e} {:>12.3e} {:>10.4}", e.u, e.psi_hat, e.stderr, e.fraction_censored);
            }
            for c in checks.iter().filter(|c| !c.stable) {
                println!(
                    "warning: u = {}: psi_hat moves from {} to {} when the horizon doubles; raise the horizon",
                    c.u, c.psi_hat, c.psi_hat_doubled
                );
            }
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::Tailfit { estimates, beta_predicted } => {
            let path = estimates.clone().unwrap_or_else(|| cli.out.join("estimates.csv"));
            let est = pipeline::read_estimates(&path)?;
            let beta = match beta_predicted {
                Some(b) => *b,
                None => check_theorem_preconditions(&load(cli)?.model.build()?).beta,
            };
            let fit = tail_fit(&est, beta)?;
            println!("{fit}");
            Ok(true)
        }
        Command::Run => {
            let s = load(cli)?;
            let summary = pipeline::run_scenario(&s, &cli.out)?;
            if let Some(fit) = &summary.tail_fit {
                println!("{fit}");
            }
            for n in &summary.notes {
                println!("note: {n}");
            }
            for f in &summary.failures {
                println!("FAIL: {f}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            Ok(summary.success())
        }
        Command::CheckIdentities { points } => {
            let s = load(cli)?;
            let params = s.model.build()?;
            let red = pipeline::reduction_checks(&params, points)?;
            println!("{}", red.text);
            for f in &red.failures {
                println!("FAIL: {f}");
            }
            Ok(red.failures.is_empty())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
