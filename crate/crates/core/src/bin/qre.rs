use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use qre::config::{ScenarioConfig, ScenarioKind};
use qre::experiment::{oracle_check, reduced_config, run_scenario, run_sweep_to};
use qre::scenario::validate;
use qre::QreError;

/// Open-system simulator for engineered dissipative environments.
#[derive(Debug, Parser)]
#[command(name = "qre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Time step override; the final time is kept.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Grid size override.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate one scenario and write its CSV and plot script.
    Run,
    /// Run the `[sweep]` section of the configuration.
    Sweep,
    /// Feasibility and step-size checks only.
    Validate,
    /// Compare the split-operator propagator with the dense RK4 oracle on a
    /// 32-point grid (all built-in families when no config is given).
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
}

fn load(cli: &Cli) -> Result<ScenarioConfig, QreError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| QreError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| QreError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ScenarioConfig::parse(&text)?;
    apply_overrides(cli, &mut config)?;
    Ok(config)
}

fn apply_overrides(cli: &Cli, config: &mut ScenarioConfig) -> Result<(), QreError> {
    if let Some(n) = cli.grid_n {
        config.override_grid_n(n);
    }
    if let Some(dt) = cli.dt {
        config.override_dt(dt)?;
    }
    Ok(())
}

fn out_dir(cli: &Cli, config: &ScenarioConfig) -> PathBuf {
    cli.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(config.output.dir.clone().unwrap_or_else(|| "out".into())))
}

fn execute(cli: &Cli) -> Result<(), QreError> {
    match &cli.command {
        Command::Run => {
            let config = load(cli)?;
            let run = run_scenario(&config, Some(&out_dir(cli, &config)))?;
            let last = run.output.series.last().expect("initial record");
            println!(
                "t = {:e}  <x> = {:e}  <p> = {:e}  purity = {:.6}  trace = {:.12}{}",
                last.t,
                last.mean_x,
                last.mean_p,
                last.purity,
                last.trace,
                last.transmission.map(|t| format!("  transmission = {t:.6}")).unwrap_or_default()
            );
            for f in &run.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep => {
            let config = load(cli)?;
            let (table, files) = run_sweep_to(&config, cli.workers, &out_dir(cli, &config))?;
            let ok = table.points.iter().filter(|p| p.status.code() == "ok").count();
            println!("{ok}/{} sweep points completed", table.points.len());
            for f in &files {
                println!("wrote {}", f.display());
            }
        }
        Command::Validate => {
            let config = load(cli)?;
            let report = validate(&config)?;
            for (k, v) in &report.lines {
                println!("{k}: {v}");
            }
        }
        Command::OracleCheck { steps, tolerance } => {
            let configs = match &cli.config {
                Some(_) => vec![load(cli)?],
                None => [
                    ScenarioKind::Tunneling,
                    ScenarioKind::Trapping,
                    ScenarioKind::EffectiveMass,
                    ScenarioKind::Relativistic,
                    ScenarioKind::Custom,
                ]
                .into_iter()
                .map(|k| {
                    let mut c = reduced_config(k);
                    apply_overrides(cli, &mut c).map(|_| c)
                })
                .collect::<Result<_, _>>()?,
            };
            let mut worst = 0.0_f64;
            for mut c in configs {
                if cli.grid_n.is_none() {
                    c.override_grid_n(32);
                }
                let r = oracle_check(&c, *steps)?;
                println!(
                    "{:<15} N = {} steps = {} dt = {:e} rk4 substeps = {} frobenius = {:.3e} min eig = {:.2e}",
                    r.scenario.as_str(),
                    r.n_points,
                    r.steps,
                    r.dt,
                    r.rk4_substeps,
                    r.frobenius,
                    r.min_eigenvalue_split
                );
                worst = worst.max(r.frobenius);
            }
            if worst > *tolerance {
                return Err(QreError::Guard {
                    step: *steps,
                    diagnostic: format!("oracle mismatch {worst:.3e} > {tolerance:e}"),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
