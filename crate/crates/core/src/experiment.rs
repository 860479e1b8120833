//! Single runs with exported files, jet-momentum sweeps and the small-grid
//! cross-check against the dense oracle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::config::{barrier_max_slope, ScenarioConfig, ScenarioKind, SweepParameter};
use crate::error::{QreError, Result};
use crate::export::{emit_outputs, header, sweep_plot_script, write_file};
use crate::oracle::{dense_from_parts, rk4_evolve, RK4_STABILITY_LIMIT};
use crate::propagator::Stepper;
use crate::scenario::{sample_potential, with_jets, RunOutput, Scenario};
use crate::synthesis::jet_feasibility_bound;
use crate::grid::PhaseGrid;

/// Result of [`run_scenario`] plus the files written.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub output: RunOutput,
    pub files: Vec<PathBuf>,
}

/// Builds, propagates and (when `out_dir` is given) exports one scenario.
pub fn run_scenario(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioRun> {
    let scenario = Scenario::build(config)?;
    let output = scenario.run()?;
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let stem = scenario.config.output.stem.clone().unwrap_or_else(|| scenario.kind.as_str().into());
        let (csv, gp) = emit_outputs(&output.series, scenario.kind, &scenario.config.to_toml(), dir, &stem)?;
        info!("wrote {} and {}", csv.display(), gp.display());
        files.push(csv);
        files.push(gp);
    }
    Ok(ScenarioRun { output, files })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Infeasible(String),
    Guard(String),
    Failed(String),
}

impl PointStatus {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Infeasible(_) => "infeasible",
            Self::Guard(_) => "guard",
            Self::Failed(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Swept value as written in the configuration.
    pub value: f64,
    /// Column-set label: `C p0` (fixed-`C p0` mode) or `C` (fixed-`C` mode).
    pub set: f64,
    pub p0: f64,
    pub coupling: f64,
    pub status: PointStatus,
    pub transmission: Option<f64>,
    pub purity: Option<f64>,
    pub feasibility_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub fixed_cp0: bool,
    pub values: Vec<f64>,
    pub sets: Vec<f64>,
    /// Ordered by set, then by value.
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn point(&self, set: usize, value: usize) -> &SweepPoint {
        &self.points[set * self.values.len() + value]
    }

    fn set_label(&self, set: f64) -> String {
        if self.fixed_cp0 {
            format!("cp0={set:e}")
        } else {
            format!("C={set:e}")
        }
    }

    fn value_column(&self) -> &'static str {
        match self.parameter {
            SweepParameter::P0 => "p0",
            SweepParameter::P0Fraction => "p0_fraction",
        }
    }

    /// Summary CSV: one row per swept value, one column set per `C p0`.
    pub fn to_csv(&self, metadata: &BTreeMap<String, String>, config_toml: &str) -> String {
        let mut out = header(metadata, config_toml);
        for p in &self.points {
            if let PointStatus::Infeasible(m) | PointStatus::Guard(m) | PointStatus::Failed(m) = &p.status {
                let _ = writeln!(out, "# point {}={:e} {}: {m}", self.value_column(), p.value, self.set_label(p.set));
            }
        }
        let mut cols = vec![self.value_column().to_string()];
        for &s in &self.sets {
            let l = self.set_label(s);
            for q in ["p0", "coupling", "status", "transmission", "purity", "margin"] {
                cols.push(format!("{q}[{l}]"));
            }
        }
        out.push_str(&cols.join(","));
        out.push('\n');
        let f = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        for (vi, &v) in self.values.iter().enumerate() {
            let mut row = vec![format!("{v:e}")];
            for si in 0..self.sets.len() {
                let p = self.point(si, vi);
                row.push(format!("{:e}", p.p0));
                row.push(format!("{:e}", p.coupling));
                row.push(p.status.code().to_string());
                row.push(f(p.transmission));
                row.push(f(p.purity));
                row.push(f(p.feasibility_margin));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn labels(&self) -> Vec<String> {
        self.sets.iter().map(|&s| self.set_label(s)).collect()
    }
}

/// `max |U'|` of the potential the jets act against, on the configured grid.
fn jet_slope(config: &ScenarioConfig) -> Result<f64> {
    let g = &config.grid;
    let grid = PhaseGrid::new(
        g.n_points.unwrap_or(0),
        g.x_min.unwrap_or(0.0),
        g.x_max.unwrap_or(0.0),
    )?;
    let sampled = sample_potential(config, &grid, config.particle.mass.unwrap_or(1.0));
    let slope = sampled.max_abs_derivative();
    if config.kind() == ScenarioKind::Tunneling {
        // the sampled maximum never exceeds the analytic one
        Ok(slope.max(barrier_max_slope(config.potential.k0.unwrap_or(0.0))))
    } else {
        Ok(slope)
    }
}

fn classify(e: QreError) -> PointStatus {
    match e {
        QreError::Infeasible(m) => PointStatus::Infeasible(m),
        e @ (QreError::Guard { .. } | QreError::StepSize(_)) => PointStatus::Guard(e.to_string()),
        e => PointStatus::Failed(e.to_string()),
    }
}

fn run_point(config: &ScenarioConfig, value: f64, set: f64, p0: f64, coupling: f64) -> SweepPoint {
    let mut point = SweepPoint {
        value,
        set,
        p0,
        coupling,
        status: PointStatus::Ok,
        transmission: None,
        purity: None,
        feasibility_margin: None,
    };
    let cfg = with_jets(config, p0, coupling);
    let result = Scenario::build(&cfg).and_then(|sc| {
        let margin = sc.jets.as_ref().map(|j| j.feasibility_margin);
        sc.run().map(|out| (margin, out))
    });
    match result {
        Ok((margin, out)) => {
            let last = out.series.last().expect("series holds the initial record");
            point.transmission = last.transmission;
            point.purity = Some(last.purity);
            point.feasibility_margin = margin;
        }
        Err(e) => point.status = classify(e),
    }
    point
}

/// Runs every sweep point on a pool of `workers` threads. Results do not
/// depend on the number of workers.
pub fn run_sweep(config: &ScenarioConfig, workers: usize) -> Result<SweepTable> {
    let config = config.clone().normalize()?;
    let sweep = config
        .sweep
        .clone()
        .ok_or_else(|| QreError::Config("no [sweep] section".into()))?;
    let slope = jet_slope(&config)?;
    let sets = if sweep.fixed_cp0 {
        config.sweep_cp0_values()
    } else {
        vec![config
            .environment
            .coupling
            .ok_or_else(|| QreError::MissingFields(vec!["environment.coupling".into()]))?]
    };
    if sets.is_empty() {
        return Err(QreError::MissingFields(vec!["sweep.cp0_values (or environment.cp0)".into()]));
    }
    let mut jobs = Vec::new();
    for &set in &sets {
        for &v in &sweep.values {
            let p0 = match sweep.parameter {
                SweepParameter::P0 => v,
                SweepParameter::P0Fraction => v * jet_feasibility_bound(set, slope),
            };
            let coupling = if sweep.fixed_cp0 { set / p0 } else { set };
            jobs.push((v, set, p0, coupling));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| QreError::Config(format!("cannot start {workers} workers: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, set, p0, c)| run_point(&config, v, set, p0, c))
            .collect()
    });
    for p in &points {
        if p.status != PointStatus::Ok {
            warn!("sweep point p0 = {:e}, set {:e}: {:?}", p.p0, p.set, p.status);
        }
    }
    if points.iter().all(|p| matches!(p.status, PointStatus::Infeasible(_))) {
        return Err(QreError::Infeasible("every sweep point is infeasible".into()));
    }
    Ok(SweepTable {
        parameter: sweep.parameter,
        fixed_cp0: sweep.fixed_cp0,
        values: sweep.values.clone(),
        sets,
        points,
    })
}

/// Runs a sweep and writes `<stem>_sweep.csv` and `<stem>_sweep.gp`.
pub fn run_sweep_to(config: &ScenarioConfig, workers: usize, out_dir: &Path) -> Result<(SweepTable, Vec<PathBuf>)> {
    let config = config.clone().normalize()?;
    let table = run_sweep(&config, workers)?;
    let stem = config.output.stem.clone().unwrap_or_else(|| config.kind().as_str().into());
    let figure = config.scenario.figure.clone().unwrap_or_default();
    let mut meta = BTreeMap::new();
    meta.insert("figure".to_string(), figure.clone());
    meta.insert("scenario".to_string(), config.kind().as_str().to_string());
    meta.insert(
        "sweep".to_string(),
        if table.fixed_cp0 {
            "C p0 fixed per column set, C = cp0 / p0 per point".to_string()
        } else {
            "C fixed, p0 varied".to_string()
        },
    );
    meta.insert("jet_slope_max".to_string(), format!("{:e}", jet_slope(&config)?));
    let csv = out_dir.join(format!("{stem}_sweep.csv"));
    let gp = out_dir.join(format!("{stem}_sweep.gp"));
    write_file(&csv, &table.to_csv(&meta, &config.to_toml()))?;
    let x = table.value_column();
    write_file(&gp, &sweep_plot_script(&figure, &format!("{stem}_sweep.csv"), x, &table.labels()))?;
    Ok((table, vec![csv, gp]))
}

/// Split-operator against dense RK4 on one small-grid scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub scenario: ScenarioKind,
    pub n_points: usize,
    pub steps: usize,
    pub dt: f64,
    pub rk4_substeps: usize,
    /// `‖ρ_split − ρ_rk4‖_F` including the grid measure.
    pub frobenius: f64,
    pub min_eigenvalue_split: f64,
    pub min_eigenvalue_rk4: f64,
}

/// Propagates `n_steps` split steps and the same interval with dense RK4.
pub fn oracle_check(config: &ScenarioConfig, n_steps: usize) -> Result<OracleReport> {
    let sc = Scenario::build(config)?;
    let rho0 = sc.initial_state()?;
    let kernels = sc.kernels()?;
    let stepper = Stepper::new(&sc.grid);
    let mut split = rho0.clone();
    for _ in 0..n_steps {
        stepper.step(&mut split, &kernels)?;
    }
    let l = dense_from_parts(&sc.grid, &sc.hamiltonian_potential.values, sc.mass, &sc.ops)?;
    let dt = sc.schedule.dt;
    let substeps = ((l.norm_bound() * dt) / (0.5 * RK4_STABILITY_LIMIT)).ceil().max(1.0) as usize;
    let dense = rk4_evolve(&l, &rho0, dt / substeps as f64, n_steps * substeps)?;
    Ok(OracleReport {
        scenario: sc.kind,
        n_points: sc.grid.n_points(),
        steps: n_steps,
        dt,
        rk4_substeps: substeps,
        frobenius: split.frobenius_distance(&dense),
        min_eigenvalue_split: split.min_eigenvalue(),
        min_eigenvalue_rk4: dense.min_eigenvalue(),
    })
}

/// Small-grid (`N = 32`) member of each scenario family, sized for the
/// dense oracle.
pub fn reduced_config(kind: ScenarioKind) -> ScenarioConfig {
    let text = match kind {
        ScenarioKind::Tunneling => {
            "[scenario]\nkind = \"tunneling\"\nname = \"tunneling_n32\"\n\
             [grid]\nn_points = 32\nx_min = -10\nx_max = 10\n\
             [state]\nx0 = -2.0\np0_mean = 1.0\nsigma_x = 1.0\n[particle]\nmass = 1.0\n\
             [potential]\nk0 = 0.25\n[environment]\ncoupling = 1.5\np0 = 0.5\n\
             [schedule]\ndt = 0.002\nn_steps = 100\n"
        }
        ScenarioKind::Trapping => {
            "[scenario]\nkind = \"trapping\"\nname = \"trapping_n32\"\n\
             [grid]\nn_points = 32\nx_min = -9\nx_max = 9\n\
             [state]\nx0 = 0.5\np0_mean = 0.0\nsigma_x = 1.0\n[particle]\nmass = 1.0\n\
             [potential]\nomega = 0.5\n[environment]\ncoupling = 2.0\np0 = 0.3\n\
             [schedule]\ndt = 0.002\nn_steps = 100\n"
        }
        ScenarioKind::EffectiveMass => {
            "[scenario]\nkind = \"effective_mass\"\nname = \"effective_mass_n32\"\n\
             [grid]\nn_points = 32\nx_min = -10\nx_max = 10\n\
             [state]\nx0 = 0.0\np0_mean = 0.5\nsigma_x = 1.0\n[particle]\nmass = 1.0\n\
             [potential]\nslope = 0.2\n[environment]\ncoupling = 1.0\neffective_mass = 3.0\n\
             [schedule]\ndt = 0.002\nn_steps = 100\n"
        }
        ScenarioKind::Relativistic => {
            "[scenario]\nkind = \"relativistic\"\nname = \"relativistic_n32\"\n\
             [grid]\nn_points = 32\nx_min = -10\nx_max = 10\n\
             [state]\nx0 = 0.0\np0_mean = 0.0\nsigma_x = 1.0\n[particle]\nmass = 1.0\n\
             [potential]\nslope = -0.5\n[environment]\ncoupling = 2.0\nlight_speed = 2.0\n\
             [schedule]\ndt = 0.002\nn_steps = 100\n"
        }
        ScenarioKind::Custom => {
            "[scenario]\nkind = \"custom\"\nname = \"custom_n32\"\n\
             [grid]\nn_points = 32\nx_min = -10\nx_max = 10\n\
             [state]\nx0 = 0.5\np0_mean = 0.3\nsigma_x = 1.0\n[particle]\nmass = 1.0\n\
             [potential]\nkind = \"harmonic\"\nomega = 0.4\n\
             [targets]\nforce_constant = 0.05\nforce_linear = -0.1\nvelocity_mass = 2.0\n\
             [environment]\nbath_r = 0.8\nbath_s = 0.8\n\
             [schedule]\ndt = 0.002\nn_steps = 100\n"
        }
    };
    ScenarioConfig::parse(text).expect("built-in reduced configurations are valid")
}
