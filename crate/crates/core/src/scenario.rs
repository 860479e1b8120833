//! Turning a [`ScenarioConfig`] into grids, states, environments and runs.

use std::collections::BTreeMap;

use log::info;

use crate::config::{PotentialKind, ScenarioConfig, ScenarioKind};
use crate::density::{gaussian_density, DensityMatrix, GaussianSpec};
use crate::error::Result;
use crate::grid::PhaseGrid;
use crate::observables::{Observer, TimeSeries};
use crate::oracle::Comparator;
use crate::propagator::{build_kernels, propagate, GuardConfig, KernelSet, RunDiagnostics, Schedule};
use crate::synthesis::{
    effective_mass_op, effective_mass_velocity, jet_feasibility_bound, jet_validity_endpoint,
    jets_from_barrier, relativistic_op, relativistic_velocity, trap_from_potential, BathDecomposition,
    JetEnvironment, LindbladOp, TargetDynamics,
};

/// Potential samples and their analytic derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
}

impl SampledPotential {
    pub fn zero(grid: &PhaseGrid) -> Self {
        let n = grid.n_points();
        Self {
            values: vec![0.0; n],
            derivative: vec![0.0; n],
        }
    }

    pub fn max_abs_derivative(&self) -> f64 {
        self.derivative.iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}

/// Samples the configured potential (`mass` enters the harmonic form).
pub fn sample_potential(config: &ScenarioConfig, grid: &PhaseGrid, mass: f64) -> SampledPotential {
    let pot = &config.potential;
    match pot.kind.unwrap_or(PotentialKind::None) {
        PotentialKind::GaussianBarrier => {
            let k0 = pot.k0.unwrap_or(0.0);
            SampledPotential {
                values: grid.sample_x(|x| 2.0 * k0 * (-0.5 * x * x).exp()),
                derivative: grid.sample_x(|x| -2.0 * k0 * x * (-0.5 * x * x).exp()),
            }
        }
        PotentialKind::Harmonic => {
            let w2 = pot.omega.unwrap_or(0.0).powi(2);
            SampledPotential {
                values: grid.sample_x(|x| 0.5 * mass * w2 * x * x),
                derivative: grid.sample_x(|x| mass * w2 * x),
            }
        }
        PotentialKind::Ramp => {
            let s = pot.slope.unwrap_or(0.0);
            SampledPotential {
                values: grid.sample_x(|x| s * x),
                derivative: vec![s; grid.n_points()],
            }
        }
        PotentialKind::None => SampledPotential::zero(grid),
    }
}

/// Fully assembled experiment, ready to propagate.
/// Mean force `f_+ + f_- − U'` left over when jets run past their
/// semiclassical branch and cancel only part of `U'`.
fn realized_force(fp: &[f64], fm: &[f64], du: &[f64]) -> Vec<f64> {
    fp.iter().zip(fm).zip(du).map(|((a, b), d)| a + b - d).collect()
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub kind: ScenarioKind,
    pub grid: PhaseGrid,
    pub mass: f64,
    pub state: GaussianSpec,
    /// Potential of the system Hamiltonian.
    pub hamiltonian_potential: SampledPotential,
    /// Potential the environment cancels (tunneling) or mimics (trapping).
    pub environment_potential: SampledPotential,
    pub ops: Vec<LindbladOp>,
    pub targets: TargetDynamics,
    pub jets: Option<JetEnvironment>,
    pub schedule: Schedule,
    pub comparators: Vec<Comparator>,
    pub transmission_threshold: Option<f64>,
}

fn environment_on(config: &ScenarioConfig) -> bool {
    config.environment.enabled != Some(false) && config.environment.coupling.is_none_or(|c| c != 0.0)
}

impl Scenario {
    /// Builds the scenario from a normalized configuration.
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        let config = config.clone().normalize()?;
        let kind = config.kind();
        let req = |v: Option<f64>| v.expect("normalize guarantees required fields");
        let grid = PhaseGrid::new(
            config.grid.n_points.expect("normalized"),
            req(config.grid.x_min),
            req(config.grid.x_max),
        )?;
        let mass = req(config.particle.mass);
        let state = GaussianSpec {
            x0: req(config.state.x0),
            p0_mean: req(config.state.p0_mean),
            sigma_x: req(config.state.sigma_x),
        };
        let schedule = Schedule {
            dt: req(config.schedule.dt),
            n_steps: config.schedule.n_steps.expect("normalized"),
            record_every: config.schedule.record_every.expect("normalized"),
        };
        schedule.validate()?;
        let env = &config.environment;
        let on = environment_on(&config);
        let sampled = sample_potential(&config, &grid, mass);
        let zero = SampledPotential::zero(&grid);

        let mut jets = None;
        let mut decomposition = BathDecomposition::default();
        let (hamiltonian_potential, environment_potential, targets) = match kind {
            ScenarioKind::Tunneling => {
                let targets = if on {
                    let j = jets_from_barrier(&sampled.derivative, req(env.coupling), req(env.p0), &grid)?;
                    let (fp, fm) = j.forces();
                    let r = vec![j.coupling; grid.n_points()];
                    let force = if j.cancels_exactly() {
                        vec![0.0; grid.n_points()]
                    } else {
                        realized_force(&fp, &fm, &sampled.derivative)
                    };
                    decomposition.position_baths = vec![(fp, r.clone()), (fm, r)];
                    jets = Some(j);
                    TargetDynamics::new(&grid, force, grid.sample_p(|p| p / mass))?
                } else {
                    TargetDynamics::newtonian(&grid, &sampled.derivative, mass)?
                };
                (sampled.clone(), sampled, targets)
            }
            ScenarioKind::Trapping => {
                let targets = if on {
                    let j = trap_from_potential(&sampled.derivative, req(env.coupling), req(env.p0), &grid)?;
                    let (fp, fm) = j.forces();
                    let r = vec![j.coupling; grid.n_points()];
                    let force = if j.cancels_exactly() {
                        sampled.derivative.iter().map(|d| -d).collect()
                    } else {
                        realized_force(&fp, &fm, &zero.derivative)
                    };
                    decomposition.position_baths = vec![(fp, r.clone()), (fm, r)];
                    jets = Some(j);
                    TargetDynamics::new(&grid, force, grid.sample_p(|p| p / mass))?
                } else {
                    TargetDynamics::newtonian(&grid, &zero.derivative, mass)?
                };
                (zero.clone(), sampled, targets)
            }
            ScenarioKind::EffectiveMass | ScenarioKind::Relativistic if on => {
                let c = req(env.coupling);
                let (op_velocity, velocity): (Vec<f64>, Vec<f64>) = if kind == ScenarioKind::EffectiveMass {
                    let big = req(env.effective_mass);
                    (
                        grid.sample_p(|p| effective_mass_velocity(mass, big, p)),
                        grid.sample_p(|p| p / big),
                    )
                } else {
                    let light = req(env.light_speed);
                    (
                        grid.sample_p(|p| relativistic_velocity(mass, light, p) - p / mass),
                        grid.sample_p(|p| relativistic_velocity(mass, light, p)),
                    )
                };
                decomposition.momentum_baths = vec![(op_velocity, vec![c; grid.n_points()])];
                let force = sampled.derivative.iter().map(|d| -d).collect();
                let targets = TargetDynamics::new(&grid, force, velocity)?;
                (sampled, zero, targets)
            }
            ScenarioKind::Custom if on => {
                let tg = &config.targets;
                let (f0, f1, mv) = (req(tg.force_constant), req(tg.force_linear), req(tg.velocity_mass));
                let targets = TargetDynamics::new(&grid, grid.sample_x(|x| f0 + f1 * x), grid.sample_p(|p| p / mv))?;
                decomposition = BathDecomposition::minimal(
                    &grid,
                    &targets,
                    &sampled.derivative,
                    mass,
                    req(env.bath_r),
                    req(env.bath_s),
                )?;
                (sampled, zero, targets)
            }
            _ => {
                let targets = TargetDynamics::newtonian(&grid, &sampled.derivative, mass)?;
                (sampled, zero, targets)
            }
        };
        decomposition.validate(&grid, &targets, &hamiltonian_potential.derivative, mass)?;

        let ops = match (&jets, kind) {
            (Some(j), _) => j.operators(),
            (None, ScenarioKind::EffectiveMass) if on => vec![effective_mass_op(
                mass,
                req(env.effective_mass),
                req(env.coupling),
                &grid,
            )?],
            (None, ScenarioKind::Relativistic) if on => vec![relativistic_op(
                mass,
                req(env.light_speed),
                req(env.coupling),
                &grid,
            )?],
            _ => decomposition.operators(&grid)?,
        };

        let transmission_threshold = config.output.transmission_threshold;
        let mut comparators = Vec::new();
        if config.output.comparators == Some(true) {
            let force = -hamiltonian_potential.derivative.first().copied().unwrap_or(0.0);
            match kind {
                ScenarioKind::Tunneling => comparators.push(Comparator::FreeTransmission {
                    x0: state.x0,
                    p0: state.p0_mean,
                    sigma_x: state.sigma_x,
                    mass,
                    threshold: transmission_threshold.unwrap_or(0.0),
                }),
                ScenarioKind::Trapping => comparators.push(Comparator::FreeGaussianSpread {
                    sigma_x: state.sigma_x,
                    mass,
                }),
                ScenarioKind::EffectiveMass => comparators.push(Comparator::LinearPotentialNewton {
                    x0: state.x0,
                    p0: state.p0_mean,
                    force,
                    mass: if on { req(env.effective_mass) } else { mass },
                }),
                ScenarioKind::Relativistic => comparators.push(Comparator::ClassicalRelativistic {
                    mass,
                    light_speed: req(env.light_speed),
                    p0: state.p0_mean,
                    force,
                }),
                ScenarioKind::Custom => {}
            }
        }

        Ok(Self {
            config,
            kind,
            grid,
            mass,
            state,
            hamiltonian_potential,
            environment_potential,
            ops,
            targets,
            jets,
            schedule,
            comparators,
            transmission_threshold,
        })
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        gaussian_density(&self.grid, &self.state)
    }

    pub fn kernels(&self) -> Result<KernelSet> {
        build_kernels(
            &self.grid,
            &self.hamiltonian_potential.values,
            self.mass,
            &self.ops,
            self.schedule.dt,
        )
    }

    /// Energy is measured with the potential the particle effectively feels
    /// (the trapped potential in the trapping scenario).
    pub fn observer(&self) -> Observer {
        let energy_potential = if self.kind == ScenarioKind::Trapping {
            self.environment_potential.values.clone()
        } else {
            self.hamiltonian_potential.values.clone()
        };
        Observer {
            potential: energy_potential,
            potential_derivative: self.hamiltonian_potential.derivative.clone(),
            mass: self.mass,
            targets: Some(self.targets.clone()),
            transmission_threshold: self.transmission_threshold,
        }
    }

    pub fn guards(&self) -> GuardConfig {
        GuardConfig {
            audit_final_positivity: self.config.output.audit_final_positivity == Some(true),
            ..GuardConfig::default()
        }
    }

    /// Scalar facts echoed into output headers.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("figure", self.config.scenario.figure.clone().unwrap_or_default());
        put("scenario", self.kind.as_str().to_string());
        put("units", "atomic (hbar = m_e = |e| = 1, mu_B = 1/2)".into());
        put("n_points", self.grid.n_points().to_string());
        put("dx", format!("{:e}", self.grid.dx()));
        put("dp", format!("{:e}", self.grid.dp()));
        put("mass", format!("{:e}", self.mass));
        put("sigma_x", format!("{:e}", self.state.sigma_x));
        put("dt", format!("{:e}", self.schedule.dt));
        put("t_final", format!("{:e}", self.schedule.t_final()));
        put("n_operators", self.ops.len().to_string());
        if self.kind == ScenarioKind::Tunneling {
            put(
                "p0_mean_convention",
                "sqrt(2 m K0) unless state.p0_mean is given; width correction hbar^2/(8 m sigma^2) not included".into(),
            );
        }
        if let Some(xt) = self.transmission_threshold {
            put("transmission_threshold", format!("{xt:e}"));
            if self.kind == ScenarioKind::Tunneling {
                put(
                    "transmission_rule",
                    "read at t_final, when the free packet mean has reached 2 x_T".into(),
                );
            }
        }
        if let Some(j) = &self.jets {
            put("coupling", format!("{:e}", j.coupling));
            put("jet_p0", format!("{:e}", j.p0));
            put("cp0", format!("{:e}", j.coupling * j.p0));
            put("validity_margin", format!("{:e}", j.validity_margin));
            put("feasibility_margin", format!("{:e}", j.feasibility_margin));
            put("jet_force_mismatch", format!("{:e}", j.force_mismatch));
            let slope = self.environment_potential.max_abs_derivative();
            let cp0 = j.coupling * j.p0;
            put("p0_feasibility_bound", format!("{:e}", jet_feasibility_bound(cp0, slope)));
            put("p0_validity_endpoint", format!("{:e}", jet_validity_endpoint(cp0, slope)));
        }
        m
    }

    /// Propagates the scenario and attaches comparators and metadata.
    pub fn run(&self) -> Result<RunOutput> {
        let rho0 = self.initial_state()?;
        self.run_from(&rho0)
    }

    pub fn run_from(&self, rho0: &DensityMatrix) -> Result<RunOutput> {
        let kernels = self.kernels()?;
        info!(
            "{}: {} steps of dt = {} on {} points, max phase increment {:.3}",
            self.kind.as_str(),
            self.schedule.n_steps,
            self.schedule.dt,
            self.grid.n_points(),
            kernels.max_phase_increment()
        );
        let out = propagate(rho0, &kernels, &self.schedule, &self.observer(), &self.guards())?;
        let mut series = out.series;
        series.metadata = self.metadata();
        series
            .metadata
            .insert("max_phase_increment".into(), format!("{:e}", kernels.max_phase_increment()));
        let times = series.times();
        series.comparators = self
            .comparators
            .iter()
            .map(|c| (c.name().to_string(), c.series(&times)))
            .collect();
        Ok(RunOutput {
            series,
            final_state: out.final_state,
            diagnostics: out.diagnostics,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub final_state: DensityMatrix,
    pub diagnostics: RunDiagnostics,
}

/// Feasibility and step-size checks without propagating.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub lines: Vec<(String, String)>,
}

pub fn validate(config: &ScenarioConfig) -> Result<ValidationReport> {
    let sc = Scenario::build(config)?;
    sc.initial_state()?;
    let kernels = sc.kernels()?;
    let mut lines: Vec<(String, String)> = sc.metadata().into_iter().collect();
    lines.push(("max_phase_increment".into(), format!("{:e}", kernels.max_phase_increment())));
    lines.push(("status".into(), "feasible".into()));
    Ok(ValidationReport { lines })
}

/// Replaces the environment of `config` by jets with momentum `p0` and
/// coupling `coupling`.
pub fn with_jets(config: &ScenarioConfig, p0: f64, coupling: f64) -> ScenarioConfig {
    let mut c = config.clone();
    c.environment.p0 = Some(p0);
    c.environment.coupling = Some(coupling);
    c.environment.cp0 = Some(coupling * p0);
    c.sweep = None;
    c
}
