//! Experiment descriptions: a TOML document with fixed sections, defaults per
//! scenario kind, and a serialization that round-trips.
//!
//! ```toml
//! [scenario]
//! kind = "tunneling"
//!
//! [environment]
//! cp0 = 5e-4
//! p0 = 2e-5
//! ```

use serde::{Deserialize, Serialize};

use crate::density::GaussianSpec;
use crate::error::{QreError, Result};
use crate::grid::HYDROGEN_MASS;
use crate::synthesis::jet_feasibility_bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Tunneling,
    Trapping,
    EffectiveMass,
    Relativistic,
    Custom,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tunneling => "tunneling",
            Self::Trapping => "trapping",
            Self::EffectiveMass => "effective_mass",
            Self::Relativistic => "relativistic",
            Self::Custom => "custom",
        }
    }

    /// Figure label written into every exported header.
    pub fn figure(self) -> &'static str {
        match self {
            Self::Tunneling => "fig2",
            Self::Trapping => "fig3",
            Self::EffectiveMass => "fig4",
            Self::Relativistic => "fig5",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// `U = 2 K0 exp(−x²/2)`.
    GaussianBarrier,
    /// `U = ½ m ω² x²`.
    Harmonic,
    /// `U = slope · x`.
    Ramp,
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ScenarioKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<PotentialKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    /// `false` switches every Lindblad operator off.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    /// Coupling `C`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// Force fluctuation scale `C p0` of the jets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp0: Option<f64>,
    /// Incident jet electron momentum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub light_speed: Option<f64>,
    /// Constant magnitude `R` of the position bath (custom scenarios).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath_r: Option<f64>,
    /// Constant magnitude `S` of the momentum bath (custom scenarios).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bath_s: Option<f64>,
}

/// Target dynamics of a custom scenario: `F(x) = force_constant +
/// force_linear·x`, `G(p) = p / velocity_mass`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_mass: Option<f64>,
}

impl TargetSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmission_threshold: Option<f64>,
    /// Include the analytic comparator columns of the scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparators: Option<bool>,
    /// Eigenvalue audit of the final state on large grids.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_final_positivity: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Absolute jet momentum `p0`.
    P0,
    /// `p0` as a fraction of the jet feasibility bound `4(C p0)²/(ħ max|U'|)` of each `C p0`.
    P0Fraction,
}

/// Sweep over the jet momentum. With `fixed_cp0` the coupling is recomputed
/// as `C = cp0 / p0` for every point; otherwise `environment.coupling` is held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default = "default_true")]
    pub fixed_cp0: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cp0_values: Vec<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub particle: ParticleSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub environment: EnvironmentSection,
    #[serde(default, skip_serializing_if = "TargetSection::is_empty")]
    pub targets: TargetSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// Default Gaussian barrier strength (initial mean kinetic energy of the
/// tunneling packet).
pub const TUNNELING_K0: f64 = 0.0068;
pub const TUNNELING_CP0: f64 = 5e-4;
pub const TRAP_OMEGA: f64 = 0.01;
pub const TRAP_P0: f64 = 1e-4;
pub const TRAP_CP0: f64 = 0.05;
pub const RAMP_SLOPE: f64 = 3.2e-3;
pub const RELATIVISTIC_SLOPE: f64 = -1e3;

/// Relative tolerance when `coupling`, `cp0` and `p0` are all given.
const CP0_CONSISTENCY: f64 = 1e-9;

fn fill<T: Clone>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

/// Steps covering at least `t` that end on a record.
fn whole_records(t: f64, dt: f64, record_every: usize) -> usize {
    let every = record_every.max(1);
    ((t / dt).ceil().max(1.0) as usize).div_ceil(every) * every
}

fn jet_params_given(env: &EnvironmentSection) -> usize {
    [env.coupling, env.cp0, env.p0].iter().filter(|v| v.is_some()).count()
}

/// `√(2 m K0)`: momentum of a packet with kinetic energy `K0` (width ignored).
pub fn momentum_from_kinetic(mass: f64, k0: f64) -> f64 {
    GaussianSpec::momentum_for_energy(k0, mass)
}

/// `max |U'|` of the Gaussian barrier `2 K0 exp(−x²/2)`.
pub fn barrier_max_slope(k0: f64) -> f64 {
    2.0 * k0 * (-0.5_f64).exp()
}

impl ScenarioConfig {
    /// Parses, fills defaults and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Self = toml::from_str(text).map_err(|e| QreError::Config(e.message().to_string()))?;
        raw.normalize()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn kind(&self) -> ScenarioKind {
        self.scenario.kind.unwrap_or(ScenarioKind::Custom)
    }

    /// Fills kind-specific defaults (never overwriting given values), derives
    /// the missing member of (`coupling`, `cp0`, `p0`) and lists every
    /// required field still absent.
    pub fn normalize(mut self) -> Result<Self> {
        let Some(kind) = self.scenario.kind else {
            return Err(QreError::MissingFields(vec!["scenario.kind".into()]));
        };
        fill(&mut self.scenario.name, kind.as_str().to_string());
        fill(&mut self.scenario.figure, kind.figure().to_string());
        if self.environment.coupling == Some(0.0) {
            fill(&mut self.environment.enabled, false);
        }
        self.fill_kind_defaults(kind);
        self.derive_coupling(kind)?;
        fill(&mut self.environment.enabled, true);
        fill(&mut self.schedule.record_every, 1);
        fill(&mut self.output.dir, "out".to_string());
        let stem = self.scenario.name.clone().unwrap_or_default();
        fill(&mut self.output.stem, stem);
        fill(&mut self.output.comparators, kind != ScenarioKind::Custom);
        fill(&mut self.output.audit_final_positivity, false);
        fill(&mut self.potential.kind, PotentialKind::None);

        let missing = self.missing_fields(kind);
        if !missing.is_empty() {
            return Err(QreError::MissingFields(missing));
        }
        self.check_values(kind)?;
        Ok(self)
    }

    fn fill_kind_defaults(&mut self, kind: ScenarioKind) {
        let (g, s, pa, po, env, sc, out) = (
            &mut self.grid,
            &mut self.state,
            &mut self.particle,
            &mut self.potential,
            &mut self.environment,
            &mut self.schedule,
            &mut self.output,
        );
        match kind {
            ScenarioKind::Tunneling => {
                fill(&mut g.n_points, 512);
                fill(&mut g.x_min, -40.0);
                fill(&mut g.x_max, 40.0);
                fill(&mut pa.mass, HYDROGEN_MASS);
                fill(&mut po.kind, PotentialKind::GaussianBarrier);
                fill(&mut po.k0, TUNNELING_K0);
                let mass = pa.mass.unwrap_or(HYDROGEN_MASS);
                let k0 = po.k0.unwrap_or(TUNNELING_K0);
                fill(&mut s.x0, -10.0);
                fill(&mut s.sigma_x, 1.0);
                fill(&mut s.p0_mean, momentum_from_kinetic(mass, k0));
                if jet_params_given(env) < 2 {
                    fill(&mut env.cp0, TUNNELING_CP0);
                }
                if env.p0.is_none() && env.coupling.is_none() {
                    let cp0 = env.cp0.unwrap_or(TUNNELING_CP0);
                    env.p0 = Some(0.1 * jet_feasibility_bound(cp0, barrier_max_slope(k0)));
                }
                // free packet mean travels from x0 to 2 x_T
                fill(&mut out.transmission_threshold, 5.0);
                fill(&mut sc.dt, 2.0);
                fill(&mut sc.record_every, 4);
                if sc.n_steps.is_none() {
                    let (x0, p) = (s.x0.unwrap_or(-10.0), s.p0_mean.unwrap_or(1.0));
                    let xt = out.transmission_threshold.unwrap_or(5.0);
                    let t = (2.0 * xt - x0) * mass / p;
                    sc.n_steps = Some(whole_records(t, sc.dt.unwrap_or(2.0), sc.record_every.unwrap_or(4)));
                }
            }
            ScenarioKind::Trapping => {
                fill(&mut g.n_points, 512);
                fill(&mut g.x_min, -8.0);
                fill(&mut g.x_max, 8.0);
                fill(&mut pa.mass, HYDROGEN_MASS);
                fill(&mut po.kind, PotentialKind::Harmonic);
                fill(&mut po.omega, TRAP_OMEGA);
                let mass = pa.mass.unwrap_or(HYDROGEN_MASS);
                let omega = po.omega.unwrap_or(TRAP_OMEGA);
                let ground = GaussianSpec::harmonic_ground_state(mass, omega);
                fill(&mut s.x0, 0.0);
                fill(&mut s.p0_mean, 0.0);
                fill(&mut s.sigma_x, ground.sigma_x);
                if jet_params_given(env) < 2 {
                    fill(&mut env.cp0, TRAP_CP0);
                }
                if env.p0.is_none() && env.coupling.is_none() {
                    env.p0 = Some(TRAP_P0);
                }
                fill(&mut sc.dt, 0.15);
                fill(&mut sc.record_every, 20);
                if sc.n_steps.is_none() {
                    let period = 2.0 * std::f64::consts::PI / omega;
                    sc.n_steps = Some(whole_records(period, sc.dt.unwrap_or(0.15), sc.record_every.unwrap_or(20)));
                }
            }
            ScenarioKind::EffectiveMass => {
                fill(&mut g.n_points, 1024);
                fill(&mut g.x_min, -40.0);
                fill(&mut g.x_max, 40.0);
                fill(&mut pa.mass, HYDROGEN_MASS);
                fill(&mut po.kind, PotentialKind::Ramp);
                fill(&mut po.slope, RAMP_SLOPE);
                fill(&mut s.x0, 0.0);
                fill(&mut s.p0_mean, 0.0);
                fill(&mut s.sigma_x, 0.15);
                fill(&mut env.coupling, 0.1);
                let mass = pa.mass.unwrap_or(HYDROGEN_MASS);
                fill(&mut env.effective_mass, 10.0 * mass);
                fill(&mut sc.dt, 1.0);
                fill(&mut sc.n_steps, 4200);
                fill(&mut sc.record_every, 21);
            }
            ScenarioKind::Relativistic => {
                fill(&mut g.n_points, 512);
                fill(&mut g.x_min, -8.0);
                fill(&mut g.x_max, 8.0);
                fill(&mut pa.mass, 1.0);
                fill(&mut po.kind, PotentialKind::Ramp);
                fill(&mut po.slope, RELATIVISTIC_SLOPE);
                fill(&mut s.x0, 0.0);
                fill(&mut s.p0_mean, 0.0);
                fill(&mut s.sigma_x, 1.0);
                fill(&mut env.coupling, 20.0);
                fill(&mut env.light_speed, 10.0);
                fill(&mut sc.dt, 1.25e-5);
                fill(&mut sc.n_steps, 4000);
                fill(&mut sc.record_every, 40);
            }
            ScenarioKind::Custom => {
                fill(&mut env.bath_r, 1.0);
                fill(&mut env.bath_s, 1.0);
            }
        }
    }

    fn derive_coupling(&mut self, kind: ScenarioKind) -> Result<()> {
        if !matches!(kind, ScenarioKind::Tunneling | ScenarioKind::Trapping)
            || self.environment.enabled == Some(false)
        {
            return Ok(());
        }
        let env = &mut self.environment;
        match (env.coupling, env.cp0, env.p0) {
            (Some(c), Some(cp0), Some(p0)) => {
                if (c * p0 - cp0).abs() > CP0_CONSISTENCY * cp0.abs() {
                    return Err(QreError::Config(format!(
                        "environment.coupling·p0 = {} contradicts environment.cp0 = {cp0}",
                        c * p0
                    )));
                }
            }
            (None, Some(cp0), Some(p0)) => env.coupling = Some(cp0 / p0),
            (Some(c), None, Some(p0)) => env.cp0 = Some(c * p0),
            (Some(c), Some(cp0), None) => env.p0 = Some(cp0 / c),
            _ => {}
        }
        Ok(())
    }

    fn missing_fields(&self, kind: ScenarioKind) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |present: bool, name: &str| {
            if !present {
                out.push(name.to_string());
            }
        };
        need(self.grid.n_points.is_some(), "grid.n_points");
        need(self.grid.x_min.is_some(), "grid.x_min");
        need(self.grid.x_max.is_some(), "grid.x_max");
        need(self.state.x0.is_some(), "state.x0");
        need(self.state.p0_mean.is_some(), "state.p0_mean");
        need(self.state.sigma_x.is_some(), "state.sigma_x");
        need(self.particle.mass.is_some(), "particle.mass");
        need(self.schedule.dt.is_some(), "schedule.dt");
        need(self.schedule.n_steps.is_some(), "schedule.n_steps");
        match self.potential.kind {
            Some(PotentialKind::GaussianBarrier) => need(self.potential.k0.is_some(), "potential.k0"),
            Some(PotentialKind::Harmonic) => need(self.potential.omega.is_some(), "potential.omega"),
            Some(PotentialKind::Ramp) => need(self.potential.slope.is_some(), "potential.slope"),
            _ => {}
        }
        let env = &self.environment;
        let on = env.enabled != Some(false);
        match kind {
            ScenarioKind::Tunneling | ScenarioKind::Trapping if on => {
                need(env.coupling.is_some(), "environment.coupling (or environment.cp0)");
                need(env.p0.is_some(), "environment.p0");
            }
            ScenarioKind::EffectiveMass if on => {
                need(env.coupling.is_some(), "environment.coupling");
                need(env.effective_mass.is_some(), "environment.effective_mass");
            }
            ScenarioKind::Relativistic if on => {
                need(env.coupling.is_some(), "environment.coupling");
                need(env.light_speed.is_some(), "environment.light_speed");
            }
            ScenarioKind::Custom => {
                need(self.targets.force_constant.is_some(), "targets.force_constant");
                need(self.targets.force_linear.is_some(), "targets.force_linear");
                need(self.targets.velocity_mass.is_some(), "targets.velocity_mass");
            }
            _ => {}
        }
        if kind == ScenarioKind::Trapping {
            need(
                self.potential.kind == Some(PotentialKind::Harmonic),
                "potential.kind = \"harmonic\" (trapped potential)",
            );
        }
        out
    }

    fn check_values(&self, kind: ScenarioKind) -> Result<()> {
        let bad = |name: &str, why: &str| Err(QreError::Config(format!("{name} {why}")));
        let positive = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
        if !positive(self.state.sigma_x) {
            return bad("state.sigma_x", "must be positive");
        }
        if !positive(self.particle.mass) {
            return bad("particle.mass", "must be positive");
        }
        if !positive(self.schedule.dt) {
            return bad("schedule.dt", "must be positive");
        }
        if self.schedule.record_every == Some(0) {
            return bad("schedule.record_every", "must be at least 1");
        }
        let env = &self.environment;
        if env.coupling.is_some_and(|c| !(c >= 0.0 && c.is_finite())) {
            return bad("environment.coupling", "must be non-negative");
        }
        for (name, v) in [
            ("environment.p0", env.p0),
            ("environment.effective_mass", env.effective_mass),
            ("environment.light_speed", env.light_speed),
            ("targets.velocity_mass", self.targets.velocity_mass),
        ] {
            if !positive(v) {
                return bad(name, "must be positive");
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return bad("sweep.values", "must not be empty");
            }
            if sw.values.iter().any(|v| !(*v > 0.0)) {
                return bad("sweep.values", "must be positive");
            }
            if !matches!(kind, ScenarioKind::Tunneling | ScenarioKind::Trapping) {
                return bad("sweep", "is only defined for jet scenarios (tunneling, trapping)");
            }
            if sw.parameter == SweepParameter::P0Fraction && !sw.fixed_cp0 {
                return bad("sweep.parameter", "p0_fraction requires fixed_cp0 = true");
            }
        }
        Ok(())
    }

    /// `C p0` values of a sweep (the configured one when none are listed).
    pub fn sweep_cp0_values(&self) -> Vec<f64> {
        match &self.sweep {
            Some(sw) if !sw.cp0_values.is_empty() => sw.cp0_values.clone(),
            _ => self.environment.cp0.into_iter().collect(),
        }
    }

    /// Overrides the time step, keeping the final time and the recording
    /// interval (in time units) as close as possible.
    pub fn override_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(QreError::Config(format!("--dt must be positive, got {dt}")));
        }
        let old = self.schedule.dt.unwrap_or(dt);
        let t_final = old * self.schedule.n_steps.unwrap_or(0) as f64;
        let interval = old * self.schedule.record_every.unwrap_or(1) as f64;
        self.schedule.dt = Some(dt);
        self.schedule.n_steps = Some((t_final / dt).round() as usize);
        self.schedule.record_every = Some(((interval / dt).round() as usize).max(1));
        Ok(())
    }

    pub fn override_grid_n(&mut self, n: usize) {
        self.grid.n_points = Some(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_tunneling_gets_defaults() {
        let c = ScenarioConfig::parse("[scenario]\nkind = \"tunneling\"\n").unwrap();
        assert_eq!(c.grid.n_points, Some(512));
        assert_eq!(c.potential.k0, Some(TUNNELING_K0));
        assert_eq!(c.environment.cp0, Some(TUNNELING_CP0));
        let p = c.state.p0_mean.unwrap();
        assert!((p - (2.0 * 1837.0 * 0.0068_f64).sqrt()).abs() < 1e-12);
        let (cc, p0) = (c.environment.coupling.unwrap(), c.environment.p0.unwrap());
        assert!((cc * p0 - TUNNELING_CP0).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ScenarioConfig::parse("[scenario]\nkind = \"trapping\"\n[grid]\nn_pts = 64\n").unwrap_err();
        assert!(e.to_string().contains("n_pts"), "{e}");
        let e = ScenarioConfig::parse("[scenario]\nkind = \"trapping\"\n[bogus]\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn missing_fields_are_listed_exhaustively() {
        let e = ScenarioConfig::parse("[scenario]\nkind = \"custom\"\n[grid]\nn_points = 64\n").unwrap_err();
        let QreError::MissingFields(list) = e else {
            panic!("{e}")
        };
        for f in [
            "grid.x_min",
            "grid.x_max",
            "state.x0",
            "state.p0_mean",
            "state.sigma_x",
            "particle.mass",
            "schedule.dt",
            "schedule.n_steps",
            "targets.force_constant",
            "targets.force_linear",
            "targets.velocity_mass",
        ] {
            assert!(list.iter().any(|m| m == f), "{f} not in {list:?}");
        }
        assert!(!list.iter().any(|m| m == "grid.n_points"));
        assert!(matches!(
            ScenarioConfig::parse(""),
            Err(QreError::MissingFields(v)) if v == ["scenario.kind"]
        ));
    }

    #[test]
    fn round_trip_is_identity_after_normalization() {
        for kind in ["tunneling", "trapping", "effective_mass", "relativistic"] {
            let c = ScenarioConfig::parse(&format!("[scenario]\nkind = \"{kind}\"\n")).unwrap();
            let again = ScenarioConfig::parse(&c.to_toml()).unwrap();
            assert_eq!(c, again, "{kind}");
        }
    }

    #[test]
    fn inconsistent_cp0_is_rejected() {
        let text = "[scenario]\nkind = \"tunneling\"\n[environment]\ncoupling = 2.0\ncp0 = 1e-3\np0 = 1e-3\n";
        assert!(matches!(ScenarioConfig::parse(text), Err(QreError::Config(_))));
    }

    #[test]
    fn dt_override_keeps_final_time() {
        let mut c = ScenarioConfig::parse("[scenario]\nkind = \"effective_mass\"\n").unwrap();
        let t = c.schedule.dt.unwrap() * c.schedule.n_steps.unwrap() as f64;
        c.override_dt(0.75).unwrap();
        assert_eq!(c.schedule.n_steps, Some((t / 0.75).round() as usize));
        assert_eq!(c.schedule.record_every, Some(28));
    }
}
