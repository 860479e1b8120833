//! Construction of Lindblad operators from target mean-value dynamics.
//!
//! A position-diagonal operator `A(x) = R(x) exp(i∫ f/R² dx)` exerts the mean
//! force `f(x)`; a momentum-diagonal operator `B(p) = S(p) exp(-i∫ g/S² dp)`
//! adds the velocity `g(p)`. Choosing `Σf_k = F + U'` and `Σg_n = G − p/m`
//! makes `d⟨x⟩/dt = ⟨G(p)⟩` and `d⟨p⟩/dt = ⟨F(x)⟩` for every initial state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::Representation;
use crate::error::{QreError, Result};
use crate::grid::{PhaseGrid, BOHR_MAGNETON, ELECTRON_MASS, HBAR};

/// Target right-hand sides `F(x)` (force, position grid) and `G(p)`
/// (velocity, momentum grid in FFT order).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDynamics {
    pub force: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl TargetDynamics {
    pub fn new(grid: &PhaseGrid, force: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        check_len(grid, &force)?;
        check_len(grid, &velocity)?;
        if force.iter().chain(&velocity).any(|v| !v.is_finite()) {
            return Err(QreError::InvalidParameter {
                name: "targets",
                reason: "target force and velocity must be finite".into(),
            });
        }
        Ok(Self { force, velocity })
    }

    /// Newtonian motion of mass `m` in the potential whose derivative is `du`.
    pub fn newtonian(grid: &PhaseGrid, du: &[f64], mass: f64) -> Result<Self> {
        let force = du.iter().map(|d| -d).collect();
        let velocity = grid.sample_p(|p| p / mass);
        Self::new(grid, force, velocity)
    }
}

/// Split of the environmental force and velocity into independent baths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BathDecomposition {
    /// `(f_k, R_k)` sampled on the position grid.
    pub position_baths: Vec<(Vec<f64>, Vec<f64>)>,
    /// `(g_n, S_n)` sampled on the momentum grid.
    pub momentum_baths: Vec<(Vec<f64>, Vec<f64>)>,
}

const CLOSURE_TOLERANCE: f64 = 1e-10;

impl BathDecomposition {
    /// Single position bath with constant `R` and single momentum bath with
    /// constant `S`. Baths whose generator vanishes identically are omitted.
    pub fn minimal(
        grid: &PhaseGrid,
        targets: &TargetDynamics,
        du: &[f64],
        mass: f64,
        r: f64,
        s: f64,
    ) -> Result<Self> {
        check_len(grid, du)?;
        let f: Vec<f64> = targets.force.iter().zip(du).map(|(f, d)| f + d).collect();
        let g: Vec<f64> = targets
            .velocity
            .iter()
            .zip(grid.p_values())
            .map(|(g, p)| g - p / mass)
            .collect();
        let mut out = Self::default();
        if f.iter().any(|v| *v != 0.0) {
            out.position_baths.push((f, vec![r; grid.n_points()]));
        }
        if g.iter().any(|v| *v != 0.0) {
            out.momentum_baths.push((g, vec![s; grid.n_points()]));
        }
        Ok(out)
    }

    /// Checks `Σ f_k = F + U'`, `Σ g_n = G − p/m` and non-vanishing magnitudes.
    pub fn validate(
        &self,
        grid: &PhaseGrid,
        targets: &TargetDynamics,
        du: &[f64],
        mass: f64,
    ) -> Result<()> {
        let n = grid.n_points();
        let mut fsum = vec![0.0; n];
        for (f, r) in &self.position_baths {
            check_len(grid, f)?;
            check_len(grid, r)?;
            for i in 0..n {
                if f[i] != 0.0 && r[i] == 0.0 {
                    return Err(QreError::SingularPhase {
                        index: i,
                        numerator: f[i],
                    });
                }
                fsum[i] += f[i];
            }
        }
        let mut gsum = vec![0.0; n];
        for (g, s) in &self.momentum_baths {
            check_len(grid, g)?;
            check_len(grid, s)?;
            for j in 0..n {
                if g[j] != 0.0 && s[j] == 0.0 {
                    return Err(QreError::SingularPhase {
                        index: j,
                        numerator: g[j],
                    });
                }
                gsum[j] += g[j];
            }
        }
        for i in 0..n {
            let residual = fsum[i] - (targets.force[i] + du[i]);
            if residual.abs() > CLOSURE_TOLERANCE {
                return Err(QreError::Decomposition { index: i, residual });
            }
            let residual = gsum[i] - (targets.velocity[i] - grid.p_values()[i] / mass);
            if residual.abs() > CLOSURE_TOLERANCE {
                return Err(QreError::Decomposition { index: i, residual });
            }
        }
        Ok(())
    }

    /// Builds one Lindblad operator per bath.
    pub fn operators(&self, grid: &PhaseGrid) -> Result<Vec<LindbladOp>> {
        let mut ops = Vec::with_capacity(self.position_baths.len() + self.momentum_baths.len());
        for (f, r) in &self.position_baths {
            ops.push(build_position_lindblad(f, r, grid)?);
        }
        for (g, s) in &self.momentum_baths {
            ops.push(build_momentum_lindblad(g, s, grid)?);
        }
        Ok(ops)
    }
}

/// Lindblad operator diagonal in one representation, stored in polar form.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladOp {
    representation: Representation,
    magnitude: Vec<f64>,
    phase: Vec<f64>,
    values: Vec<Complex64>,
}

impl LindbladOp {
    pub fn from_polar(
        representation: Representation,
        magnitude: Vec<f64>,
        phase: Vec<f64>,
    ) -> Result<Self> {
        if magnitude.len() != phase.len() {
            return Err(QreError::Shape {
                expected: magnitude.len(),
                got: phase.len(),
            });
        }
        if magnitude.iter().chain(&phase).any(|v| !v.is_finite()) {
            return Err(QreError::InvalidParameter {
                name: "lindblad_op",
                reason: "non-finite magnitude or phase".into(),
            });
        }
        let values = magnitude
            .iter()
            .zip(&phase)
            .map(|(&r, &t)| Complex64::from_polar(r, t))
            .collect();
        Ok(Self {
            representation,
            magnitude,
            phase,
            values,
        })
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// Same operator multiplied by `exp(iφ0)`.
    pub fn with_global_phase(&self, phi0: f64) -> Self {
        let phase = self.phase.iter().map(|t| t + phi0).collect();
        Self::from_polar(self.representation, self.magnitude.clone(), phase)
            .expect("shifted phase stays finite")
    }

    /// Generator recovered from the samples by centred differences:
    /// `Im(A* A')` for position operators (the force `f`) and `−Im(B* B')`
    /// for momentum operators (the velocity `g`). End nodes of the sorted
    /// axis use one-sided differences.
    pub fn recovered_generator(&self, grid: &PhaseGrid) -> Vec<f64> {
        let n = self.values.len();
        let (order, h, sign) = match self.representation {
            Representation::Position => ((0..n).collect::<Vec<_>>(), grid.dx(), 1.0),
            Representation::Momentum => (grid.p_sorted_indices(), grid.dp(), -1.0),
        };
        let mut out = vec![0.0; n];
        for (k, &i) in order.iter().enumerate() {
            let deriv = if k == 0 {
                (self.values[order[1]] - self.values[i]) / h
            } else if k == n - 1 {
                (self.values[i] - self.values[order[k - 1]]) / h
            } else {
                (self.values[order[k + 1]] - self.values[order[k - 1]]) / (2.0 * h)
            };
            out[i] = sign * (self.values[i].conj() * deriv).im;
        }
        out
    }
}

/// Trapezoid cumulative integral of `numerator / denominator_sq` along the
/// sorted axis, starting from 0 at the leftmost node. Output follows the
/// grid's storage order (FFT order for the momentum axis).
pub fn cumulative_phase(
    numerator: &[f64],
    denominator_sq: &[f64],
    grid: &PhaseGrid,
    axis: Representation,
) -> Result<Vec<f64>> {
    check_len(grid, numerator)?;
    check_len(grid, denominator_sq)?;
    let n = grid.n_points();
    let (order, h) = match axis {
        Representation::Position => ((0..n).collect::<Vec<_>>(), grid.dx()),
        Representation::Momentum => (grid.p_sorted_indices(), grid.dp()),
    };
    let integrand = |i: usize| -> Result<f64> {
        let (num, den) = (numerator[i], denominator_sq[i]);
        if num == 0.0 {
            Ok(0.0)
        } else if den > 0.0 {
            Ok(num / den)
        } else {
            Err(QreError::SingularPhase {
                index: i,
                numerator: num,
            })
        }
    };
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    let mut prev = integrand(order[0])?;
    for &i in &order[1..] {
        let cur = integrand(i)?;
        acc += 0.5 * h * (prev + cur);
        out[i] = acc;
        prev = cur;
    }
    Ok(out)
}

/// `A(x) = R(x) exp(iθ(x))`, `θ = ∫ f/R² dx`.
pub fn build_position_lindblad(f: &[f64], r: &[f64], grid: &PhaseGrid) -> Result<LindbladOp> {
    let r2: Vec<f64> = r.iter().map(|v| v * v).collect();
    let theta = cumulative_phase(f, &r2, grid, Representation::Position)?;
    LindbladOp::from_polar(
        Representation::Position,
        r.iter().map(|v| v.abs()).collect(),
        sign_adjusted(r, theta),
    )
}

/// `B(p) = S(p) exp(−iθ(p))`, `θ = ∫ g/S² dp`.
pub fn build_momentum_lindblad(g: &[f64], s: &[f64], grid: &PhaseGrid) -> Result<LindbladOp> {
    let s2: Vec<f64> = s.iter().map(|v| v * v).collect();
    let theta = cumulative_phase(g, &s2, grid, Representation::Momentum)?;
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    LindbladOp::from_polar(
        Representation::Momentum,
        s.iter().map(|v| v.abs()).collect(),
        sign_adjusted(s, neg),
    )
}

/// Folds the sign of a negative real magnitude into the phase.
fn sign_adjusted(magnitude: &[f64], mut phase: Vec<f64>) -> Vec<f64> {
    for (t, m) in phase.iter_mut().zip(magnitude) {
        if *m < 0.0 {
            *t += std::f64::consts::PI;
        }
    }
    phase
}

/// Two counter-propagating spin-polarized electron jets that cancel (or, with
/// the sign flipped, mimic) a potential force.
#[derive(Debug, Clone, PartialEq)]
pub struct JetEnvironment {
    pub a_plus: LindbladOp,
    pub a_minus: LindbladOp,
    /// `2 μ_B m_e 𝓑(x)`.
    pub beta: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub p0: f64,
    pub coupling: f64,
    /// `min_x p0² / |β(x)|`; never below 1, and equal to 1 once some node
    /// sits on the branch point `|ħU'|/(2C²) = √2 p0`.
    pub validity_margin: f64,
    /// `4 p0 C² / (ħ max|U'|)`: 1 on the feasibility bound, `√2` at the branch
    /// point beyond which `p̃+ − p̃− = ħU'/(2C²)` no longer holds.
    pub feasibility_margin: f64,
    /// `max_x |f_+ + f_- − U'|`; zero up to round-off inside the branch.
    pub force_mismatch: f64,
}

impl JetEnvironment {
    /// Whether the jets cancel `U'` exactly at every node.
    pub fn cancels_exactly(&self) -> bool {
        self.force_mismatch <= JET_IDENTITY_TOLERANCE
    }
}

impl JetEnvironment {
    /// Magnetic field profile `𝓑(x)` (a.u.).
    pub fn magnetic_field(&self) -> Vec<f64> {
        self.beta
            .iter()
            .map(|b| b / (2.0 * BOHR_MAGNETON * ELECTRON_MASS))
            .collect()
    }

    /// Forces `(f_+, f_-)` exerted by each jet.
    pub fn forces(&self) -> (Vec<f64>, Vec<f64>) {
        let c2 = self.coupling * self.coupling;
        (
            self.p_plus.iter().map(|p| 2.0 * c2 * p / HBAR).collect(),
            self.p_minus.iter().map(|p| -2.0 * c2 * p / HBAR).collect(),
        )
    }

    pub fn operators(&self) -> Vec<LindbladOp> {
        vec![self.a_plus.clone(), self.a_minus.clone()]
    }
}

/// Tolerance on `|f_+ + f_- − U'|` for exact cancellation.
const JET_IDENTITY_TOLERANCE: f64 = 1e-10;

/// Jets that cancel the force of a potential with derivative `du`.
pub fn jets_from_barrier(
    du: &[f64],
    coupling: f64,
    p0: f64,
    grid: &PhaseGrid,
) -> Result<JetEnvironment> {
    check_len(grid, du)?;
    positive("coupling", coupling)?;
    positive("p0", p0)?;
    let c2 = coupling * coupling;
    let c4 = c2 * c2;
    let n = grid.n_points();
    let mut beta = vec![0.0; n];
    for (i, &d) in du.iter().enumerate() {
        let scale = 16.0 * p0 * p0 * c4;
        let mut disc = scale - (HBAR * d).powi(2);
        if disc < 0.0 && disc > -1e-12 * scale {
            disc = 0.0;
        }
        if disc < 0.0 {
            return Err(QreError::Infeasible(format!(
                "discriminant 16 p0² C⁴ − (ħU')² = {disc:.3e} < 0 at x = {:.4} \
                 (need 4 p0 C² = {:.3e} ≥ ħ|U'| = {:.3e})",
                grid.x_values()[i],
                4.0 * p0 * c2,
                (HBAR * d).abs()
            )));
        }
        beta[i] = HBAR * d * disc.sqrt() / (8.0 * c4);
    }
    let p0sq = p0 * p0;
    let p_plus: Vec<f64> = beta.iter().map(|b| (p0sq + b).max(0.0).sqrt()).collect();
    let p_minus: Vec<f64> = beta.iter().map(|b| (p0sq - b).max(0.0).sqrt()).collect();
    let r = vec![coupling; n];
    let f_plus: Vec<f64> = p_plus.iter().map(|p| 2.0 * c2 * p / HBAR).collect();
    let f_minus: Vec<f64> = p_minus.iter().map(|p| -2.0 * c2 * p / HBAR).collect();
    let a_plus = build_position_lindblad(&f_plus, &r, grid)?;
    let a_minus = build_position_lindblad(&f_minus, &r, grid)?;
    let max_du = du.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let validity_margin = p0sq / beta.iter().fold(0.0_f64, |m, b| m.max(b.abs()));
    let feasibility_margin = 4.0 * p0 * c2 / (HBAR * max_du);
    let force_mismatch = f_plus
        .iter()
        .zip(&f_minus)
        .zip(du)
        .map(|((fp, fm), d)| (fp + fm - d).abs())
        .fold(0.0_f64, f64::max);
    if force_mismatch > JET_IDENTITY_TOLERANCE {
        log::warn!(
            "jets beyond the semiclassical branch (feasibility margin {feasibility_margin:.3} < √2): \
             net jet force misses U' by up to {force_mismatch:.3e}"
        );
    }
    Ok(JetEnvironment {
        a_plus,
        a_minus,
        beta,
        p_plus,
        p_minus,
        p0,
        coupling,
        validity_margin,
        feasibility_margin,
        force_mismatch,
    })
}

/// Jets whose net force mimics the potential with derivative `du_eff`.
pub fn trap_from_potential(
    du_eff: &[f64],
    coupling: f64,
    p0: f64,
    grid: &PhaseGrid,
) -> Result<JetEnvironment> {
    let negated: Vec<f64> = du_eff.iter().map(|d| -d).collect();
    jets_from_barrier(&negated, coupling, p0, grid)
}

/// Largest `p0` with a non-negative jet discriminant at fixed `C p0`.
pub fn jet_feasibility_bound(cp0: f64, max_abs_du: f64) -> f64 {
    4.0 * cp0 * cp0 / (HBAR * max_abs_du)
}

/// `p0` at which the semiclassical validity margin first reaches 1 at fixed
/// `C p0` (`|ħU'|/2C² = √2 p0` at the steepest point).
pub fn jet_validity_endpoint(cp0: f64, max_abs_du: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * cp0 * cp0 / (HBAR * max_abs_du)
}

/// `B(p) = C exp[−i(m − M)p²/(2mMC²)]`: particle of mass `m` moving as mass `M`.
pub fn effective_mass_op(
    mass: f64,
    effective_mass: f64,
    coupling: f64,
    grid: &PhaseGrid,
) -> Result<LindbladOp> {
    positive("mass", mass)?;
    positive("effective_mass", effective_mass)?;
    positive("coupling", coupling)?;
    let k = (mass - effective_mass) / (2.0 * mass * effective_mass * coupling * coupling);
    let phase = grid.sample_p(|p| -k * p * p);
    LindbladOp::from_polar(
        Representation::Momentum,
        vec![coupling; grid.n_points()],
        phase,
    )
}

/// Velocity correction `g(p) = (1/M − 1/m) p` implied by [`effective_mass_op`].
pub fn effective_mass_velocity(mass: f64, effective_mass: f64, p: f64) -> f64 {
    (1.0 / effective_mass - 1.0 / mass) * p
}

/// `B(p) = C exp[(i/C²)(p²/2m − c√(m²c² + p²))]`: quasi-relativistic dispersion.
pub fn relativistic_op(
    mass: f64,
    light_speed: f64,
    coupling: f64,
    grid: &PhaseGrid,
) -> Result<LindbladOp> {
    positive("mass", mass)?;
    positive("light_speed", light_speed)?;
    positive("coupling", coupling)?;
    let c2 = coupling * coupling;
    let mc = mass * light_speed;
    let phase = grid.sample_p(|p| (p * p / (2.0 * mass) - light_speed * (mc * mc + p * p).sqrt()) / c2);
    LindbladOp::from_polar(
        Representation::Momentum,
        vec![coupling; grid.n_points()],
        phase,
    )
}

/// Target velocity `G(p) = p/√(m² + p²/c²)` of the quasi-relativistic particle.
pub fn relativistic_velocity(mass: f64, light_speed: f64, p: f64) -> f64 {
    p / (mass * mass + p * p / (light_speed * light_speed)).sqrt()
}

fn check_len(grid: &PhaseGrid, v: &[f64]) -> Result<()> {
    if v.len() != grid.n_points() {
        Err(QreError::Shape {
            expected: grid.n_points(),
            got: v.len(),
        })
    } else {
        Ok(())
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(QreError::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

/// Serializable summary of a jet feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetFeasibility {
    pub p0: f64,
    pub coupling: f64,
    pub feasible: bool,
    pub validity_margin: f64,
    pub feasibility_margin: f64,
    pub message: String,
}

/// Feasibility of jets with the given parameters, without failing.
pub fn check_jets(du: &[f64], coupling: f64, p0: f64, grid: &PhaseGrid) -> JetFeasibility {
    match jets_from_barrier(du, coupling, p0, grid) {
        Ok(env) => JetFeasibility {
            p0,
            coupling,
            feasible: true,
            validity_margin: env.validity_margin,
            feasibility_margin: env.feasibility_margin,
            message: "ok".into(),
        },
        Err(e) => JetFeasibility {
            p0,
            coupling,
            feasible: false,
            validity_margin: f64::NAN,
            feasibility_margin: f64::NAN,
            message: e.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> PhaseGrid {
        PhaseGrid::new(n, -8.0, 8.0).unwrap()
    }

    #[test]
    fn zero_numerator_gives_zero_phase() {
        let g = grid(64);
        let theta = cumulative_phase(&[0.0; 64], &[0.0; 64], &g, Representation::Position).unwrap();
        assert!(theta.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn constant_integrand_gives_linear_ramp() {
        let g = grid(64);
        let kappa = 0.37;
        let theta =
            cumulative_phase(&[kappa * 2.0; 64], &[2.0; 64], &g, Representation::Position).unwrap();
        for (t, x) in theta.iter().zip(g.x_values()) {
            assert_abs_diff_eq!(*t, kappa * (x - g.x_min()), epsilon = 1e-12);
        }
        // momentum axis integrates in ascending p from the most negative node
        let theta = cumulative_phase(&[kappa; 64], &[1.0; 64], &g, Representation::Momentum).unwrap();
        for (t, p) in theta.iter().zip(g.p_values()) {
            assert_abs_diff_eq!(*t, kappa * (p + g.p_max()), epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_denominator_is_rejected() {
        let g = grid(16);
        let mut den = vec![1.0; 16];
        den[5] = 0.0;
        let err = cumulative_phase(&[1.0; 16], &den, &g, Representation::Position).unwrap_err();
        assert_eq!(
            err,
            QreError::SingularPhase {
                index: 5,
                numerator: 1.0
            }
        );
    }

    #[test]
    fn constant_operator_has_constant_value() {
        let g = grid(32);
        let a = build_position_lindblad(&[0.0; 32], &[0.7; 32], &g).unwrap();
        assert!(a.values().iter().all(|z| *z == Complex64::new(0.7, 0.0)));
        let b = build_momentum_lindblad(&[0.0; 32], &[0.7; 32], &g).unwrap();
        assert!(b.values().iter().all(|z| *z == Complex64::new(0.7, 0.0)));
    }

    #[test]
    fn magnitude_matches_r() {
        let g = grid(64);
        let r = g.sample_x(|x| 1.0 + 0.5 * (0.3 * x).sin().powi(2));
        let f = g.sample_x(|x| x.cos());
        let a = build_position_lindblad(&f, &r, &g).unwrap();
        for (z, m) in a.values().iter().zip(&r) {
            assert_abs_diff_eq!(z.norm(), *m, epsilon = 1e-12);
        }
    }

    #[test]
    fn jets_without_force_are_plane_waves() {
        let g = grid(64);
        let env = jets_from_barrier(&[0.0; 64], 2.0, 0.3, &g).unwrap();
        assert!(env.beta.iter().all(|b| *b == 0.0));
        assert!(env.p_plus.iter().all(|p| *p == 0.3));
        assert!(env.p_minus.iter().all(|p| *p == 0.3));
        assert!(env.validity_margin.is_infinite());
        for (i, &x) in g.x_values().iter().enumerate() {
            let dx = x - g.x_min();
            assert_abs_diff_eq!(env.a_plus.phase()[i], 2.0 * 0.3 * dx, epsilon = 1e-12);
            assert_abs_diff_eq!(env.a_minus.phase()[i], -2.0 * 0.3 * dx, epsilon = 1e-12);
            assert_abs_diff_eq!(env.a_plus.values()[i].norm(), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn infeasible_jets_are_rejected() {
        let g = grid(64);
        let du = g.sample_x(|x| 0.1 * (-x * x).exp());
        // 4 p0 C² = 4e-3 < 0.1
        assert!(matches!(
            jets_from_barrier(&du, 0.1, 0.1, &g),
            Err(QreError::Infeasible(_))
        ));
    }

    #[test]
    fn jets_beyond_the_branch_limit_undershoot_the_force() {
        let g = grid(64);
        let du = g.sample_x(|x| 0.1 * (-x * x).exp());
        let c: f64 = 1.0;
        // u = ħ max|U'| / (4 p0 C²) = 0.9, past 1/√2
        let p0 = 0.1 / (4.0 * 0.9 * c * c);
        let env = jets_from_barrier(&du, c, p0, &g).unwrap();
        assert!(env.feasibility_margin < std::f64::consts::SQRT_2);
        assert!((env.validity_margin - 1.0).abs() < 1e-3);
        assert!(!env.cancels_exactly());
        let (fp, fm) = env.forces();
        let i = g.n_points() / 2;
        let u: f64 = 0.9;
        assert_abs_diff_eq!(fp[i] + fm[i], 4.0 * c * c * p0 * (1.0 - u * u).sqrt(), epsilon = 1e-12);
        assert!(env.force_mismatch > 0.05);
    }

    #[test]
    fn effective_mass_identity_mass_is_constant() {
        let g = grid(32);
        let b = effective_mass_op(3.0, 3.0, 0.4, &g).unwrap();
        assert!(b.phase().iter().all(|t| *t == 0.0));
        assert!(b.magnitude().iter().all(|m| *m == 0.4));
    }

    #[test]
    fn relativistic_velocity_limits() {
        assert_eq!(relativistic_velocity(1.0, 10.0, 0.0), 0.0);
        let mut prev = 0.0;
        for k in 1..50 {
            let v = relativistic_velocity(1.0, 10.0, k as f64 * 20.0);
            assert!(v > prev && v < 10.0);
            prev = v;
        }
        assert!(10.0 - prev < 1e-3);
    }

    #[test]
    fn minimal_decomposition_closes() {
        let g = grid(64);
        let du = g.sample_x(|x| 0.2 * x);
        let targets = TargetDynamics::new(
            &g,
            g.sample_x(|x| -0.05 * x),
            g.sample_p(|p| p / 5.0),
        )
        .unwrap();
        let bath = BathDecomposition::minimal(&g, &targets, &du, 2.0, 1.5, 0.8).unwrap();
        assert_eq!(bath.position_baths.len(), 1);
        assert_eq!(bath.momentum_baths.len(), 1);
        bath.validate(&g, &targets, &du, 2.0).unwrap();
        let mut broken = bath.clone();
        broken.position_baths[0].0[3] += 1e-6;
        assert!(matches!(
            broken.validate(&g, &targets, &du, 2.0),
            Err(QreError::Decomposition { index: 3, .. })
        ));
        assert_eq!(bath.operators(&g).unwrap().len(), 2);
    }
}
