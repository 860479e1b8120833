//! Strang-split propagation of the Lindblad equation with exact pointwise
//! kernels.
//!
//! For a generator made only of position-diagonal pieces (`U(x)` and
//! `A_k(x)`), the equation for `ρ(x, x')` decouples element by element:
//!
//! ```text
//! dρ(x,x')/dt = [−(i/ħ)(U(x) − U(x')) + (1/ħ)Σ_k (A_k(x)A_k*(x') − ½|A_k(x)|² − ½|A_k(x')|²)] ρ(x,x')
//! ```
//!
//! so one step is a multiplication by `exp(τ · bracket)`. The kinetic term and
//! the `B_n(p)` operators give the same structure in the momentum
//! representation. A step is `K_x(dt/2) · F⁻¹ K_p(dt) F · K_x(dt/2)`.

use log::warn;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, Representation};
use crate::error::{QreError, Result};
use crate::fourier::FourierPlan;
use crate::grid::{PhaseGrid, HBAR};
use crate::observables::{Densities, Observer, TimeSeries};
use crate::synthesis::LindbladOp;

/// Phase increment per substep above which a step is rejected.
pub const MAX_PHASE_INCREMENT: f64 = 0.5;
/// Phase increment per substep above which a warning is logged.
pub const WARN_PHASE_INCREMENT: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct KernelSet {
    pub position_kernel: Array2<Complex64>,
    pub momentum_kernel: Array2<Complex64>,
    pub dt_x: f64,
    pub dt_p: f64,
    /// Largest `τ·|Im exponent|` over each kernel: (position, momentum).
    pub phase_increment: (f64, f64),
    /// Transposed momentum kernel divided by `N²`, used by [`Stepper`].
    fused_momentum: Array2<Complex64>,
}

impl KernelSet {
    pub fn dt(&self) -> f64 {
        self.dt_p
    }

    pub fn max_phase_increment(&self) -> f64 {
        self.phase_increment.0.max(self.phase_increment.1)
    }

    /// `max |K(ξ,ξ') − conj(K(ξ',ξ))|` over both kernels.
    pub fn symmetry_defect(&self) -> f64 {
        let defect = |k: &Array2<Complex64>| {
            let n = k.nrows();
            let mut d = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    d = d.max((k[(i, j)] - k[(j, i)].conj()).norm());
                }
            }
            d
        };
        defect(&self.position_kernel).max(defect(&self.momentum_kernel))
    }
}

/// Diagonal generator data in polar form for one representation.
struct DiagonalGenerator<'a> {
    energy: &'a [f64],
    ops: Vec<&'a LindbladOp>,
}

impl DiagonalGenerator<'_> {
    /// Exponent rate `k(i, j)`; exactly zero on the diagonal.
    #[inline]
    fn rate(&self, i: usize, j: usize) -> Complex64 {
        let mut re = 0.0;
        let mut im = -(self.energy[i] - self.energy[j]);
        for op in &self.ops {
            let (ri, rj) = (op.magnitude()[i], op.magnitude()[j]);
            let d = op.phase()[i] - op.phase()[j];
            let s = (0.5 * d).sin();
            // R_i R_j (e^{id} − 1) − ½(R_i − R_j)²
            re += -2.0 * ri * rj * s * s - 0.5 * (ri - rj) * (ri - rj);
            im += ri * rj * d.sin();
        }
        Complex64::new(re, im) / HBAR
    }

    /// `exp(τ k(i,j))` with exact conjugate symmetry and unit diagonal.
    fn kernel(&self, n: usize, tau: f64) -> (Array2<Complex64>, f64) {
        let rows: Vec<(Vec<Complex64>, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut max_im = 0.0_f64;
                let row = (i..n)
                    .map(|j| {
                        if i == j {
                            return Complex64::new(1.0, 0.0);
                        }
                        let z = self.rate(i, j) * tau;
                        max_im = max_im.max(z.im.abs());
                        z.exp()
                    })
                    .collect();
                (row, max_im)
            })
            .collect();
        let mut k = Array2::zeros((n, n));
        let mut max_im = 0.0_f64;
        for (i, (row, m)) in rows.into_iter().enumerate() {
            max_im = max_im.max(m);
            for (off, z) in row.into_iter().enumerate() {
                let j = i + off;
                k[(i, j)] = z;
                k[(j, i)] = z.conj();
            }
        }
        (k, max_im)
    }
}

/// Builds the position (`dt/2`) and momentum (`dt`) kernels.
pub fn build_kernels(
    grid: &PhaseGrid,
    potential: &[f64],
    mass: f64,
    ops: &[LindbladOp],
    dt: f64,
) -> Result<KernelSet> {
    let n = grid.n_points();
    if potential.len() != n {
        return Err(QreError::Shape {
            expected: n,
            got: potential.len(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(QreError::StepSize(format!("dt must be positive, got {dt}")));
    }
    if !(mass > 0.0) {
        return Err(QreError::InvalidParameter {
            name: "mass",
            reason: format!("must be positive, got {mass}"),
        });
    }
    for op in ops {
        if op.values().len() != n {
            return Err(QreError::Shape {
                expected: n,
                got: op.values().len(),
            });
        }
    }
    let kinetic: Vec<f64> = grid.sample_p(|p| p * p / (2.0 * mass));
    let pos = DiagonalGenerator {
        energy: potential,
        ops: ops
            .iter()
            .filter(|o| o.representation() == Representation::Position)
            .collect(),
    };
    let mom = DiagonalGenerator {
        energy: &kinetic,
        ops: ops
            .iter()
            .filter(|o| o.representation() == Representation::Momentum)
            .collect(),
    };
    let (position_kernel, px) = pos.kernel(n, 0.5 * dt);
    let (momentum_kernel, pp) = mom.kernel(n, dt);
    let scale = 1.0 / (n * n) as f64;
    let fused_momentum = momentum_kernel.t().mapv(|z| z * scale).as_standard_layout().into_owned();
    let set = KernelSet {
        position_kernel,
        momentum_kernel,
        fused_momentum,
        dt_x: 0.5 * dt,
        dt_p: dt,
        phase_increment: (px, pp),
    };
    let inc = set.max_phase_increment();
    if inc > MAX_PHASE_INCREMENT {
        return Err(QreError::StepSize(format!(
            "phase increment per substep {inc:.3} rad exceeds {MAX_PHASE_INCREMENT} rad; reduce dt"
        )));
    }
    if inc > WARN_PHASE_INCREMENT {
        warn!("phase increment per substep is {inc:.3} rad (dt = {dt})");
    }
    Ok(set)
}

/// Workspace for repeated steps on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    plan: FourierPlan,
}

impl Stepper {
    pub fn new(grid: &PhaseGrid) -> Self {
        Self {
            plan: FourierPlan::new(grid),
        }
    }

    /// One symmetric split step, in place.
    pub fn step(&self, rho: &mut DensityMatrix, kernels: &KernelSet) -> Result<()> {
        rho.expect(Representation::Position)?;
        let n = rho.grid().n_points();
        if kernels.position_kernel.dim() != (n, n) {
            return Err(QreError::Shape {
                expected: n * n,
                got: kernels.position_kernel.len(),
            });
        }
        let m = rho.elements_mut();
        pointwise(m, &kernels.position_kernel);
        self.plan.transposed_pass(m);
        pointwise(m, &kernels.fused_momentum);
        self.plan.transposed_pass(m);
        pointwise(m, &kernels.position_kernel);
        Ok(())
    }
}

fn pointwise(m: &mut Array2<Complex64>, k: &Array2<Complex64>) {
    m.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(4096)
        .zip(k.as_slice().expect("standard layout").par_chunks(4096))
        .for_each(|(a, b)| a.iter_mut().zip(b).for_each(|(x, y)| *x *= y));
}

/// One Strang step returning a new snapshot.
pub fn strang_step(rho: &DensityMatrix, kernels: &KernelSet) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    Stepper::new(rho.grid()).step(&mut out, kernels)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(QreError::StepSize(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(QreError::InvalidParameter {
                name: "record_every",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardConfig {
    /// Population allowed in the outer bands of either grid, relative to the trace.
    pub edge_density: f64,
    pub trace_drift: f64,
    pub purity_overshoot: f64,
    /// Minimum eigenvalue floor; audited at every record when `N ≤ 64`.
    pub positivity: f64,
    /// Also audit positivity of the final state on larger grids.
    pub audit_final_positivity: bool,
}

impl Default for GuardConfig {
    fn default() -> Self {
        Self {
            edge_density: 1e-6,
            trace_drift: 1e-8,
            purity_overshoot: 1e-8,
            positivity: -1e-8,
            audit_final_positivity: false,
        }
    }
}

/// Diagnostics gathered while propagating.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub max_purity: f64,
    pub min_eigenvalue: Option<f64>,
    pub max_edge_density: f64,
}

/// Output of [`propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    pub series: TimeSeries,
    pub final_state: DensityMatrix,
    pub diagnostics: RunDiagnostics,
}

fn edge_population(density: &[f64], band: usize, order: Option<&[usize]>) -> f64 {
    let n = density.len();
    match order {
        None => density[..band].iter().chain(&density[n - band..]).sum(),
        Some(ix) => ix[..band]
            .iter()
            .chain(&ix[n - band..])
            .map(|&i| density[i])
            .sum(),
    }
}

/// Applies `schedule.n_steps` Strang steps, recording every `record_every`
/// steps (and at step 0). Guards are checked at every record.
pub fn propagate(
    rho0: &DensityMatrix,
    kernels: &KernelSet,
    schedule: &Schedule,
    observer: &Observer,
    guards: &GuardConfig,
) -> Result<Propagation> {
    schedule.validate()?;
    if (schedule.dt - kernels.dt()).abs() > 1e-12 * schedule.dt {
        return Err(QreError::StepSize(format!(
            "schedule dt {} differs from kernel dt {}",
            schedule.dt,
            kernels.dt()
        )));
    }
    let grid = rho0.grid().clone();
    let stepper = Stepper::new(&grid);
    let mut rho = rho0.clone();
    let trace0 = rho0.trace();
    let band = grid.edge_band();
    let p_order = grid.p_sorted_indices();
    let audit_each = grid.n_points() <= 64;
    let mut series = TimeSeries::default();
    let mut diag = RunDiagnostics {
        max_purity: 0.0,
        ..Default::default()
    };

    let check = |step: usize, rho: &DensityMatrix, series: &mut TimeSeries, diag: &mut RunDiagnostics| -> Result<()> {
        let t = step as f64 * schedule.dt;
        let d = Densities::of(rho)?;
        let rec = observer.record(rho, &d, t);
        let trip = |diagnostic: String| QreError::Guard { step, diagnostic };

        let drift = (rec.trace - trace0).abs();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > guards.trace_drift {
            return Err(trip(format!("trace drift {drift:.3e} > {:.1e}", guards.trace_drift)));
        }
        let edge_x = edge_population(&d.x, band, None) * grid.dx() / rec.trace;
        let edge_p = edge_population(&d.p, band, Some(&p_order)) * grid.dp() / rec.trace;
        let edge = edge_x.max(edge_p);
        diag.max_edge_density = diag.max_edge_density.max(edge);
        if edge > guards.edge_density {
            let which = if edge_x >= edge_p { "position" } else { "momentum" };
            return Err(trip(format!(
                "{which} edge density {edge:.3e} > {:.1e} (box too small or packet wrapped)",
                guards.edge_density
            )));
        }
        diag.max_purity = diag.max_purity.max(rec.purity);
        if rec.purity > 1.0 + guards.purity_overshoot {
            return Err(trip(format!("purity {:.12} exceeds 1", rec.purity)));
        }
        diag.max_hermiticity_defect = diag.max_hermiticity_defect.max(rho.hermiticity_defect());
        if audit_each {
            let ev = rho.min_eigenvalue();
            diag.min_eigenvalue = Some(diag.min_eigenvalue.map_or(ev, |m: f64| m.min(ev)));
            if ev < guards.positivity {
                return Err(trip(format!("negative eigenvalue {ev:.3e}")));
            }
        }
        series.push(rec);
        Ok(())
    };

    check(0, &rho, &mut series, &mut diag)?;
    for step in 1..=schedule.n_steps {
        stepper.step(&mut rho, kernels)?;
        if step % schedule.record_every == 0 || step == schedule.n_steps {
            check(step, &rho, &mut series, &mut diag)?;
        }
    }
    if guards.audit_final_positivity && !audit_each {
        let ev = rho.min_eigenvalue();
        diag.min_eigenvalue = Some(ev);
        if ev < guards.positivity {
            return Err(QreError::Guard {
                step: schedule.n_steps,
                diagnostic: format!("negative eigenvalue {ev:.3e} at final time"),
            });
        }
    }
    Ok(Propagation {
        series,
        final_state: rho,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{gaussian_density, GaussianSpec};
    use crate::synthesis::build_position_lindblad;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(32, -8.0, 8.0).unwrap()
    }

    #[test]
    fn free_position_kernel_is_one() {
        let g = grid();
        let k = build_kernels(&g, &[0.0; 32], 1.0, &[], 0.01).unwrap();
        assert!(k.position_kernel.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn kernel_diagonal_is_unity_and_contractive() {
        let g = grid();
        let f = g.sample_x(|x| (1.3 * x).sin() + 0.2 * x);
        let r = g.sample_x(|x| 0.5 + 0.3 * (0.7 * x).cos().powi(2));
        let op = build_position_lindblad(&f, &r, &g).unwrap();
        let u = g.sample_x(|x| 0.01 * x * x);
        let k = build_kernels(&g, &u, 2.0, &[op], 0.05).unwrap();
        for i in 0..32 {
            assert_eq!(k.position_kernel[(i, i)], Complex64::new(1.0, 0.0));
            assert_eq!(k.momentum_kernel[(i, i)], Complex64::new(1.0, 0.0));
        }
        assert!(k.position_kernel.iter().all(|z| z.norm() <= 1.0 + 1e-15));
        assert_eq!(k.symmetry_defect(), 0.0);
    }

    #[test]
    fn rejects_large_steps() {
        let g = grid();
        let u = g.sample_x(|x| x * x);
        assert!(matches!(
            build_kernels(&g, &u, 1.0, &[], 1.0),
            Err(QreError::StepSize(_))
        ));
        assert!(matches!(
            build_kernels(&g, &u, 1.0, &[], -1.0),
            Err(QreError::StepSize(_))
        ));
    }

    #[test]
    fn zero_steps_record_initial_state_only() {
        let g = grid();
        let rho = gaussian_density(
            &g,
            &GaussianSpec {
                x0: 0.0,
                p0_mean: 0.0,
                sigma_x: 1.0,
            },
        )
        .unwrap();
        let k = build_kernels(&g, &[0.0; 32], 1.0, &[], 0.01).unwrap();
        let obs = Observer {
            potential: vec![0.0; 32],
            potential_derivative: vec![0.0; 32],
            mass: 1.0,
            targets: None,
            transmission_threshold: None,
        };
        let s = Schedule {
            dt: 0.01,
            n_steps: 0,
            record_every: 1,
        };
        let out = propagate(&rho, &k, &s, &obs, &GuardConfig::default()).unwrap();
        assert_eq!(out.series.len(), 1);
        assert_eq!(out.final_state, rho);
    }

    #[test]
    fn step_requires_position_representation() {
        let g = grid();
        let rho = DensityMatrix::maximally_mixed(g.clone()).to_momentum_rep().unwrap();
        let k = build_kernels(&g, &[0.0; 32], 1.0, &[], 0.01).unwrap();
        assert!(matches!(
            strang_step(&rho, &k),
            Err(QreError::Representation { .. })
        ));
    }

    #[test]
    fn fused_step_matches_explicit_transforms() {
        let g = grid();
        let rho = gaussian_density(
            &g,
            &GaussianSpec {
                x0: 0.7,
                p0_mean: -1.1,
                sigma_x: 0.8,
            },
        )
        .unwrap();
        let f = g.sample_x(|x| 0.3 * x.cos());
        let op = build_position_lindblad(&f, &[0.6; 32], &g).unwrap();
        let u = g.sample_x(|x| 0.02 * x * x);
        let k = build_kernels(&g, &u, 1.3, &[op], 0.02).unwrap();

        let mut m = rho.elements() * &k.position_kernel;
        let plan = FourierPlan::new(&g);
        plan.to_momentum(&mut m, false);
        m *= &k.momentum_kernel;
        plan.to_position(&mut m, false);
        m *= &k.position_kernel;

        let fused = strang_step(&rho, &k).unwrap();
        let d = (fused.elements() - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < 1e-14, "{d}");
    }
}
