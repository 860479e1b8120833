use num_complex::Complex64;
use proptest::prelude::*;

use qre::propagator::Stepper;
use qre::synthesis::{build_momentum_lindblad, build_position_lindblad, jets_from_barrier};
use qre::{build_kernels, gaussian_density, GaussianSpec, PhaseGrid, ScenarioConfig};

const N: usize = 32;

fn grid() -> PhaseGrid {
    PhaseGrid::new(N, -10.0, 10.0).unwrap()
}

/// Smooth profile `a + b sin(k x + φ)` sampled on a grid axis.
fn profile(values: &[f64], (a, b, k, phi): (f64, f64, f64, f64)) -> Vec<f64> {
    values.iter().map(|v| a + b * (k * v + phi).sin()).collect()
}

fn shape() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-1.0..1.0, -1.0..1.0, 0.1..1.5, 0.0..6.3)
}

fn magnitude() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.8..1.6, -0.3..0.3, 0.1..1.0, 0.0..6.3)
}

fn packet() -> impl Strategy<Value = GaussianSpec> {
    (-1.0..1.0, -1.0..1.0, 0.6..1.2).prop_map(|(x0, p0_mean, sigma_x)| GaussianSpec { x0, p0_mean, sigma_x })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn global_phase_leaves_the_kernels_unchanged(f in shape(), r in magnitude(), phi in -10.0..10.0_f64) {
        let g = grid();
        let a = build_position_lindblad(&profile(g.x_values(), f), &profile(g.x_values(), r), &g).unwrap();
        let k1 = build_kernels(&g, &vec![0.0; N], 1.0, std::slice::from_ref(&a), 0.01).unwrap();
        let k2 = build_kernels(&g, &vec![0.0; N], 1.0, &[a.with_global_phase(phi)], 0.01).unwrap();
        let d = (&k1.position_kernel - &k2.position_kernel).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-14, "kernel changed by {d:e}");
    }

    #[test]
    fn kernel_entries_never_exceed_one(f in shape(), r in magnitude(), g_shape in shape(), dt in 0.001..0.03_f64) {
        let g = grid();
        let a = build_position_lindblad(&profile(g.x_values(), f), &profile(g.x_values(), r), &g).unwrap();
        let b = build_momentum_lindblad(&profile(g.p_values(), g_shape), &vec![1.0; N], &g).unwrap();
        let u = g.sample_x(|x| 0.05 * x * x);
        let k = build_kernels(&g, &u, 1.0, &[a, b], dt).unwrap();
        for z in k.position_kernel.iter().chain(k.momentum_kernel.iter()) {
            prop_assert!(z.norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn change_of_representation_is_an_isometry(spec in packet()) {
        let g = grid();
        let rho = gaussian_density(&g, &spec).unwrap();
        let mom = rho.to_momentum_rep().unwrap();
        prop_assert!((mom.trace() - rho.trace()).abs() <= 1e-12);
        prop_assert!((mom.purity() - rho.purity()).abs() <= 1e-12);
        let back = mom.to_position_rep().unwrap();
        prop_assert!(back.frobenius_distance(&rho) <= 1e-13);
    }

    #[test]
    fn steps_preserve_trace_and_hermiticity(spec in packet(), f in shape(), r in magnitude(), g_shape in shape()) {
        let g = grid();
        let a = build_position_lindblad(&profile(g.x_values(), f), &profile(g.x_values(), r), &g).unwrap();
        let b = build_momentum_lindblad(&profile(g.p_values(), g_shape), &vec![1.2; N], &g).unwrap();
        let k = build_kernels(&g, &g.sample_x(|x| 0.02 * x * x), 1.0, &[a, b], 0.01).unwrap();
        let mut rho = gaussian_density(&g, &spec).unwrap();
        let stepper = Stepper::new(&g);
        for _ in 0..20 {
            stepper.step(&mut rho, &k).unwrap();
        }
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-12);
        prop_assert!(rho.hermiticity_defect() <= 1e-12);
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
    }

    #[test]
    fn jets_cancel_the_force_inside_the_branch(k0 in 0.001..0.02_f64, c in 0.5..5.0_f64, u in 0.01..0.7_f64) {
        let g = PhaseGrid::new(64, -8.0, 8.0).unwrap();
        let du = g.sample_x(|x| -2.0 * k0 * x * (-0.5 * x * x).exp());
        let max_du = du.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let p0 = max_du / (4.0 * c * c * u);
        let j = jets_from_barrier(&du, c, p0, &g).unwrap();
        prop_assert!(j.cancels_exactly());
        prop_assert!(j.validity_margin >= 1.0);
        let (fp, fm) = j.forces();
        for i in 0..64 {
            prop_assert!((fp[i] + fm[i] - du[i]).abs() <= 1e-10 * max_du.max(1.0));
        }
    }

    #[test]
    fn configurations_round_trip(n_pow in 5u32..10, dt in 0.01..2.0_f64, steps in 1usize..500, kind in 0usize..4) {
        let kind = ["tunneling", "trapping", "effective_mass", "relativistic"][kind];
        let text = format!(
            "[scenario]\nkind = \"{kind}\"\n[grid]\nn_points = {}\n[schedule]\ndt = {dt}\nn_steps = {steps}\n",
            1usize << n_pow
        );
        let c = ScenarioConfig::parse(&text).unwrap();
        let again = ScenarioConfig::parse(&c.to_toml()).unwrap();
        prop_assert_eq!(c, again);
    }
}

#[test]
fn from_wavefunction_normalizes() {
    let g = grid();
    let psi: Vec<Complex64> = g.x_values().iter().map(|x| Complex64::new((-x * x).exp(), 0.3 * x)).collect();
    let rho = qre::DensityMatrix::from_wavefunction(g, &psi).unwrap();
    assert!((rho.trace() - 1.0).abs() < 1e-14);
    assert!((rho.purity() - 1.0).abs() < 1e-12);
}
