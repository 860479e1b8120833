//! Independent references: a dense Liouvillian integrated with classical RK4,
//! and closed-form trajectories.
//!
//! The dense route never uses the FFT or the pointwise kernels. Operators are
//! assembled as explicit `N × N` matrices (momentum-diagonal pieces through an
//! explicitly summed DFT) and the master equation becomes `dρ/dt = L ρ` on the
//! row-major vectorization of `ρ`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, Representation};
use crate::error::{QreError, Result};
use crate::grid::{PhaseGrid, HBAR};
use crate::synthesis::LindbladOp;

pub const MAX_ORACLE_POINTS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct DenseLiouvillian {
    pub superoperator: Array2<Complex64>,
    n: usize,
    /// Upper bound on the spectral norm of the superoperator.
    norm_bound: f64,
}

impl DenseLiouvillian {
    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn apply(&self, v: &Array1<Complex64>) -> Array1<Complex64> {
        let l = &self.superoperator;
        let out: Vec<Complex64> = (0..l.nrows())
            .into_par_iter()
            .map(|r| {
                l.row(r)
                    .iter()
                    .zip(v.iter())
                    .fold(ZERO, |acc, (a, b)| acc + a * b)
            })
            .collect();
        Array1::from(out)
    }

    /// `L ρ` reshaped as a matrix.
    pub fn apply_matrix(&self, rho: &Array2<Complex64>) -> Array2<Complex64> {
        let v = Array1::from_iter(rho.iter().copied());
        self.apply(&v)
            .into_shape_with_order((self.n, self.n))
            .expect("square")
    }
}

/// Explicit DFT matrix `F_jk = exp(−2πi jk/N)` (unnormalized).
fn dft_matrix(n: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((n, n), |(j, k)| {
        Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64)
    })
}

/// `F⁻¹ diag(values) F` as a full position-space matrix.
pub fn momentum_diagonal_matrix(values: &[Complex64]) -> Array2<Complex64> {
    let n = values.len();
    let f = dft_matrix(n);
    Array2::from_shape_fn((n, n), |(k, l)| {
        (0..n)
            .map(|j| f[(j, k)].conj() * values[j] * f[(j, l)])
            .sum::<Complex64>()
            / n as f64
    })
}

/// `p²/2m + U(x)` with the spectral kinetic term.
pub fn hamiltonian_matrix(grid: &PhaseGrid, potential: &[f64], mass: f64) -> Array2<Complex64> {
    let t: Vec<Complex64> = grid
        .sample_p(|p| p * p / (2.0 * mass))
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let mut h = momentum_diagonal_matrix(&t);
    for (i, u) in potential.iter().enumerate() {
        h[(i, i)] += u;
    }
    h
}

/// Full position-space matrix of a diagonal Lindblad operator.
pub fn operator_matrix(op: &LindbladOp) -> Array2<Complex64> {
    match op.representation() {
        Representation::Position => Array2::from_diag(&Array1::from(op.values().to_vec())),
        Representation::Momentum => momentum_diagonal_matrix(op.values()),
    }
}

fn dagger(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

fn to_nalgebra(a: &Array2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Adds `coef · (A ⊗ B)` to `l` (row-major vectorization: `vec(AρBᵀ)`).
fn add_kron(l: &mut Array2<Complex64>, a: &Array2<Complex64>, b: &Array2<Complex64>, coef: Complex64) {
    let n = a.nrows();
    l.axis_chunks_iter_mut(ndarray::Axis(0), n)
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut block_row)| {
            for k in 0..n {
                let aik = a[(i, k)] * coef;
                if aik == ZERO {
                    continue;
                }
                for j in 0..n {
                    for m in 0..n {
                        block_row[(j, k * n + m)] += aik * b[(j, m)];
                    }
                }
            }
        });
}

/// `L = −(i/ħ)(H⊗1 − 1⊗Hᵀ) + (1/ħ)Σ (A⊗Ā − ½A†A⊗1 − ½ 1⊗(A†A)ᵀ)`.
pub fn build_dense_liouvillian(
    hamiltonian: &Array2<Complex64>,
    ops: &[Array2<Complex64>],
    grid: &PhaseGrid,
) -> Result<DenseLiouvillian> {
    let n = grid.n_points();
    if n > MAX_ORACLE_POINTS {
        return Err(QreError::OracleSize(n));
    }
    for m in std::iter::once(hamiltonian).chain(ops) {
        if m.dim() != (n, n) {
            return Err(QreError::Shape {
                expected: n * n,
                got: m.len(),
            });
        }
    }
    let eye = Array2::<Complex64>::eye(n);
    let mut l = Array2::<Complex64>::zeros((n * n, n * n));
    let mi = Complex64::new(0.0, -1.0 / HBAR);
    add_kron(&mut l, hamiltonian, &eye, mi);
    add_kron(&mut l, &eye, &hamiltonian.t().to_owned(), -mi);

    let h_eigs = to_nalgebra(hamiltonian).symmetric_eigenvalues();
    let spread = h_eigs.max() - h_eigs.min();
    let mut norm_bound = spread / HBAR;

    let inv = Complex64::new(1.0 / HBAR, 0.0);
    for a in ops {
        let ada = dagger(a).dot(a);
        add_kron(&mut l, a, &a.mapv(|z| z.conj()), inv);
        add_kron(&mut l, &ada, &eye, -0.5 * inv);
        add_kron(&mut l, &eye, &ada.t().to_owned(), -0.5 * inv);
        let s = to_nalgebra(a).singular_values().max();
        norm_bound += 2.0 * s * s / HBAR;
    }
    Ok(DenseLiouvillian {
        superoperator: l,
        n,
        norm_bound,
    })
}

/// Builds the dense Liouvillian for `p²/2m + U` with diagonal Lindblad operators.
pub fn dense_from_parts(
    grid: &PhaseGrid,
    potential: &[f64],
    mass: f64,
    ops: &[LindbladOp],
) -> Result<DenseLiouvillian> {
    if grid.n_points() > MAX_ORACLE_POINTS {
        return Err(QreError::OracleSize(grid.n_points()));
    }
    let h = hamiltonian_matrix(grid, potential, mass);
    let mats: Vec<_> = ops.iter().map(operator_matrix).collect();
    build_dense_liouvillian(&h, &mats, grid)
}

/// Largest `‖L‖·dt` accepted by [`rk4_evolve`].
pub const RK4_STABILITY_LIMIT: f64 = 0.1;

/// Classical fourth-order Runge–Kutta integration of `dρ/dt = Lρ`.
pub fn rk4_evolve(
    l: &DenseLiouvillian,
    rho0: &DensityMatrix,
    dt: f64,
    n_steps: usize,
) -> Result<DensityMatrix> {
    rho0.expect(Representation::Position)?;
    if rho0.grid().n_points() != l.n {
        return Err(QreError::Shape {
            expected: l.n,
            got: rho0.grid().n_points(),
        });
    }
    if !(dt > 0.0) || l.norm_bound * dt >= RK4_STABILITY_LIMIT {
        return Err(QreError::StepSize(format!(
            "‖L‖·dt = {:.3e} must be below {RK4_STABILITY_LIMIT}",
            l.norm_bound * dt
        )));
    }
    let mut v = Array1::from_iter(rho0.elements().iter().copied());
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    for _ in 0..n_steps {
        let k1 = l.apply(&v);
        let k2 = l.apply(&(&v + &(&k1 * half)));
        let k3 = l.apply(&(&v + &(&k2 * half)));
        let k4 = l.apply(&(&v + &(&k3 * full)));
        v = &v + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * sixth);
    }
    let n = l.n;
    DensityMatrix::from_elements(
        rho0.grid().clone(),
        v.into_shape_with_order((n, n)).expect("square"),
        Representation::Position,
    )
}

/// Closed-form reference trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparator {
    /// `σ_x(t)² = σ² + (ħt/(2mσ))²`.
    FreeGaussianSpread { sigma_x: f64, mass: f64 },
    /// `⟨x⟩(t) = x0 + p0 t/M + F t²/(2M)` for the constant force `F = −U'`.
    LinearPotentialNewton { x0: f64, p0: f64, force: f64, mass: f64 },
    /// `v(t) = c p(t)/√(m²c² + p(t)²)`, `p(t) = p0 + F t`.
    ClassicalRelativistic { mass: f64, light_speed: f64, p0: f64, force: f64 },
    /// Probability beyond `threshold` of a freely moving Gaussian.
    FreeTransmission { x0: f64, p0: f64, sigma_x: f64, mass: f64, threshold: f64 },
}

impl Comparator {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FreeGaussianSpread { .. } => "free_gaussian_spread",
            Self::LinearPotentialNewton { .. } => "linear_potential_newton",
            Self::ClassicalRelativistic { .. } => "classical_relativistic",
            Self::FreeTransmission { .. } => "free_transmission",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::FreeGaussianSpread { sigma_x, mass } => {
                let s = HBAR * t / (2.0 * mass * sigma_x);
                sigma_x * sigma_x + s * s
            }
            Self::LinearPotentialNewton { x0, p0, force, mass } => {
                x0 + p0 * t / mass + 0.5 * force * t * t / mass
            }
            Self::ClassicalRelativistic {
                mass,
                light_speed,
                p0,
                force,
            } => {
                let p = p0 + force * t;
                let mc = mass * light_speed;
                light_speed * p / (mc * mc + p * p).sqrt()
            }
            Self::FreeTransmission {
                x0,
                p0,
                sigma_x,
                mass,
                threshold,
            } => {
                let mean = x0 + p0 * t / mass;
                let s = HBAR * t / (2.0 * mass * sigma_x);
                let sd = (sigma_x * sigma_x + s * s).sqrt();
                0.5 * statrs::function::erf::erfc((threshold - mean) / (sd * std::f64::consts::SQRT_2))
            }
        }
    }

    pub fn series(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.eval(t)).collect()
    }
}

/// Kind names accepted by [`analytic_comparators`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparatorKind {
    FreeGaussianSpread,
    LinearPotentialNewton,
    ClassicalRelativistic,
    FreeTransmission,
}

impl FromStr for ComparatorKind {
    type Err = QreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free_gaussian_spread" => Ok(Self::FreeGaussianSpread),
            "linear_potential_newton" => Ok(Self::LinearPotentialNewton),
            "classical_relativistic" => Ok(Self::ClassicalRelativistic),
            "free_transmission" => Ok(Self::FreeTransmission),
            other => Err(QreError::UnknownComparator(other.to_string())),
        }
    }
}

/// Evaluates a named comparator; `params` is read in the field order of the
/// corresponding [`Comparator`] variant.
pub fn analytic_comparators(kind: &str, params: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    let need = |k: usize| -> Result<()> {
        if params.len() == k {
            Ok(())
        } else {
            Err(QreError::InvalidParameter {
                name: "params",
                reason: format!("comparator `{kind}` takes {k} parameters, got {}", params.len()),
            })
        }
    };
    let c = match kind.parse::<ComparatorKind>()? {
        ComparatorKind::FreeGaussianSpread => {
            need(2)?;
            Comparator::FreeGaussianSpread {
                sigma_x: params[0],
                mass: params[1],
            }
        }
        ComparatorKind::LinearPotentialNewton => {
            need(4)?;
            Comparator::LinearPotentialNewton {
                x0: params[0],
                p0: params[1],
                force: params[2],
                mass: params[3],
            }
        }
        ComparatorKind::ClassicalRelativistic => {
            need(4)?;
            Comparator::ClassicalRelativistic {
                mass: params[0],
                light_speed: params[1],
                p0: params[2],
                force: params[3],
            }
        }
        ComparatorKind::FreeTransmission => {
            need(5)?;
            Comparator::FreeTransmission {
                x0: params[0],
                p0: params[1],
                sigma_x: params[2],
                mass: params[3],
                threshold: params[4],
            }
        }
    };
    Ok(c.series(times))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{gaussian_density, GaussianSpec};
    use crate::synthesis::{build_position_lindblad, effective_mass_op};
    use approx::assert_abs_diff_eq;

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex64> {
        // small deterministic LCG; no hidden randomness
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Array2::from_shape_fn((n, n), |_| Complex64::new(next(), next()));
        (&a + &dagger(&a)) * Complex64::new(0.5, 0.0)
    }

    #[test]
    fn no_ops_gives_commutator() {
        let g = PhaseGrid::new(8, -3.0, 3.0).unwrap();
        let u = g.sample_x(|x| 0.3 * x * x);
        let h = hamiltonian_matrix(&g, &u, 1.5);
        let l = build_dense_liouvillian(&h, &[], &g).unwrap();
        let rho = random_hermitian(8, 3);
        let lhs = l.apply_matrix(&rho);
        let rhs = (h.dot(&rho) - rho.dot(&h)) * Complex64::new(0.0, -1.0);
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_op_contributes_nothing() {
        let g = PhaseGrid::new(8, -3.0, 3.0).unwrap();
        let h = hamiltonian_matrix(&g, &[0.0; 8], 1.0);
        let c = Array2::<Complex64>::eye(8) * Complex64::new(0.8, 0.0);
        let l0 = build_dense_liouvillian(&h, &[], &g).unwrap();
        let l1 = build_dense_liouvillian(&h, &[c], &g).unwrap();
        let diff = (&l0.superoperator - &l1.superoperator)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn trace_annihilation_and_hermiticity() {
        let g = PhaseGrid::new(16, -4.0, 4.0).unwrap();
        let u = g.sample_x(|x| (-x * x).exp());
        let a = build_position_lindblad(&g.sample_x(|x| x.sin()), &[0.9; 16], &g).unwrap();
        let b = effective_mass_op(1.0, 3.0, 0.5, &g).unwrap();
        let l = dense_from_parts(&g, &u, 1.0, &[a, b]).unwrap();
        let rho = random_hermitian(16, 11);
        let out = l.apply_matrix(&rho);
        let tr: Complex64 = out.diag().iter().sum();
        assert!(tr.norm() < 1e-12);
        let herm = (&out - &dagger(&out)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(herm < 1e-12);
    }

    #[test]
    fn oracle_size_limit() {
        let g = PhaseGrid::new(128, -4.0, 4.0).unwrap();
        assert!(matches!(
            dense_from_parts(&g, &[0.0; 128], 1.0, &[]),
            Err(QreError::OracleSize(128))
        ));
    }

    #[test]
    fn unitary_rk4_preserves_purity() {
        let g = PhaseGrid::new(16, -6.0, 6.0).unwrap();
        let u = g.sample_x(|x| 0.05 * x * x);
        let l = dense_from_parts(&g, &u, 1.0, &[]).unwrap();
        let rho = gaussian_density(
            &g,
            &GaussianSpec {
                x0: -0.5,
                p0_mean: 0.5,
                sigma_x: 0.6,
            },
        )
        .unwrap();
        let dt = 0.05 / l.norm_bound();
        let out = rk4_evolve(&l, &rho, dt, 200).unwrap();
        assert_abs_diff_eq!(out.purity(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            rk4_evolve(&l, &rho, 1.0 / l.norm_bound(), 1),
            Err(QreError::StepSize(_))
        ));
    }

    #[test]
    fn comparators() {
        let spread = analytic_comparators("free_gaussian_spread", &[1.3, 2.0], &[0.0]).unwrap();
        assert_eq!(spread[0], 1.3 * 1.3);
        let v = analytic_comparators("classical_relativistic", &[1.0, 10.0, 0.0, 1e3], &[0.0, 1e-3, 1.0, 1e3])
            .unwrap();
        assert_eq!(v[0], 0.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(v.iter().all(|&v| v < 10.0));
        assert!(matches!(
            analytic_comparators("warp_drive", &[], &[0.0]),
            Err(QreError::UnknownComparator(_))
        ));
    }
}
