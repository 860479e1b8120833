//! Density matrices on a [`PhaseGrid`] and Gaussian initial states.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{QreError, Result};
use crate::fourier::FourierPlan;
use crate::grid::{PhaseGrid, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Position,
    Momentum,
}

/// `ρ(ξ_i, ξ_j)` sampled on the position or momentum grid.
///
/// Elements carry the continuum normalization, so the trace is
/// `Σ ρ_ii dξ` and the purity `Σ |ρ_ij|² dξ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    grid: PhaseGrid,
    elements: Array2<Complex64>,
    representation: Representation,
}

impl DensityMatrix {
    pub fn from_elements(
        grid: PhaseGrid,
        elements: Array2<Complex64>,
        representation: Representation,
    ) -> Result<Self> {
        let n = grid.n_points();
        if elements.dim() != (n, n) {
            return Err(QreError::Shape {
                expected: n * n,
                got: elements.len(),
            });
        }
        let elements = if elements.is_standard_layout() {
            elements
        } else {
            elements.as_standard_layout().into_owned()
        };
        Ok(Self {
            grid,
            elements,
            representation,
        })
    }

    /// Pure state `ψ(x)ψ*(x')` from position samples (normalized here).
    pub fn from_wavefunction(grid: PhaseGrid, psi: &[Complex64]) -> Result<Self> {
        let n = grid.n_points();
        if psi.len() != n {
            return Err(QreError::Shape {
                expected: n,
                got: psi.len(),
            });
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QreError::InvalidParameter {
                name: "psi",
                reason: "wavefunction has zero or non-finite norm".into(),
            });
        }
        let s = 1.0 / norm.sqrt();
        let psi: Vec<Complex64> = psi.iter().map(|z| z * s).collect();
        let elements = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj());
        Ok(Self {
            grid,
            elements,
            representation: Representation::Position,
        })
    }

    /// `𝟙/(N dx)`: unit trace, purity exactly `1/N`.
    pub fn maximally_mixed(grid: PhaseGrid) -> Self {
        let n = grid.n_points();
        let v = 1.0 / (n as f64 * grid.dx());
        let mut elements = Array2::zeros((n, n));
        for i in 0..n {
            elements[(i, i)] = Complex64::new(v, 0.0);
        }
        Self {
            grid,
            elements,
            representation: Representation::Position,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn elements(&self) -> &Array2<Complex64> {
        &self.elements
    }

    pub(crate) fn elements_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.elements
    }

    pub fn into_elements(self) -> Array2<Complex64> {
        self.elements
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Integration weight of the current representation.
    pub fn measure(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.elements.diag().iter().map(|z| z.re).sum::<f64>() * self.measure()
    }

    pub fn purity(&self) -> f64 {
        let w = self.measure();
        self.elements.iter().map(|z| z.norm_sqr()).sum::<f64>() * w * w
    }

    /// `max|ρ_ij − conj(ρ_ji)| / max|ρ|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.grid.n_points();
        let mut defect = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let a = self.elements[(i, j)];
                scale = scale.max(a.norm());
                if j > i {
                    defect = defect.max((a - self.elements[(j, i)].conj()).norm());
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    /// Real diagonal `ρ(ξ_i, ξ_i)` of the current representation.
    pub fn diagonal(&self) -> Vec<f64> {
        self.elements.diag().iter().map(|z| z.re).collect()
    }

    /// Momentum-space probability density `ρ̃(p_j, p_j)` in FFT order.
    ///
    /// From the position representation this sums the circular diagonals of
    /// `ρ` and transforms once, which costs `O(N²)` instead of a full 2-D FFT.
    pub fn momentum_density(&self) -> Vec<f64> {
        match self.representation {
            Representation::Momentum => self.diagonal(),
            Representation::Position => {
                let n = self.grid.n_points();
                // s_d = Σ_k ρ_{k+d, k}; ρ̃(p,p) ∝ Σ_d s_d e^{-2πi jd/N}
                let mut s = vec![Complex64::new(0.0, 0.0); n];
                for k in 0..n {
                    for (d, sd) in s.iter_mut().enumerate() {
                        *sd += self.elements[((k + d) % n, k)];
                    }
                }
                FftPlanner::new().plan_fft_forward(n).process(&mut s);
                let c2 = self.grid.dx() * self.grid.dx() / (2.0 * PI * HBAR);
                s.iter().map(|z| z.re * c2).collect()
            }
        }
    }

    /// Smallest eigenvalue of the operator `ρ·dξ` (unit-trace normalization).
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.grid.n_points();
        let w = self.measure();
        let m = DMatrix::from_fn(n, n, |i, j| {
            // explicit hermitian part; the defect is audited separately
            0.5 * (self.elements[(i, j)] + self.elements[(j, i)].conj()) * w
        });
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_momentum_rep(&self) -> Result<Self> {
        self.expect(Representation::Position)?;
        let mut out = self.clone();
        FourierPlan::new(&self.grid).to_momentum(&mut out.elements, true);
        out.representation = Representation::Momentum;
        Ok(out)
    }

    pub fn to_position_rep(&self) -> Result<Self> {
        self.expect(Representation::Momentum)?;
        let mut out = self.clone();
        FourierPlan::new(&self.grid).to_position(&mut out.elements, true);
        out.representation = Representation::Position;
        Ok(out)
    }

    pub(crate) fn expect(&self, r: Representation) -> Result<()> {
        if self.representation == r {
            Ok(())
        } else {
            Err(QreError::Representation {
                expected: r,
                got: self.representation,
            })
        }
    }

    /// Operator (Hilbert–Schmidt) distance `‖ρ − σ‖_F` including the measure.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        let w = self.measure();
        self.elements
            .iter()
            .zip(other.elements.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * w
    }
}

/// Moments of a Gaussian wavepacket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub x0: f64,
    pub p0_mean: f64,
    pub sigma_x: f64,
}

impl GaussianSpec {
    /// `(p0² + ħ²/(4σ²)) / 2m`
    pub fn mean_kinetic_energy(&self, mass: f64) -> f64 {
        (self.p0_mean * self.p0_mean + HBAR * HBAR / (4.0 * self.sigma_x * self.sigma_x))
            / (2.0 * mass)
    }

    /// Mean momentum of a packet with kinetic energy `k0`, ignoring the width term.
    pub fn momentum_for_energy(k0: f64, mass: f64) -> f64 {
        (2.0 * mass * k0).sqrt()
    }

    /// Ground state of `½ m ω² x²` centred at the origin.
    pub fn harmonic_ground_state(mass: f64, omega: f64) -> Self {
        Self {
            x0: 0.0,
            p0_mean: 0.0,
            sigma_x: (HBAR / (2.0 * mass * omega)).sqrt(),
        }
    }
}

/// Fraction of the population outside the central 80% that a packet may carry.
const LEAK_TOLERANCE: f64 = 1e-8;

pub fn gaussian_density(grid: &PhaseGrid, spec: &GaussianSpec) -> Result<DensityMatrix> {
    if !(spec.sigma_x > 0.0) || !spec.sigma_x.is_finite() {
        return Err(QreError::InvalidParameter {
            name: "sigma_x",
            reason: format!("must be positive, got {}", spec.sigma_x),
        });
    }
    if !spec.x0.is_finite() || !spec.p0_mean.is_finite() {
        return Err(QreError::InvalidParameter {
            name: "gaussian",
            reason: "non-finite mean".into(),
        });
    }
    let psi: Vec<Complex64> = grid
        .x_values()
        .iter()
        .map(|&x| {
            let u = (x - spec.x0) / spec.sigma_x;
            Complex64::from_polar((-0.25 * u * u).exp(), spec.p0_mean * (x - spec.x0) / HBAR)
        })
        .collect();
    let rho = DensityMatrix::from_wavefunction(grid.clone(), &psi)?;

    let lo = grid.x_min() + 0.1 * grid.length();
    let hi = grid.x_max() - 0.1 * grid.length();
    let outside: f64 = grid
        .x_values()
        .iter()
        .zip(rho.diagonal())
        .filter(|(&x, _)| x < lo || x > hi)
        .map(|(_, d)| d)
        .sum::<f64>()
        * grid.dx();
    if outside > LEAK_TOLERANCE {
        return Err(QreError::PacketLeak { outside });
    }
    Ok(rho)
}
