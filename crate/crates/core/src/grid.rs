//! Uniform position grid and its Fourier-conjugate momentum grid.
//!
//! Everything is in atomic units. Momenta are stored in FFT order
//! (`0, dp, .., (N/2-1)dp, -N/2 dp, .., -dp`) so that momentum-diagonal
//! operators can be applied directly to FFT output.

use std::f64::consts::PI;

use crate::error::{QreError, Result};

/// Reduced Planck constant (a.u.).
pub const HBAR: f64 = 1.0;
/// Electron mass (a.u.).
pub const ELECTRON_MASS: f64 = 1.0;
/// Bohr magneton (a.u.).
pub const BOHR_MAGNETON: f64 = 0.5;
/// Mass of a hydrogen-like atom used by the built-in scenarios (a.u.).
pub const HYDROGEN_MASS: f64 = 1837.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    dp: f64,
    x_values: Vec<f64>,
    p_values: Vec<f64>,
}

impl PhaseGrid {
    /// Builds an `n_points` grid on the periodic box `[x_min, x_max)`.
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(QreError::GridSize(n_points));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(QreError::BoxLength { x_min, x_max });
        }
        let dx = (x_max - x_min) / n_points as f64;
        let dp = 2.0 * PI * HBAR / (n_points as f64 * dx);
        let x_values = (0..n_points).map(|i| x_min + i as f64 * dx).collect();
        let half = n_points / 2;
        let p_values = (0..n_points)
            .map(|j| {
                let k = if j < half { j as f64 } else { j as f64 - n_points as f64 };
                k * dp
            })
            .collect();
        Ok(Self {
            n_points,
            x_min,
            x_max,
            dx,
            dp,
            x_values,
            p_values,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    /// Momentum samples in FFT order.
    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }

    /// Largest representable momentum magnitude (the Nyquist momentum).
    pub fn p_max(&self) -> f64 {
        self.dp * (self.n_points / 2) as f64
    }

    /// Indices that visit the momentum grid in ascending order of `p`.
    pub fn p_sorted_indices(&self) -> Vec<usize> {
        let half = self.n_points / 2;
        (half..self.n_points).chain(0..half).collect()
    }

    /// Samples `f` on the position grid.
    pub fn sample_x(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.x_values.iter().map(|&x| f(x)).collect()
    }

    /// Samples `f` on the momentum grid (FFT order).
    pub fn sample_p(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.p_values.iter().map(|&p| f(p)).collect()
    }

    /// Number of nodes in each edge band watched by the wrap-around guard.
    pub fn edge_band(&self) -> usize {
        (self.n_points / 32).max(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_grid_spacings() {
        let g = PhaseGrid::new(8, -4.0, 4.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_relative_eq!(g.dp(), 2.0 * PI / 8.0, epsilon = 1e-15);
        assert_eq!(g.x_values()[0], -4.0);
        assert_eq!(g.x_values()[7], 3.0);
    }

    #[test]
    fn large_grid_dx() {
        let g = PhaseGrid::new(1024, -60.0, 60.0).unwrap();
        assert_eq!(g.dx(), 0.117_187_5);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(PhaseGrid::new(10, -4.0, 4.0), Err(QreError::GridSize(10)));
        assert_eq!(PhaseGrid::new(4, -4.0, 4.0), Err(QreError::GridSize(4)));
        assert!(matches!(
            PhaseGrid::new(16, 1.0, 1.0),
            Err(QreError::BoxLength { .. })
        ));
        assert!(matches!(
            PhaseGrid::new(16, 1.0, -1.0),
            Err(QreError::BoxLength { .. })
        ));
    }

    #[test]
    fn momentum_ordering() {
        let g = PhaseGrid::new(16, -3.0, 5.0).unwrap();
        let p = g.p_values();
        assert_eq!(p[0], 0.0);
        assert!(p[1] > 0.0);
        assert_relative_eq!(p[8], -g.p_max(), epsilon = 1e-14);
        assert_relative_eq!(p[15], -g.dp(), epsilon = 1e-14);
        // symmetric up to the Nyquist element
        for j in 1..8 {
            assert_relative_eq!(p[j], -p[16 - j], epsilon = 1e-14);
        }
        assert_relative_eq!(g.dp() * g.dx() * 16.0, 2.0 * PI * HBAR, epsilon = 1e-14);
        let sorted: Vec<f64> = g.p_sorted_indices().iter().map(|&i| p[i]).collect();
        assert!(sorted.windows(2).all(|w| w[1] > w[0]));
    }
}
