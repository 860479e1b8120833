//! Two-sided discrete Fourier transforms of density matrices.
//!
//! With `F_jk = exp(-2πi jk/N)` the momentum representation is
//! `ρ̃ = c² D F ρ F† D*`, where `c² = dx²/(2πħ)` and
//! `D = diag(exp(-i p_j x_min/ħ))`. This normalization preserves trace
//! (`Σρ̃_jj dp = Σρ_kk dx`) and purity (`Σ|ρ̃|² dp² = Σ|ρ|² dx²`).

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::{PhaseGrid, HBAR};

/// Cached FFT plans plus the normalization for one grid.
#[derive(Clone)]
pub struct FourierPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    offset_phase: Vec<Complex64>,
    scale_to_momentum: f64,
    scale_to_position: f64,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("n", &self.n).finish()
    }
}

impl FourierPlan {
    pub fn new(grid: &PhaseGrid) -> Self {
        let n = grid.n_points();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let offset_phase = grid
            .p_values()
            .iter()
            .map(|&p| Complex64::from_polar(1.0, -p * grid.x_min() / HBAR))
            .collect();
        let c2 = grid.dx() * grid.dx() / (2.0 * std::f64::consts::PI * HBAR);
        Self {
            n,
            forward,
            inverse,
            offset_phase,
            scale_to_momentum: c2,
            scale_to_position: 1.0 / (c2 * (n * n) as f64),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Position → momentum, in place. `with_offset` applies the `D` phases;
    /// the propagator skips them because pointwise kernels commute with `D`.
    pub fn to_momentum(&self, rho: &mut Array2<Complex64>, with_offset: bool) {
        // ρ F† : inverse (unnormalized) FFT along each row
        self.rows(rho, &self.inverse);
        transpose_in_place(rho);
        // F (ρ F†) : forward FFT along each column == rows of the transpose
        self.rows(rho, &self.forward);
        transpose_in_place(rho);
        if with_offset {
            self.apply_offset(rho, false);
        }
        let s = self.scale_to_momentum;
        rho.par_mapv_inplace(|z| z * s);
    }

    /// Momentum → position, in place. Exact inverse of [`Self::to_momentum`].
    pub fn to_position(&self, rho: &mut Array2<Complex64>, with_offset: bool) {
        if with_offset {
            self.apply_offset(rho, true);
        }
        self.rows(rho, &self.forward);
        transpose_in_place(rho);
        self.rows(rho, &self.inverse);
        transpose_in_place(rho);
        let s = self.scale_to_position;
        rho.par_mapv_inplace(|z| z * s);
    }

    /// Unscaled, offset-free transform that leaves the result transposed.
    ///
    /// Applied to `ρ` it yields `(F ρ F†)ᵀ`; applied to that (after any
    /// pointwise multiplication by a transposed kernel) it returns
    /// `N² ρ`-scaled position elements. Saves two transposes per step.
    pub(crate) fn transposed_pass(&self, rho: &mut Array2<Complex64>) {
        self.rows(rho, &self.inverse);
        transpose_in_place(rho);
        self.rows(rho, &self.forward);
    }

    /// Multiplies element (j, l) by `d_j conj(d_l)` (or its conjugate).
    fn apply_offset(&self, rho: &mut Array2<Complex64>, conj: bool) {
        let d = &self.offset_phase;
        let n = self.n;
        rho.as_slice_mut()
            .expect("density matrices are stored in standard layout")
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, row)| {
                for (l, z) in row.iter_mut().enumerate() {
                    let f = d[j] * d[l].conj();
                    *z *= if conj { f.conj() } else { f };
                }
            });
    }

    fn rows(&self, rho: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let scratch_len = fft.get_inplace_scratch_len();
        let rows_per_task = (4096 / n).max(1);
        rho.as_slice_mut()
            .expect("density matrices are stored in standard layout")
            .par_chunks_mut(n * rows_per_task)
            .for_each_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, chunk| fft.process_with_scratch(chunk, scratch),
            );
    }
}

/// Blocked in-place transpose of a square standard-layout matrix.
pub(crate) fn transpose_in_place(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    const B: usize = 32;
    let data = a
        .as_slice_mut()
        .expect("density matrices are stored in standard layout");
    for ib in (0..n).step_by(B) {
        for jb in (ib..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                let j0 = if ib == jb { i + 1 } else { jb };
                for j in j0..(jb + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
