//! Moments, energy, purity and transmission of a density matrix, and
//! residuals of the mean-value equations `d⟨x⟩/dt = ⟨G⟩`, `d⟨p⟩/dt = ⟨F⟩`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{QreError, Result};
use crate::grid::PhaseGrid;
use crate::synthesis::TargetDynamics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub energy: f64,
    pub purity: f64,
    pub trace: f64,
    pub transmission: Option<f64>,
    pub mean_g: Option<f64>,
    pub mean_f: Option<f64>,
    /// `⟨|G|⟩`, normalization for the position residual.
    #[serde(skip)]
    pub abs_g: Option<f64>,
    /// `max(⟨|F|⟩, ⟨|F + U'|⟩)`, normalization for the momentum residual.
    #[serde(skip)]
    pub abs_f: Option<f64>,
}

/// Ordered records plus free-form metadata (echoed into file headers).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub records: Vec<ObservableRecord>,
    pub metadata: BTreeMap<String, String>,
    /// Extra named columns aligned with `records` (analytic comparators).
    pub comparators: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn push(&mut self, record: ObservableRecord) {
        debug_assert!(self.records.last().is_none_or(|r| record.t > r.t));
        self.records.push(record);
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&ObservableRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Everything needed to turn a density matrix into an [`ObservableRecord`].
#[derive(Debug, Clone)]
pub struct Observer {
    pub potential: Vec<f64>,
    pub potential_derivative: Vec<f64>,
    pub mass: f64,
    pub targets: Option<TargetDynamics>,
    pub transmission_threshold: Option<f64>,
}

/// Position and momentum probability densities of one state.
pub(crate) struct Densities {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl Densities {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        rho.expect(crate::Representation::Position)?;
        Ok(Self {
            x: rho.diagonal(),
            p: rho.momentum_density(),
        })
    }
}

impl Observer {
    pub fn measure(&self, rho: &DensityMatrix, t: f64) -> Result<ObservableRecord> {
        let d = Densities::of(rho)?;
        Ok(self.record(rho, &d, t))
    }

    pub(crate) fn record(&self, rho: &DensityMatrix, d: &Densities, t: f64) -> ObservableRecord {
        let grid = rho.grid();
        let (dx, dp) = (grid.dx(), grid.dp());
        let xs = grid.x_values();
        let ps = grid.p_values();
        let trace = d.x.iter().sum::<f64>() * dx;
        let norm_p = d.p.iter().sum::<f64>() * dp;

        let ex = |f: &dyn Fn(usize) -> f64| d.x.iter().enumerate().map(|(i, w)| w * f(i)).sum::<f64>() * dx / trace;
        let ep = |f: &dyn Fn(usize) -> f64| d.p.iter().enumerate().map(|(j, w)| w * f(j)).sum::<f64>() * dp / norm_p;

        let mean_x = ex(&|i| xs[i]);
        let mean_p = ep(&|j| ps[j]);
        let var_x = ex(&|i| (xs[i] - mean_x).powi(2));
        let var_p = ep(&|j| (ps[j] - mean_p).powi(2));
        let kinetic = ep(&|j| ps[j] * ps[j] / (2.0 * self.mass));
        let potential = ex(&|i| self.potential[i]);

        let transmission = self.transmission_threshold.map(|xt| {
            d.x.iter()
                .zip(xs)
                .filter(|(_, &x)| x > xt)
                .map(|(w, _)| w)
                .sum::<f64>()
                * dx
        });
        let (mean_g, mean_f, abs_g, abs_f) = match &self.targets {
            Some(tg) => {
                let du = &self.potential_derivative;
                (
                    Some(ep(&|j| tg.velocity[j])),
                    Some(ex(&|i| tg.force[i])),
                    Some(ep(&|j| tg.velocity[j].abs())),
                    Some(ex(&|i| tg.force[i].abs()).max(ex(&|i| (tg.force[i] + du[i]).abs()))),
                )
            }
            None => (None, None, None, None),
        };
        ObservableRecord {
            t,
            mean_x,
            mean_p,
            var_x,
            var_p,
            energy: kinetic + potential,
            purity: rho.purity(),
            trace,
            transmission,
            mean_g,
            mean_f,
            abs_g,
            abs_f,
        }
    }
}

/// Convenience wrapper around [`Observer::measure`].
pub fn measure(
    rho: &DensityMatrix,
    potential: &[f64],
    mass: f64,
    targets: Option<&TargetDynamics>,
    x_threshold: Option<f64>,
) -> Result<ObservableRecord> {
    let grid: &PhaseGrid = rho.grid();
    let observer = Observer {
        potential: potential.to_vec(),
        potential_derivative: vec![0.0; grid.n_points()],
        mass,
        targets: targets.cloned(),
        transmission_threshold: x_threshold,
    };
    observer.measure(rho, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub t: f64,
    pub r_x: f64,
    pub r_p: f64,
    /// One-sided difference at a series endpoint.
    pub one_sided: bool,
}

/// Pointwise residuals of the mean-value equations on a uniformly recorded
/// series: centred differences inside, one-sided at the two ends. A shorter
/// final interval (run length not a multiple of the record stride) is dropped.
pub fn ehrenfest_residuals(series: &TimeSeries) -> Result<Vec<Residual>> {
    let mut recs = &series.records[..];
    let mut n = recs.len();
    if n < 3 {
        return Err(QreError::TooFewRecords(n));
    }
    let h = recs[1].t - recs[0].t;
    if recs[n - 1].t - recs[n - 2].t < h * (1.0 - 1e-9) {
        n -= 1;
        recs = &recs[..n];
        if n < 3 {
            return Err(QreError::TooFewRecords(n));
        }
    }
    if recs
        .windows(2)
        .any(|w| ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs().max(1e-300))
    {
        return Err(QreError::NonUniformRecords);
    }
    let missing = || QreError::InvalidParameter {
        name: "series",
        reason: "records lack mean_G / mean_F".into(),
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b, span, one_sided) = if k == 0 {
            (0, 1, h, true)
        } else if k == n - 1 {
            (n - 2, n - 1, h, true)
        } else {
            (k - 1, k + 1, 2.0 * h, false)
        };
        let vx = (recs[b].mean_x - recs[a].mean_x) / span;
        let vp = (recs[b].mean_p - recs[a].mean_p) / span;
        let g = recs[k].mean_g.ok_or_else(missing)?;
        let f = recs[k].mean_f.ok_or_else(missing)?;
        out.push(Residual {
            t: recs[k].t,
            r_x: (vx - g).abs(),
            r_p: (vp - f).abs(),
            one_sided,
        });
    }
    Ok(out)
}

/// Largest interior residuals relative to the series' velocity and force
/// scales: `(max r_x / max⟨|G|⟩, max r_p / max(⟨|F|⟩, ⟨|F+U'|⟩))`.
pub fn relative_residuals(series: &TimeSeries) -> Result<(f64, f64)> {
    let res = ehrenfest_residuals(series)?;
    let interior = res.iter().filter(|r| !r.one_sided);
    let (rx, rp) = interior.fold((0.0_f64, 0.0_f64), |(a, b), r| (a.max(r.r_x), b.max(r.r_p)));
    let gscale = series
        .records
        .iter()
        .filter_map(|r| r.abs_g.or(r.mean_g.map(f64::abs)))
        .fold(0.0_f64, f64::max);
    let fscale = series
        .records
        .iter()
        .filter_map(|r| r.abs_f.or(r.mean_f.map(f64::abs)))
        .fold(0.0_f64, f64::max);
    Ok((rx / gscale, rp / fscale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{gaussian_density, GaussianSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_moments() {
        let grid = PhaseGrid::new(256, -20.0, 20.0).unwrap();
        let spec = GaussianSpec {
            x0: 1.5,
            p0_mean: -2.0,
            sigma_x: 0.9,
        };
        let rho = gaussian_density(&grid, &spec).unwrap();
        let r = measure(&rho, &vec![0.0; 256], 3.0, None, Some(-100.0)).unwrap();
        assert_abs_diff_eq!(r.mean_x, 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(r.mean_p, -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.var_x, 0.81, epsilon = 1e-10);
        assert_abs_diff_eq!(r.var_p, 1.0 / (4.0 * 0.81), epsilon = 1e-10);
        assert_abs_diff_eq!(r.energy, spec.mean_kinetic_energy(3.0), epsilon = 1e-10);
        assert_abs_diff_eq!(r.transmission.unwrap(), 1.0, epsilon = 1e-12);
        assert!(r.var_x * r.var_p >= 0.25 * (1.0 - 1e-6));
    }

    #[test]
    fn mixed_state_purity() {
        let grid = PhaseGrid::new(64, -8.0, 8.0).unwrap();
        let rho = DensityMatrix::maximally_mixed(grid);
        let r = measure(&rho, &vec![0.0; 64], 1.0, None, None).unwrap();
        assert_abs_diff_eq!(r.purity, 1.0 / 64.0, epsilon = 1e-15);
        assert!(r.transmission.is_none());
    }

    #[test]
    fn transmission_is_monotone_in_threshold() {
        let grid = PhaseGrid::new(128, -10.0, 10.0).unwrap();
        let rho = gaussian_density(
            &grid,
            &GaussianSpec {
                x0: 0.0,
                p0_mean: 0.0,
                sigma_x: 1.0,
            },
        )
        .unwrap();
        let u = vec![0.0; 128];
        let mut prev = -1.0;
        for k in (-20..=20).rev() {
            let t = measure(&rho, &u, 1.0, None, Some(k as f64 * 0.25))
                .unwrap()
                .transmission
                .unwrap();
            assert!(t >= prev && t <= 1.0 + 1e-10);
            prev = t;
        }
    }

    #[test]
    fn residuals_need_three_uniform_records() {
        let rec = |t: f64| ObservableRecord {
            t,
            mean_x: t,
            mean_p: 0.0,
            var_x: 1.0,
            var_p: 1.0,
            energy: 0.0,
            purity: 1.0,
            trace: 1.0,
            transmission: None,
            mean_g: Some(1.0),
            mean_f: Some(0.0),
            abs_g: None,
            abs_f: None,
        };
        let mut s = TimeSeries::default();
        s.push(rec(0.0));
        s.push(rec(1.0));
        assert_eq!(ehrenfest_residuals(&s), Err(QreError::TooFewRecords(2)));
        s.push(rec(2.0));
        let r = ehrenfest_residuals(&s).unwrap();
        assert!(r[0].one_sided && !r[1].one_sided && r[2].one_sided);
        assert!(r.iter().all(|r| r.r_x < 1e-15 && r.r_p == 0.0));
        s.push(rec(3.5));
        assert_eq!(ehrenfest_residuals(&s), Err(QreError::NonUniformRecords));
    }
}
