//! Open-system simulator for engineered dissipative environments.
//!
//! The crate synthesizes Lindblad operators that make a particle's mean
//! position and momentum obey prescribed equations of motion, propagates the
//! density matrix with an exact-kernel split-operator scheme, and checks the
//! result against a dense Liouvillian reference.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod config;
pub mod density;
pub mod error;
pub mod experiment;
pub mod export;
pub mod fourier;
pub mod grid;
pub mod observables;
pub mod oracle;
pub mod propagator;
pub mod scenario;
pub mod synthesis;

pub use config::{ScenarioConfig, ScenarioKind, SweepSpec};
pub use density::{gaussian_density, DensityMatrix, GaussianSpec, Representation};
pub use error::{QreError, Result};
pub use grid::PhaseGrid;
pub use observables::{ObservableRecord, Observer, TimeSeries};
pub use experiment::{oracle_check, run_scenario, run_sweep};
pub use propagator::{build_kernels, propagate, strang_step, GuardConfig, KernelSet, Schedule};
pub use scenario::Scenario;
pub use synthesis::{LindbladOp, TargetDynamics};
