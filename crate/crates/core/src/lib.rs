//! Age-structured logistic population model with aquatic and adult cohorts:
//! equilibrium computation, reduced-order dynamics, control laws, Lyapunov
//! diagnostics and a direct PDE solver for cross-checks.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for common use.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these guards

pub mod config;
pub mod control;
pub mod diagnostics;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod scenarios;

pub use config::{
    env_at, load_scenario, sample_rates, AgeGrid, ControllerKind, EnvSample, EnvironmentSignal, ScenarioConfig,
    VitalRateSet,
};
pub use control::{ControlSample, ControllerSpec};
pub use dynamics::{simulate, DensityField, OutputSeries, TransformedState};
pub use equilibrium::{solve_steady_state, SteadyState};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SteadyStateF64 = SteadyState<f64>;
pub type SteadyStateF32 = SteadyState<f32>;
pub type TransformedStateF64 = TransformedState<f64>;
pub type TransformedStateF32 = TransformedState<f32>;
pub type DensityFieldF64 = DensityField<f64>;
pub type DensityFieldF32 = DensityField<f32>;
pub type OutputSeriesF64 = OutputSeries<f64>;
pub type OutputSeriesF32 = OutputSeries<f32>;
pub type ControllerSpecF64 = ControllerSpec<f64>;
pub type ControllerSpecF32 = ControllerSpec<f32>;
pub type AgeGridF64 = AgeGrid<f64>;
pub type AgeGridF32 = AgeGrid<f32>;
