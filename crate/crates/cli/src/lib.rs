//! Experiment runner for the `fade-modfun` estimators: TOML-configured
//! sweeps over noise level, grid spacing, modulating count and interval
//! length, with CSV results, a manifest and seed-averaged plot data.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{ExperimentSpec, Mode};
pub use sweep::{run, ResultRow};
