//! Seeded experiment grids and their CSV outputs.
//!
//! Cell `(algorithm, instance, trial)` draws rewards from
//! `RngStream(seed, instance, trial)`, so algorithms see common random
//! numbers and results do not depend on scheduling.

pub mod config;
pub mod curve;
pub mod output;
pub mod run;

pub use config::{Algorithm, ExperimentConfig, InstanceSource, PolicyConfig};
pub use curve::{regret_curves, CurvePoint, RegretCurve};
pub use output::{read_trials, summarize, write_outputs, SummaryRow, TrialRow};
pub use run::{prepare_instances, run_cells, run_grid, run_trial, PreparedInstance, TrialRecord};
