//! Experiment definitions, config files and run orchestration.

pub mod config;
pub mod mms;
pub mod presets;
pub mod run;
pub mod verify;

pub use config::{Boundary, Experiment, Length, RunConfig};
pub use presets::{lefm_counterpart, preset, preset_names};
pub use run::{build_mesh, build_simulation, converge, mms_solution, run, ConvergenceRow, RunOutcome};
