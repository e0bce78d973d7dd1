//! Monte-Carlo experiments for two-way relay training designs: scenario
//! construction from TOML, SNR sweeps over the design methods, NMSE tables
//! and convergence traces.

pub mod baseline;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod scenario;

pub use config::{ExperimentConfig, Init, Method};
pub use error::SimError;
pub use experiment::{run_experiment, PhaseScenario};
pub use output::{emit_convergence, emit_results, read_results, Format, ResultRow};
