//! Declarative Monte Carlo experiments and their outputs.

pub mod config;
pub mod experiment;
pub mod io;

pub use config::{Analysis, ExperimentConfig, ModelKind};
pub use experiment::{run_experiment, ExperimentOutput, ReplicationSummary};
