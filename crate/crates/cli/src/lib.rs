//! Experiment driver: configuration, experiment assembly and subcommands.

pub mod commands;
pub mod config;
pub mod experiment;

pub use config::ExperimentConfig;
pub use experiment::Experiment;
