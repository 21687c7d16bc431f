//! Seeded, repeatable experiments over the island runtime, with CSV output
//! and simple summary statistics.

mod config;
mod dataset;
mod experiment;

pub use config::{App, ConfigFile, ExperimentConfig, Landscape, TransportKind};
pub use dataset::{
    aggregate, compare_runs, max_fitness_curve, read_csv, write_aggregates, write_csv, Aggregate,
    Comparison, Moments, StatRow, CSV_HEADER,
};
pub use experiment::{build_islands, run_experiment, run_iteration, Dataset};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Island(#[from] crate::island::IslandError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
