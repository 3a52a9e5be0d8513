//! Experiment harness for the `metaban` crate.
//!
//! Owns everything with an IO surface: JSON experiment configs, CSV
//! ingestion of rating/feature/classification files, seeded multi-run
//! execution with trace and summary emission, grid search, the group-width
//! ablation, and self-contained SVG plots.

pub mod config;
pub mod error;
pub mod ingest;
pub mod plot;
pub mod runner;
pub mod seed;

pub use error::CliError;

pub type Result<T> = std::result::Result<T, CliError>;
