//! Experiment configs, orchestration and result files.
//!
//! Every run writes into one output directory: the CSV tables of the owning module,
//! optional SVG plots, and a `manifest.json` written atomically at the end. Floats are
//! serialized with 17 significant digits, so identical configs and seeds give
//! byte-identical CSV files.

pub mod cli;
pub mod config;
pub mod orchestrate;
pub mod output;
pub mod svg;

pub use config::{
    load_config, parse_config, ConfigErrors, ConfigIssue, ExperimentConfig, Job, Kind, SimRun,
};
pub use orchestrate::orchestrate;
pub use output::{Contract, RunManifest, RunRecord, Status};
