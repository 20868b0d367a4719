//! Experiment engine behind the `mlbq` command-line tool.

pub mod calibration;
pub mod config;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod records;

pub use calibration::{calibration_table, CalibrationRow};
pub use config::ExperimentConfig;
pub use engine::{run_experiment, ExperimentOutput, ResultRecord};
pub use error::{HarnessError, Result};
