//! Experiment harness behind the `dropcap` binary: configuration, training runs, audits and
//! bound reports.

mod audit;
mod bounds;
mod config;
mod train;

use thiserror::Error;

use crate::datasets::DataError;
use crate::numerics::NumericsError;
use crate::relunet::RelunetError;
use crate::sensing::SensingError;

pub use audit::{cmd_audit, random_relu_instance, random_sensing_instance, random_theta_instance, AuditReport, CheckResult};
pub use bounds::{cmd_bounds, evaluate_measured, BoundRow, BoundsReport, MEASURED_COLUMNS};
pub use config::{DataSource, RunConfig, Task};
pub use train::{
    cmd_mc_train, cmd_relu_train, completion_data, relu_data, run_mc, run_relu, RunResult, TrainReport,
};

/// RNG stream used to generate or split data.
pub const DATA_STREAM: u64 = 1;
/// RNG stream used for initialization and SGD sampling.
pub const TRAIN_STREAM: u64 = 2;
/// RNG stream used for symmetrization signs.
pub const SYM_STREAM: u64 = 3;
/// RNG stream used by the audit.
pub const AUDIT_STREAM: u64 = 4;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Relunet(#[from] RelunetError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Every error that stops a command before it produces results counts as a configuration error.
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

/// Writes the metrics CSV to standard output.
pub fn write_csv_stdout(records: &[crate::datasets::ExperimentRecord]) -> Result<(), CliError> {
    crate::datasets::write_records_to(records, std::io::stdout().lock())?;
    Ok(())
}
