//! Experiment harness: problems, configuration files, seeded replicate runs
//! and result tables.

mod config;
mod output;
mod problem;
mod runner;
mod synthetic;

use thiserror::Error;

pub use config::{
    nearest_grid_point, Algorithm, ExperimentConfig, FunctionBlock, Mode, ProblemConfig,
    SafetyBlock, StudyConfig, VariantConfig,
};
pub use output::{
    fmt_f64, median, quantile, write_all, write_quantiles, write_runs, write_summary,
    write_timings, QUANTILES_HEADER, RUNS_HEADER, SUMMARY_HEADER,
};
pub use problem::{
    Evaluation, Problem, VehicleProblem, SYNTHETIC_NOISE, VEHICLE_INITIAL, VEHICLE_LIPSCHITZ,
    VEHICLE_NOISE, VEHICLE_YAW_NOISE_STD,
};
pub use runner::{run_experiment, run_study, IterationRow, RunRecord, RunSetup, RunStatus};
pub use synthetic::{Bump, BumpFunction, SyntheticProblem, INITIAL_MARGIN};

use crate::gp::GpError;
use crate::safe::SetError;
use crate::vehicle::VehicleError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Set(#[from] SetError),
}
