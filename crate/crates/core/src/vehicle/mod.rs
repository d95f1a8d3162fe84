//! Lap simulator for the lateral tracking benchmark: kinematic bicycle on a
//! closed course, three-gain rear-axle controller, and a sensor-side
//! cross-track disturbance on the long straight.

mod controller;
mod metrics;
mod sim;
mod track;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use controller::{controller_steering, ControllerParams, GainBounds, TrackingErrors};
pub use metrics::{
    evaluate, evaluate_constraints, evaluate_objective, LapMetrics, CROSS_TRACK_LIMIT,
    YAW_RATE_LIMIT,
};
pub use sim::{simulate_lap, SimConfig, SimTrace};
pub use track::{Projection, Segment, Shape, Track, TrackConfig, DEFAULT_STRAIGHT_LENGTH};

use crate::grid::DomainGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("invalid vehicle configuration: {0}")]
    Config(String),
    #[error("track does not close (gap {gap:.3e} m)")]
    NonClosing { gap: f64 },
    #[error("trace has {samples} samples, {needed} needed")]
    IncompleteTrace { samples: usize, needed: usize },
}

/// Everything needed to score one set of gains.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleConfig {
    pub track: TrackConfig,
    pub sim: SimConfig,
    pub gains: GainBounds,
}

impl VehicleConfig {
    pub fn from_toml(s: &str) -> Result<Self, VehicleError> {
        toml::from_str(s).map_err(|e| VehicleError::Config(e.to_string()))
    }
}

/// A built track together with the simulation settings.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub track: Track,
    pub config: VehicleConfig,
}

impl Simulator {
    pub fn new(config: VehicleConfig) -> Result<Self, VehicleError> {
        Ok(Self {
            track: Track::build(&config.track)?,
            config,
        })
    }

    pub fn trace(&self, params: &ControllerParams) -> Result<SimTrace, VehicleError> {
        simulate_lap(params, &self.track, &self.config.sim)
    }

    pub fn run(&self, params: &ControllerParams) -> Result<LapMetrics, VehicleError> {
        evaluate(&self.trace(params)?)
    }

    /// Metrics at a normalized point; its length selects how many gains are tuned.
    pub fn run_normalized(&self, theta: &[f64]) -> Result<LapMetrics, VehicleError> {
        self.run(&self.config.gains.to_physical(theta)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimate {
    /// Scaled estimate per output.
    pub constants: Vec<f64>,
    /// Largest observed slope per output, before scaling.
    pub raw: Vec<f64>,
    /// Grid points skipped because an output was not finite.
    pub skipped: usize,
}

/// Largest finite-difference slope over neighbouring grid points, times
/// `factor`. `f` returns one value per output.
pub fn estimate_lipschitz<F>(f: F, grid: &DomainGrid, factor: f64) -> LipschitzEstimate
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let values: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| f(grid.point(i)))
        .collect();
    let outputs = values.first().map_or(0, Vec::len);
    let bad = |v: &Vec<f64>| v.len() != outputs || v.iter().any(|x| !x.is_finite());
    let skipped = values.iter().filter(|v| bad(v)).count();
    if skipped > 0 {
        log::warn!("{skipped} grid points with non-finite values excluded from the estimate");
    }
    let mut raw = vec![0.0f64; outputs];
    for i in 0..grid.len() {
        if bad(&values[i]) {
            continue;
        }
        for j in grid.forward_neighbors(i) {
            if bad(&values[j]) {
                continue;
            }
            let d = grid.distance(i, j);
            for (o, r) in raw.iter_mut().enumerate() {
                *r = r.max((values[i][o] - values[j][o]).abs() / d);
            }
        }
    }
    LipschitzEstimate {
        constants: raw.iter().map(|r| r * factor).collect(),
        raw,
        skipped,
    }
}
