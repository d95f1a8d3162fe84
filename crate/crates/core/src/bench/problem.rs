use crate::gp::{GpSpec, KernelConfig, NoiseConfig};
use crate::grid::ParameterPoint;
use crate::vehicle::{Simulator, VehicleError};

use super::synthetic::SyntheticProblem;

/// Noise-free values at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Value the optimizer maximizes.
    pub objective: f64,
    /// Objective in the problem's own convention (lap cost for the simulator).
    pub raw_objective: f64,
    pub constraints: Vec<f64>,
}

/// A black-box tuning problem on `[0, 1]^d` with bounded measurement noise.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn constraint_count(&self) -> usize;
    fn evaluate(&self, theta: &[f64]) -> Evaluation;
    /// Noise bound for the objective followed by one per constraint.
    fn noise_bounds(&self) -> Vec<f64>;
    /// Lipschitz constants to configure the optimizer with.
    fn lipschitz(&self) -> Vec<f64>;
    fn initial_point(&self) -> ParameterPoint;
    /// Default surrogate specs, objective first.
    fn gp_specs(&self) -> Vec<GpSpec>;
}

fn spec(dim: usize, lengthscale: f64, outputscale: f64, noise: f64) -> GpSpec {
    GpSpec {
        kernel: KernelConfig::isotropic(dim, lengthscale, outputscale).expect("positive"),
        noise: NoiseConfig::new(noise).expect("nonnegative"),
        priors: None,
    }
}

/// Noise bound used for every function of the synthetic problems.
pub const SYNTHETIC_NOISE: f64 = 0.05;

impl Problem for SyntheticProblem {
    fn name(&self) -> String {
        format!("synthetic-{}", self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    fn evaluate(&self, theta: &[f64]) -> Evaluation {
        let f = self.objective.eval(theta);
        Evaluation {
            objective: f,
            raw_objective: f,
            constraints: self.constraints.iter().map(|g| g.eval(theta)).collect(),
        }
    }

    fn noise_bounds(&self) -> Vec<f64> {
        vec![SYNTHETIC_NOISE; self.constraints.len() + 1]
    }

    fn lipschitz(&self) -> Vec<f64> {
        SyntheticProblem::lipschitz(self)
    }

    fn initial_point(&self) -> ParameterPoint {
        self.initial.clone()
    }

    fn gp_specs(&self) -> Vec<GpSpec> {
        (0..=self.constraints.len())
            .map(|_| spec(self.dim, 0.2, 1.0, SYNTHETIC_NOISE))
            .collect()
    }
}

/// The lap simulator with `dim` tuned gains.
#[derive(Clone, Debug)]
pub struct VehicleProblem {
    pub simulator: Simulator,
    pub dim: usize,
    pub initial: ParameterPoint,
}

/// Noise bounds for lap cost, cross-track margin and yaw-rate margin.
pub const VEHICLE_NOISE: [f64; 3] = [0.03, 0.1, 0.1];

/// Surrogate noise std for the yaw-rate constraint: the std of uniform noise
/// on `[-0.1, 0.1]`. A smaller value makes the confidence-bound baseline
/// overconfident and unsafe.
pub const VEHICLE_YAW_NOISE_STD: f64 = 0.057_735_026_918_962_58;
/// Lipschitz constants for the cross-track and yaw-rate margins.
pub const VEHICLE_LIPSCHITZ: [f64; 2] = [10.0, 0.5];
/// Nominal initial gains before snapping to the grid.
pub const VEHICLE_INITIAL: f64 = 0.1;

impl VehicleProblem {
    pub fn new(simulator: Simulator, dim: usize, initial: ParameterPoint) -> Result<Self, VehicleError> {
        if !(1..=3).contains(&dim) || initial.dim() != dim {
            return Err(VehicleError::Config(format!(
                "vehicle problem needs 1 to 3 gains and a matching initial point, got {dim} and {:?}",
                initial.0
            )));
        }
        simulator.config.gains.to_physical(initial.as_slice())?;
        Ok(Self {
            simulator,
            dim,
            initial,
        })
    }
}

impl Problem for VehicleProblem {
    fn name(&self) -> String {
        format!("vehicle-{}d", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn constraint_count(&self) -> usize {
        2
    }

    fn evaluate(&self, theta: &[f64]) -> Evaluation {
        let m = self
            .simulator
            .run_normalized(theta)
            .expect("grid points are valid normalized gains");
        Evaluation {
            objective: -m.objective,
            raw_objective: m.objective,
            constraints: vec![m.g1, m.g2],
        }
    }

    fn noise_bounds(&self) -> Vec<f64> {
        VEHICLE_NOISE.to_vec()
    }

    fn lipschitz(&self) -> Vec<f64> {
        VEHICLE_LIPSCHITZ.to_vec()
    }

    fn initial_point(&self) -> ParameterPoint {
        self.initial.clone()
    }

    fn gp_specs(&self) -> Vec<GpSpec> {
        vec![
            spec(self.dim, 0.2, 1.0, 0.03),
            spec(self.dim, 0.2, 1.0, 0.1),
            spec(self.dim, 0.2, 0.2, VEHICLE_YAW_NOISE_STD),
        ]
    }
}
