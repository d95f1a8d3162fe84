use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baseline::safeopt_mc_config;
use crate::engine::{EngineConfig, HyperoptConfig};
use crate::gp::{GammaPriorConfig, GpSpec, KernelConfig, NoiseConfig};
use crate::grid::{default_resolution, DomainGrid, ParameterPoint};
use crate::safe::{ExpanderRule, Quantifier, SafetyConfig};
use crate::vehicle::{Simulator, VehicleConfig};

use super::problem::{Problem, VehicleProblem, VEHICLE_INITIAL};
use super::synthetic::SyntheticProblem;
use super::BenchError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Mclosbo,
    SafeoptMc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Mclosbo => "mclosbo",
            Algorithm::SafeoptMc => "safeopt-mc",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Sync,
    Async,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sync => "sync",
            Mode::Async => "async",
        }
    }
}

/// Which black box to optimize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemConfig {
    Vehicle {
        /// Optional TOML file with `[track]`, `[sim]` and `[gains]` tables.
        #[serde(default)]
        config_file: Option<String>,
        #[serde(default)]
        vehicle: Option<VehicleConfig>,
    },
    Synthetic {
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        constraints: usize,
    },
}

fn one() -> usize {
    1
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Vehicle {
            config_file: None,
            vehicle: None,
        }
    }
}

/// Surrogate hyperparameters for one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionBlock {
    pub lengthscale: f64,
    /// Signal variance.
    pub outputscale: f64,
    pub noise_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyBlock {
    pub lipschitz: Vec<f64>,
    /// Noise bound per constraint.
    pub noise_bounds: Vec<f64>,
    /// Noise bound on the objective measurement.
    #[serde(default)]
    pub objective_noise: Option<f64>,
}

fn default_iterations() -> usize {
    30
}

fn default_beta() -> f64 {
    2.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_capacity() -> usize {
    1
}

fn default_period() -> usize {
    1
}

/// One configured experiment: algorithm, mode and problem, run for a number
/// of seeded replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub hyperopt: bool,
    #[serde(default = "default_period")]
    pub hyperopt_period: usize,
    pub dim: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Points per axis; defaults by dimension.
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub expander_literal: bool,
    #[serde(default)]
    pub expander_quantifier: Quantifier,
    #[serde(default = "default_capacity")]
    pub pending_capacity: usize,
    /// Multiplies every configured lengthscale and outputscale.
    #[serde(default = "default_scale")]
    pub hyperparameter_scale: f64,
    #[serde(default)]
    pub problem: ProblemConfig,
    /// Objective first, then one block per constraint.
    #[serde(default)]
    pub functions: Option<Vec<FunctionBlock>>,
    #[serde(default)]
    pub safety: Option<SafetyBlock>,
    #[serde(default)]
    pub initial: Option<Vec<Vec<f64>>>,
}

impl ExperimentConfig {
    pub fn new(dim: usize, problem: ProblemConfig) -> Self {
        Self {
            name: String::new(),
            algorithm: Algorithm::Mclosbo,
            mode: Mode::Sync,
            hyperopt: false,
            hyperopt_period: 1,
            dim,
            iterations: 30,
            replicates: 1,
            seed: 0,
            beta: 2.0,
            resolution: None,
            expander_literal: false,
            expander_quantifier: Quantifier::Exists,
            pending_capacity: 1,
            hyperparameter_scale: 1.0,
            problem,
            functions: None,
            safety: None,
            initial: None,
        }
    }

    pub fn from_toml(s: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(s).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Label used in output tables.
    pub fn variant(&self) -> String {
        let mut v = format!("{}-{}", self.algorithm.as_str(), self.mode.as_str());
        if self.hyperopt {
            v.push_str("-hyperopt");
        }
        v
    }

    pub fn label(&self) -> String {
        if self.name.is_empty() {
            format!("{}-{}d", self.variant(), self.dim)
        } else {
            self.name.clone()
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(1..=3).contains(&self.dim) {
            return Err(BenchError::Config(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.iterations == 0 || self.replicates == 0 {
            return Err(BenchError::Config("iterations and replicates must be >= 1".into()));
        }
        if !(self.hyperparameter_scale.is_finite() && self.hyperparameter_scale > 0.0) {
            return Err(BenchError::Config("hyperparameter_scale must be positive".into()));
        }
        if self.resolution.is_some_and(|r| r < 2) {
            return Err(BenchError::Config("resolution must be >= 2".into()));
        }
        if self.hyperopt_period == 0 {
            return Err(BenchError::Config("hyperopt_period must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> DomainGrid {
        DomainGrid::uniform(self.dim, self.resolution.unwrap_or(default_resolution(self.dim)))
    }

    /// Builds the configured problem on `grid`.
    pub fn build_problem(&self, grid: &DomainGrid) -> Result<Arc<dyn Problem>, BenchError> {
        match &self.problem {
            ProblemConfig::Synthetic { seed, constraints } => {
                if !(1..=3).contains(constraints) {
                    return Err(BenchError::Config("synthetic problems have 1 to 3 constraints".into()));
                }
                Ok(Arc::new(SyntheticProblem::generate(*seed, self.dim, *constraints, grid)))
            }
            ProblemConfig::Vehicle {
                config_file,
                vehicle,
            } => {
                let vc = match (config_file, vehicle) {
                    (Some(path), _) => VehicleConfig::from_toml(&std::fs::read_to_string(path)?)?,
                    (None, Some(v)) => v.clone(),
                    (None, None) => VehicleConfig::default(),
                };
                let sim = Simulator::new(vc)?;
                let nominal = vec![VEHICLE_INITIAL; self.dim];
                let initial = nearest_grid_point(grid, &nominal);
                Ok(Arc::new(VehicleProblem::new(sim, self.dim, initial)?))
            }
        }
    }

    /// Initial safe points: configured ones, which must be grid points, or the
    /// problem's own.
    pub fn initial_points(
        &self,
        problem: &dyn Problem,
        grid: &DomainGrid,
    ) -> Result<Vec<usize>, BenchError> {
        let pts = match &self.initial {
            Some(p) if !p.is_empty() => p.clone(),
            _ => vec![problem.initial_point().0],
        };
        pts.iter()
            .map(|p| {
                grid.index_of(p)
                    .ok_or_else(|| BenchError::Config(format!("initial point {p:?} is not a grid point")))
            })
            .collect()
    }

    pub fn engine_config(&self, problem: &dyn Problem) -> Result<EngineConfig, BenchError> {
        let q = problem.constraint_count();
        let mut specs = match &self.functions {
            Some(blocks) => {
                if blocks.len() != q + 1 {
                    return Err(BenchError::Config(format!(
                        "{} function blocks for {} constraints",
                        blocks.len(),
                        q
                    )));
                }
                blocks
                    .iter()
                    .map(|b| -> Result<GpSpec, BenchError> {
                        Ok(GpSpec {
                            kernel: KernelConfig::isotropic(self.dim, b.lengthscale, b.outputscale)?,
                            noise: NoiseConfig::new(b.noise_std)?,
                            priors: None,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            None => problem.gp_specs(),
        };
        for s in &mut specs {
            for l in &mut s.kernel.lengthscales {
                *l *= self.hyperparameter_scale;
            }
            s.kernel.outputscale *= self.hyperparameter_scale;
            if self.hyperopt {
                s.priors = Some(GammaPriorConfig::default());
            }
        }
        let safety = match &self.safety {
            Some(b) => SafetyConfig::new(b.lipschitz.clone(), b.noise_bounds.clone())?,
            None => SafetyConfig::new(problem.lipschitz(), problem.noise_bounds()[1..].to_vec())?,
        };
        if safety.constraint_count() != q {
            return Err(BenchError::Config(format!(
                "safety block has {} constraints, problem has {q}",
                safety.constraint_count()
            )));
        }
        let mut cfg = match self.algorithm {
            Algorithm::Mclosbo => EngineConfig::new(specs, safety),
            Algorithm::SafeoptMc => safeopt_mc_config(specs, safety, self.beta),
        };
        cfg.beta = self.beta;
        cfg.expander = ExpanderRule {
            quantifier: self.expander_quantifier,
            literal_threshold: self.expander_literal,
        };
        cfg.pending_capacity = self.pending_capacity;
        cfg.hyperopt = self.hyperopt.then_some(HyperoptConfig {
            period: self.hyperopt_period,
            seed: self.seed,
            ..HyperoptConfig::default()
        });
        Ok(cfg)
    }

    /// Noise bounds used by the measurement sampler, objective first.
    pub fn sampler_noise(&self, problem: &dyn Problem) -> Vec<f64> {
        let mut n = problem.noise_bounds();
        if let Some(b) = &self.safety {
            if let Some(e) = b.objective_noise {
                n[0] = e;
            }
            for (dst, src) in n[1..].iter_mut().zip(&b.noise_bounds) {
                *dst = *src;
            }
        }
        n
    }
}

pub fn nearest_grid_point(grid: &DomainGrid, x: &[f64]) -> ParameterPoint {
    let res = grid.resolutions();
    ParameterPoint(
        x.iter()
            .zip(res)
            .map(|(v, &r)| {
                if r == 1 {
                    0.5
                } else {
                    let k = (v.clamp(0.0, 1.0) * (r - 1) as f64).round();
                    k / (r - 1) as f64
                }
            })
            .collect(),
    )
}

/// One algorithm variant within a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub hyperopt: bool,
}

/// Variants crossed with dimensions, sharing one problem definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    #[serde(default)]
    pub name: String,
    pub dims: Vec<usize>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub problem: ProblemConfig,
    pub variants: Vec<VariantConfig>,
}

impl StudyConfig {
    pub fn from_toml(s: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(s).map_err(|e| BenchError::Config(e.to_string()))?;
        if cfg.variants.is_empty() || cfg.dims.is_empty() {
            return Err(BenchError::Config("study needs variants and dims".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The five variants of the simulation study.
    pub fn standard_variants() -> Vec<VariantConfig> {
        let v = |algorithm, mode, hyperopt| VariantConfig {
            label: None,
            algorithm,
            mode,
            hyperopt,
        };
        vec![
            v(Algorithm::Mclosbo, Mode::Sync, false),
            v(Algorithm::Mclosbo, Mode::Sync, true),
            v(Algorithm::Mclosbo, Mode::Async, false),
            v(Algorithm::Mclosbo, Mode::Async, true),
            v(Algorithm::SafeoptMc, Mode::Sync, false),
        ]
    }

    pub fn experiments(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &dim in &self.dims {
            for v in &self.variants {
                let mut e = ExperimentConfig::new(dim, self.problem.clone());
                e.algorithm = v.algorithm;
                e.mode = v.mode;
                e.hyperopt = v.hyperopt;
                e.iterations = self.iterations;
                e.replicates = self.replicates;
                e.seed = self.seed;
                e.beta = self.beta;
                e.resolution = self.resolution;
                e.name = match &v.label {
                    Some(l) => format!("{l}-{dim}d"),
                    None => String::new(),
                };
                out.push(e);
            }
        }
        out
    }
}
