//! The multi-constraint Lipschitz-only safe optimizer over a finite grid.
//!
//! The engine is driven by [`Engine::suggest`] and [`Engine::observe`]. In
//! synchronous use every suggestion is observed before the next one is
//! requested. In asynchronous use up to `pending_capacity` suggestions may be
//! outstanding when a new one is requested; they enter the surrogate models as
//! virtual observations at their current posterior mean, and never enter the
//! safe set.
//!
//! Before any acquisition step, every point of the initial safe set `S_0` is
//! handed out once so that each has a measurement to anchor its cones.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline;
use crate::gp::{
    fit_hyperparameters, minmax_rescale, FitOptions, GpError, GpModel, GpSpec,
    KernelConfig,
};
use crate::grid::{mask_count, mask_indices, DomainGrid, ParameterPoint};
use crate::safe::{
    compute_safe_set, confidence_bounds, expander_set, maximizer_set, ConstraintMeasurement,
    ExpanderRule, SafeState, SafetyConfig, SetError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown observation id {0}")]
    UnknownObservation(usize),
    #[error("observation {0} already has a measurement")]
    AlreadyObserved(usize),
    #[error("observation {0} is not pending")]
    NotPending(usize),
    #[error("{pending} pending evaluations exceed the capacity of {capacity}")]
    PendingCapacity { pending: usize, capacity: usize },
    #[error("measurement must have {expected} finite constraint values, got {got:?}")]
    BadMeasurement { expected: usize, got: Vec<f64> },
}

/// How the safe set is certified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SafeSetRule {
    /// Lipschitz cones around noisy measurements minus the noise bound.
    #[default]
    Lipschitz,
    /// Lipschitz cones around GP lower confidence bounds (SafeOpt-MC).
    ConfidenceBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperoptConfig {
    /// Refit after this many new completed measurements.
    pub period: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for HyperoptConfig {
    fn default() -> Self {
        Self {
            period: 1,
            restarts: 5,
            max_iters: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub beta: f64,
    pub safety: SafetyConfig,
    /// One spec per function: index 0 is the objective, then the constraints.
    pub functions: Vec<GpSpec>,
    #[serde(default)]
    pub expander: ExpanderRule,
    /// Min-max scale objective observations to `[0, 1]` before modelling.
    #[serde(default = "default_true")]
    pub rescale_objective: bool,
    #[serde(default = "default_capacity")]
    pub pending_capacity: usize,
    #[serde(default)]
    pub hyperopt: Option<HyperoptConfig>,
    #[serde(default)]
    pub safe_set_rule: SafeSetRule,
}

fn default_true() -> bool {
    true
}

fn default_capacity() -> usize {
    1
}

impl EngineConfig {
    pub fn new(functions: Vec<GpSpec>, safety: SafetyConfig) -> Self {
        Self {
            beta: 2.0,
            safety,
            functions,
            expander: ExpanderRule::default(),
            rescale_objective: true,
            pending_capacity: 1,
            hyperopt: None,
            safe_set_rule: SafeSetRule::Lipschitz,
        }
    }

    pub fn constraint_count(&self) -> usize {
        self.safety.constraint_count()
    }

    fn validate(&self, dim: usize) -> Result<(), EngineError> {
        self.safety.validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(SetError::InvalidBeta(self.beta).into());
        }
        if self.functions.len() != self.constraint_count() + 1 {
            return Err(EngineError::InvalidConfig(format!(
                "{} GP specs for {} constraints (need objective + one per constraint)",
                self.functions.len(),
                self.constraint_count()
            )));
        }
        for f in &self.functions {
            f.kernel.validate()?;
            if f.kernel.dim() != dim {
                return Err(EngineError::InvalidConfig(format!(
                    "kernel dimension {} does not match grid dimension {dim}",
                    f.kernel.dim()
                )));
            }
        }
        if let Some(h) = &self.hyperopt {
            if h.period == 0 {
                return Err(EngineError::InvalidConfig("hyperopt period must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Measured objective and constraint values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub objective: f64,
    pub constraints: Vec<f64>,
}

/// One query and, once it arrives, its measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub id: usize,
    pub index: usize,
    pub point: ParameterPoint,
    pub measurement: Option<Measurement>,
}

impl ObservationRecord {
    pub fn is_pending(&self) -> bool {
        self.measurement.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    /// First measurement of an initial safe point.
    Bootstrap,
    Acquisition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suggestion {
    pub id: usize,
    pub index: usize,
    pub point: ParameterPoint,
    pub kind: SuggestionKind,
    /// Size of the safe set the choice was made from.
    pub safe_count: usize,
    /// Completed measurements available when choosing.
    pub completed: usize,
}

/// Conditions every model on `(θ̃, μ(θ̃))` for a pending record.
pub fn insert_virtual_point(
    models: &[GpModel],
    pending: &ObservationRecord,
    grid: &DomainGrid,
) -> Result<Vec<GpModel>, EngineError> {
    if !pending.is_pending() {
        return Err(EngineError::NotPending(pending.id));
    }
    if grid.index_of(pending.point.as_slice()).is_none() {
        return Err(SetError::OffGrid(pending.point.0.clone()).into());
    }
    models
        .iter()
        .map(|m| {
            let (mean, _) = m.posterior(pending.point.as_slice())?;
            Ok(m.update(pending.point.as_slice(), mean)?)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    grid: DomainGrid,
    initial_safe: Vec<usize>,
    kernels: Vec<KernelConfig>,
    records: Vec<ObservationRecord>,
    /// Safe set of the previous acquisition step (reachability seed for the
    /// confidence-bound rule).
    previous_safe: Vec<bool>,
    last_state: Option<SafeState>,
    last_fit_completed: usize,
}

impl Engine {
    pub fn new(
        config: EngineConfig,
        grid: DomainGrid,
        initial_safe: Vec<usize>,
    ) -> Result<Self, EngineError> {
        config.validate(grid.dim())?;
        if initial_safe.is_empty() {
            return Err(SetError::EmptySafeSet.into());
        }
        if let Some(&i) = initial_safe.iter().find(|&&i| i >= grid.len()) {
            return Err(EngineError::InvalidConfig(format!(
                "initial safe index {i} outside grid of {} points",
                grid.len()
            )));
        }
        let mut previous_safe = vec![false; grid.len()];
        for &i in &initial_safe {
            previous_safe[i] = true;
        }
        let kernels = config.functions.iter().map(|f| f.kernel.clone()).collect();
        Ok(Self {
            config,
            grid,
            initial_safe,
            kernels,
            records: Vec::new(),
            previous_safe,
            last_state: None,
            last_fit_completed: 0,
        })
    }

    /// Convenience constructor from initial safe points given as coordinates.
    pub fn with_initial_points(
        config: EngineConfig,
        grid: DomainGrid,
        initial: &[ParameterPoint],
    ) -> Result<Self, EngineError> {
        let idx = initial
            .iter()
            .map(|p| {
                grid.index_of(p.as_slice())
                    .ok_or_else(|| EngineError::from(SetError::OffGrid(p.0.clone())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(config, grid, idx)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn initial_safe(&self) -> &[usize] {
        &self.initial_safe
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    pub fn completed(&self) -> impl Iterator<Item = &ObservationRecord> {
        self.records.iter().filter(|r| !r.is_pending())
    }

    pub fn pending(&self) -> impl Iterator<Item = &ObservationRecord> {
        self.records.iter().filter(|r| r.is_pending())
    }

    pub fn pending_count(&self) -> usize {
        self.pending().count()
    }

    pub fn completed_count(&self) -> usize {
        self.completed().count()
    }

    /// Current kernel hyperparameters, one per function.
    pub fn hyperparameters(&self) -> &[KernelConfig] {
        &self.kernels
    }

    /// Sets and bounds from the most recent acquisition step.
    pub fn last_state(&self) -> Option<&SafeState> {
        self.last_state.as_ref()
    }

    fn measurements(&self) -> Vec<ConstraintMeasurement<'_>> {
        self.completed()
            .map(|r| ConstraintMeasurement {
                point: r.point.as_slice(),
                values: &r.measurement.as_ref().expect("completed").constraints,
            })
            .collect()
    }

    /// Lipschitz safe set from completed measurements only.
    pub fn lipschitz_safe_set(&self) -> Result<Vec<bool>, EngineError> {
        Ok(compute_safe_set(
            &self.measurements(),
            &self.config.safety,
            &self.grid,
            &self.initial_safe,
        )?)
    }

    /// Surrogates conditioned on completed measurements, with the current
    /// hyperparameters and objective scaling.
    pub fn models(&self) -> Result<Vec<GpModel>, EngineError> {
        let done: Vec<&ObservationRecord> = self.completed().collect();
        let inputs: Vec<Vec<f64>> = done.iter().map(|r| r.point.0.clone()).collect();
        let mut out = Vec::with_capacity(self.config.functions.len());
        for (f, spec) in self.config.functions.iter().enumerate() {
            let mut targets: Vec<f64> = done
                .iter()
                .map(|r| {
                    let m = r.measurement.as_ref().expect("completed");
                    if f == 0 {
                        m.objective
                    } else {
                        m.constraints[f - 1]
                    }
                })
                .collect();
            if f == 0 && self.config.rescale_objective && !targets.is_empty() {
                targets = minmax_rescale(&targets)?.0;
            }
            let spec = GpSpec {
                kernel: self.kernels[f].clone(),
                ..spec.clone()
            };
            out.push(GpModel::with_data(spec, inputs.clone(), targets)?);
        }
        Ok(out)
    }

    fn maybe_refit(&mut self) -> Result<(), EngineError> {
        let Some(h) = self.config.hyperopt else {
            return Ok(());
        };
        let completed = self.completed_count();
        if completed < 2 || completed < self.last_fit_completed + h.period {
            return Ok(());
        }
        let models = self.models()?;
        for (f, m) in models.iter().enumerate() {
            let priors = self.config.functions[f].priors.unwrap_or_default();
            let opts = FitOptions {
                restarts: h.restarts,
                max_iters: h.max_iters,
                seed: h
                    .seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((completed as u64) << 8 | f as u64),
                ..FitOptions::default()
            };
            let fit = fit_hyperparameters(m, &priors, &opts);
            if !fit.warning {
                self.kernels[f] = fit.kernel;
            }
        }
        self.last_fit_completed = completed;
        Ok(())
    }

    /// Chooses the next query and registers it as pending.
    pub fn suggest(&mut self) -> Result<Suggestion, EngineError> {
        let pending = self.pending_count();
        if pending > self.config.pending_capacity {
            return Err(EngineError::PendingCapacity {
                pending,
                capacity: self.config.pending_capacity,
            });
        }
        let completed = self.completed_count();

        if let Some(&index) = self
            .initial_safe
            .iter()
            .find(|&&i| !self.records.iter().any(|r| r.index == i))
        {
            let safe_count = mask_count(&self.current_safe_for_bootstrap()?);
            return Ok(self.register(index, SuggestionKind::Bootstrap, safe_count, completed));
        }

        self.maybe_refit()?;
        let base_models = self.models()?;

        let safe = match self.config.safe_set_rule {
            SafeSetRule::Lipschitz => self.lipschitz_safe_set()?,
            SafeSetRule::ConfidenceBound => {
                let mask = if completed == 0 {
                    self.previous_safe.clone()
                } else {
                    baseline::baseline_safe_set(
                        &base_models[1..],
                        self.config.beta,
                        &self.config.safety,
                        &self.grid,
                        &self.previous_safe,
                    )?
                };
                self.previous_safe = mask.clone();
                mask
            }
        };

        let mut models = base_models;
        for rec in self.records.iter().filter(|r| r.is_pending()) {
            models = insert_virtual_point(&models, rec, &self.grid)?;
        }

        let state = self.evaluate_sets(safe, &models)?;
        let index = state.select()?;
        let safe_count = state.safe_count();
        self.last_state = Some(state);
        Ok(self.register(index, SuggestionKind::Acquisition, safe_count, completed))
    }

    fn current_safe_for_bootstrap(&self) -> Result<Vec<bool>, EngineError> {
        match self.config.safe_set_rule {
            SafeSetRule::Lipschitz => self.lipschitz_safe_set(),
            SafeSetRule::ConfidenceBound => Ok(self.previous_safe.clone()),
        }
    }

    /// Maximizers, expanders and bounds for a given safe set and models.
    pub fn evaluate_sets(
        &self,
        safe: Vec<bool>,
        models: &[GpModel],
    ) -> Result<SafeState, EngineError> {
        let bounds = confidence_bounds(models, self.config.beta, &self.grid)?;
        let maximizers = maximizer_set(&safe, &bounds[0])?;
        let uppers: Vec<&[f64]> = bounds[1..].iter().map(|b| b.upper.as_slice()).collect();
        let (expanders, expander_counts) = expander_set(
            &safe,
            &uppers,
            &self.config.safety,
            &self.grid,
            self.config.expander,
        );
        Ok(SafeState {
            safe,
            maximizers,
            expanders,
            expander_counts,
            bounds,
            beta: self.config.beta,
        })
    }

    fn register(
        &mut self,
        index: usize,
        kind: SuggestionKind,
        safe_count: usize,
        completed: usize,
    ) -> Suggestion {
        let id = self.records.len();
        let point = ParameterPoint(self.grid.point(index).to_vec());
        self.records.push(ObservationRecord {
            id,
            index,
            point: point.clone(),
            measurement: None,
        });
        Suggestion {
            id,
            index,
            point,
            kind,
            safe_count,
            completed,
        }
    }

    /// Supplies the measurement for a pending suggestion.
    pub fn observe(
        &mut self,
        id: usize,
        objective: f64,
        constraints: &[f64],
    ) -> Result<(), EngineError> {
        let q = self.config.constraint_count();
        if constraints.len() != q
            || !objective.is_finite()
            || constraints.iter().any(|v| !v.is_finite())
        {
            let mut got = vec![objective];
            got.extend_from_slice(constraints);
            return Err(EngineError::BadMeasurement { expected: q, got });
        }
        let rec = self
            .records
            .get_mut(id)
            .ok_or(EngineError::UnknownObservation(id))?;
        if rec.measurement.is_some() {
            return Err(EngineError::AlreadyObserved(id));
        }
        rec.measurement = Some(Measurement {
            objective,
            constraints: constraints.to_vec(),
        });
        Ok(())
    }

    /// Serializable checkpoint of the full engine state.
    pub fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            grid_resolutions: self.grid.resolutions().to_vec(),
            config: self.config.clone(),
            initial_safe: self.initial_safe.clone(),
            hyperparameters: self.kernels.clone(),
            observations: self.records.clone(),
            previous_safe: mask_indices(&self.previous_safe),
            last_fit_completed: self.last_fit_completed,
            safe_set: self
                .last_state
                .as_ref()
                .map(|s| mask_indices(&s.safe))
                .unwrap_or_default(),
        }
    }

    pub fn from_snapshot(snap: EngineSnapshot) -> Result<Self, EngineError> {
        if snap.format != SNAPSHOT_FORMAT {
            return Err(EngineError::InvalidConfig(format!(
                "unsupported snapshot format {}",
                snap.format
            )));
        }
        let grid = DomainGrid::new(snap.grid_resolutions);
        let mut engine = Self::new(snap.config, grid, snap.initial_safe)?;
        if snap.hyperparameters.len() != engine.kernels.len() {
            return Err(EngineError::InvalidConfig("hyperparameter count mismatch".into()));
        }
        for k in &snap.hyperparameters {
            k.validate()?;
        }
        engine.kernels = snap.hyperparameters;
        for (i, r) in snap.observations.iter().enumerate() {
            if r.id != i || r.index >= engine.grid.len() {
                return Err(EngineError::InvalidConfig(format!("bad observation record {i}")));
            }
        }
        engine.records = snap.observations;
        engine.previous_safe = vec![false; engine.grid.len()];
        for i in snap.previous_safe {
            if i >= engine.grid.len() {
                return Err(EngineError::InvalidConfig(format!("safe index {i} off grid")));
            }
            engine.previous_safe[i] = true;
        }
        engine.last_fit_completed = snap.last_fit_completed;
        Ok(engine)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.snapshot()).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, EngineError> {
        let snap: EngineSnapshot = serde_json::from_str(s)
            .map_err(|e| EngineError::InvalidConfig(format!("snapshot: {e}")))?;
        Self::from_snapshot(snap)
    }
}

pub const SNAPSHOT_FORMAT: &str = "mclosbo-engine/1";

/// JSON checkpoint layout, see the repository README for the field list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub format: String,
    pub grid_resolutions: Vec<usize>,
    pub config: EngineConfig,
    pub initial_safe: Vec<usize>,
    pub hyperparameters: Vec<KernelConfig>,
    pub observations: Vec<ObservationRecord>,
    pub previous_safe: Vec<usize>,
    pub last_fit_completed: usize,
    /// Safe set of the last acquisition step (informational).
    #[serde(default)]
    pub safe_set: Vec<usize>,
}
