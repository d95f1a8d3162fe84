use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{Engine, EngineConfig, Suggestion, SuggestionKind};
use crate::grid::{mask_indices, DomainGrid, ParameterPoint};

use super::config::{Algorithm, ExperimentConfig, Mode};
use super::problem::{Evaluation, Problem};
use super::BenchError;

/// One query, its true and measured values, and the state it was chosen from.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRow {
    pub iteration: usize,
    pub kind: SuggestionKind,
    pub index: usize,
    pub theta: ParameterPoint,
    pub truth: Evaluation,
    pub measured_objective: f64,
    pub measured_constraints: Vec<f64>,
    /// `g_i < 0` on the true constraint values.
    pub violations: Vec<bool>,
    pub safe_set_size: usize,
    /// Extent of the safe set along the first axis.
    pub safe_min: f64,
    pub safe_max: f64,
    pub completed_at_selection: usize,
    pub pending_at_selection: usize,
    /// Best measured objective among completed rows up to this one.
    pub best_so_far: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Stopped before the budget, with the reason.
    DeadEnd(String),
}

impl RunStatus {
    pub fn as_str(&self) -> String {
        match self {
            RunStatus::Completed => "completed".into(),
            RunStatus::DeadEnd(e) => format!("dead-end: {e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub experiment: String,
    pub variant: String,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub hyperopt: bool,
    pub dim: usize,
    pub replicate: usize,
    pub status: RunStatus,
    pub initial: Evaluation,
    pub rows: Vec<IterationRow>,
    /// Safe set (grid indices) each row was selected from.
    pub safe_sets: Vec<Vec<usize>>,
    /// Wall-clock seconds spent choosing each query.
    pub wall_times: Vec<f64>,
}

impl RunRecord {
    /// Best measured objective over the run.
    pub fn best_objective(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.measured_objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True objective at the point with the best measurement.
    pub fn best_objective_true(&self) -> f64 {
        self.rows
            .iter()
            .fold(None::<&IterationRow>, |b, r| match b {
                Some(b) if b.measured_objective >= r.measured_objective => Some(b),
                _ => Some(r),
            })
            .map_or(f64::NAN, |r| r.truth.objective)
    }

    pub fn final_objective(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.measured_objective)
    }

    pub fn total_violations(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.violations.iter().filter(|&&v| v).count())
            .sum()
    }

    pub fn violating_queries(&self) -> usize {
        self.rows.iter().filter(|r| r.violations.iter().any(|&v| v)).count()
    }
}

/// Everything one replicate needs.
#[derive(Clone)]
pub struct RunSetup {
    pub experiment: ExperimentConfig,
    pub problem: Arc<dyn Problem>,
    pub grid: DomainGrid,
    pub engine: EngineConfig,
    pub initial: Vec<usize>,
    pub noise: Vec<f64>,
}

impl RunSetup {
    pub fn new(experiment: &ExperimentConfig) -> Result<Self, BenchError> {
        experiment.validate()?;
        let grid = experiment.grid();
        let problem = experiment.build_problem(&grid)?;
        Self::with_problem(experiment, problem, grid)
    }

    pub fn with_problem(
        experiment: &ExperimentConfig,
        problem: Arc<dyn Problem>,
        grid: DomainGrid,
    ) -> Result<Self, BenchError> {
        if problem.dim() != grid.dim() {
            return Err(BenchError::Config("problem and grid dimensions differ".into()));
        }
        let engine = experiment.engine_config(problem.as_ref())?;
        let initial = experiment.initial_points(problem.as_ref(), &grid)?;
        let noise = experiment.sampler_noise(problem.as_ref());
        Ok(Self {
            experiment: experiment.clone(),
            problem,
            grid,
            engine,
            initial,
            noise,
        })
    }

    fn measure(&self, truth: &Evaluation, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
        let mut draw = |e: f64| if e > 0.0 { rng.random_range(-e..=e) } else { 0.0 };
        let y0 = truth.objective + draw(self.noise[0]);
        let ys = truth
            .constraints
            .iter()
            .zip(&self.noise[1..])
            .map(|(g, &e)| g + draw(e))
            .collect();
        (y0, ys)
    }

    /// Runs one replicate. Noise comes from a stream keyed by the experiment
    /// seed and the replicate index.
    pub fn run(&self, replicate: usize) -> RunRecord {
        let exp = &self.experiment;
        let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
        rng.set_stream(replicate as u64);
        let mut cfg = self.engine.clone();
        if let Some(h) = cfg.hyperopt.as_mut() {
            h.seed = exp.seed ^ (replicate as u64).wrapping_mul(0xA24B_AED4_963E_E407);
        }
        let initial_truth = self
            .problem
            .evaluate(self.grid.point(self.initial[0]));
        let mut record = RunRecord {
            experiment: exp.label(),
            variant: exp.variant(),
            algorithm: exp.algorithm,
            mode: exp.mode,
            hyperopt: exp.hyperopt,
            dim: exp.dim,
            replicate,
            status: RunStatus::Completed,
            initial: initial_truth,
            rows: Vec::new(),
            safe_sets: Vec::new(),
            wall_times: Vec::new(),
        };
        let mut engine = match Engine::new(cfg, self.grid.clone(), self.initial.clone()) {
            Ok(e) => e,
            Err(e) => {
                record.status = RunStatus::DeadEnd(e.to_string());
                return record;
            }
        };

        let mut pending: Option<(Suggestion, usize)> = None;
        for n in 0..exp.iterations {
            let started = Instant::now();
            let choice = engine.suggest();
            let elapsed = started.elapsed().as_secs_f64();
            let s = match choice {
                Ok(s) => s,
                Err(e) => {
                    record.status = RunStatus::DeadEnd(e.to_string());
                    break;
                }
            };
            let safe = self.selection_safe_set(&engine, &s);
            let row = self.row(n, &s, &safe, engine.pending_count() - 1, &mut rng);
            record.wall_times.push(elapsed);
            record.safe_sets.push(safe);
            record.rows.push(row);
            match exp.mode {
                Mode::Sync => self.deliver(&mut engine, &record.rows[n], s.id),
                Mode::Async => {
                    if let Some((p, row)) = pending.take() {
                        self.deliver(&mut engine, &record.rows[row], p.id);
                    }
                    pending = Some((s, n));
                }
            }
        }
        if let Some((p, row)) = pending.take() {
            self.deliver(&mut engine, &record.rows[row], p.id);
        }
        let mut best = f64::NEG_INFINITY;
        for r in &mut record.rows {
            best = best.max(r.measured_objective);
            r.best_so_far = best;
        }
        record
    }

    fn deliver(&self, engine: &mut Engine, row: &IterationRow, id: usize) {
        engine
            .observe(id, row.measured_objective, &row.measured_constraints)
            .expect("measurements are finite and complete");
    }

    fn selection_safe_set(&self, engine: &Engine, s: &Suggestion) -> Vec<usize> {
        match (s.kind, engine.last_state()) {
            (SuggestionKind::Acquisition, Some(st)) => mask_indices(&st.safe),
            _ => match engine.config().safe_set_rule {
                crate::engine::SafeSetRule::Lipschitz => {
                    mask_indices(&engine.lipschitz_safe_set().expect("validated"))
                }
                crate::engine::SafeSetRule::ConfidenceBound => self.initial.clone(),
            },
        }
    }

    fn row(
        &self,
        n: usize,
        s: &Suggestion,
        safe: &[usize],
        pending: usize,
        rng: &mut ChaCha8Rng,
    ) -> IterationRow {
        let truth = self.problem.evaluate(s.point.as_slice());
        let (y0, ys) = self.measure(&truth, rng);
        let first = |i: &usize| self.grid.point(*i)[0];
        IterationRow {
            iteration: n,
            kind: s.kind,
            index: s.index,
            theta: s.point.clone(),
            violations: truth.constraints.iter().map(|g| *g < 0.0).collect(),
            truth,
            measured_objective: y0,
            measured_constraints: ys,
            safe_set_size: safe.len(),
            safe_min: safe.iter().map(first).fold(f64::INFINITY, f64::min),
            safe_max: safe.iter().map(first).fold(f64::NEG_INFINITY, f64::max),
            completed_at_selection: s.completed,
            pending_at_selection: pending,
            best_so_far: f64::NAN,
        }
    }
}

/// All replicates of one experiment, ordered by replicate index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, BenchError> {
    let setup = RunSetup::new(cfg)?;
    Ok((0..cfg.replicates)
        .into_par_iter()
        .map(|r| setup.run(r))
        .collect())
}

/// Every experiment of a study, replicates of all experiments sharing one
/// worker pool. A failure to set up one experiment is returned in its slot
/// instead of aborting the study.
pub fn run_study(experiments: &[ExperimentConfig]) -> Vec<Result<Vec<RunRecord>, BenchError>> {
    let setups: Vec<Result<RunSetup, BenchError>> = experiments.iter().map(RunSetup::new).collect();
    let jobs: Vec<(usize, usize)> = setups
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.as_ref().ok().map(|_| i))
        .flat_map(|i| (0..experiments[i].replicates).map(move |r| (i, r)))
        .collect();
    let mut done: Vec<(usize, RunRecord)> = jobs
        .into_par_iter()
        .map(|(i, r)| {
            let setup = setups[i].as_ref().expect("filtered");
            (i, setup.run(r))
        })
        .collect();
    done.sort_by_key(|(i, r)| (*i, r.replicate));
    let mut out: Vec<Result<Vec<RunRecord>, BenchError>> = setups
        .into_iter()
        .map(|s| s.map(|_| Vec::new()))
        .collect();
    for (i, rec) in done {
        if let Ok(v) = &mut out[i] {
            v.push(rec);
        }
    }
    out
}
