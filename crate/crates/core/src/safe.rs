//! Grid set operations shared by the safe optimizers: Lipschitz safe sets,
//! confidence bounds, potential maximizers, potential expanders and the
//! maximum-width acquisition rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{GpError, GpModel};
use crate::grid::{distance, DomainGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("safe set is empty")]
    EmptySafeSet,
    #[error("no candidate among maximizers and expanders")]
    NoCandidates,
    #[error("point {0:?} is not on the grid")]
    OffGrid(Vec<f64>),
    #[error("expected {expected} constraint values, got {got}")]
    ConstraintCount { expected: usize, got: usize },
    #[error("invalid safety configuration: {0}")]
    InvalidConfig(String),
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Per-constraint Lipschitz constants `L_i` and noise bounds `E_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub lipschitz: Vec<f64>,
    pub noise_bounds: Vec<f64>,
}

impl SafetyConfig {
    pub fn new(lipschitz: Vec<f64>, noise_bounds: Vec<f64>) -> Result<Self, SetError> {
        let cfg = Self {
            lipschitz,
            noise_bounds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SetError> {
        if self.lipschitz.is_empty() {
            return Err(SetError::InvalidConfig("need at least one constraint".into()));
        }
        if self.lipschitz.len() != self.noise_bounds.len() {
            return Err(SetError::InvalidConfig(format!(
                "{} Lipschitz constants but {} noise bounds",
                self.lipschitz.len(),
                self.noise_bounds.len()
            )));
        }
        if self.lipschitz.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(SetError::InvalidConfig("Lipschitz constants must be > 0".into()));
        }
        if self.noise_bounds.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(SetError::InvalidConfig("noise bounds must be >= 0".into()));
        }
        Ok(())
    }

    pub fn constraint_count(&self) -> usize {
        self.lipschitz.len()
    }
}

/// A completed measurement of every constraint at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMeasurement<'a> {
    pub point: &'a [f64],
    pub values: &'a [f64],
}

/// `S_0 ∪ ⋃_m ⋂_i {θ' : y_{i,m} - E_i - L_i ‖θ_m - θ'‖ ≥ 0}` over the completed
/// measurements `m`.
pub fn compute_safe_set(
    measurements: &[ConstraintMeasurement<'_>],
    cfg: &SafetyConfig,
    grid: &DomainGrid,
    initial_safe: &[usize],
) -> Result<Vec<bool>, SetError> {
    if initial_safe.is_empty() {
        return Err(SetError::EmptySafeSet);
    }
    let q = cfg.constraint_count();
    let mut mask = vec![false; grid.len()];
    for &i in initial_safe {
        if i >= grid.len() {
            return Err(SetError::OffGrid(vec![i as f64]));
        }
        mask[i] = true;
    }
    for m in measurements {
        if grid.index_of(m.point).is_none() {
            return Err(SetError::OffGrid(m.point.to_vec()));
        }
        if m.values.len() != q {
            return Err(SetError::ConstraintCount {
                expected: q,
                got: m.values.len(),
            });
        }
        // quick reject: the loosest constraint bounds the certified radius
        let radius = (0..q)
            .map(|i| (m.values[i] - cfg.noise_bounds[i]) / cfg.lipschitz[i])
            .fold(f64::INFINITY, f64::min);
        if radius < 0.0 {
            continue;
        }
        for (j, p) in grid.points().enumerate() {
            if mask[j] {
                continue;
            }
            let dist = distance(m.point, p);
            if (0..q).all(|i| m.values[i] - cfg.noise_bounds[i] - cfg.lipschitz[i] * dist >= 0.0) {
                mask[j] = true;
            }
        }
    }
    Ok(mask)
}

/// Lower and upper confidence bounds `μ ∓ βσ` of one function over the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn width(&self, i: usize) -> f64 {
        acquisition(self.lower[i], self.upper[i])
    }
}

/// Confidence bounds for every model (index 0 = objective, then constraints).
pub fn confidence_bounds(
    models: &[GpModel],
    beta: f64,
    grid: &DomainGrid,
) -> Result<Vec<Bounds>, SetError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(SetError::InvalidBeta(beta));
    }
    models
        .iter()
        .map(|m| {
            let post = m.posterior_many(grid.points())?;
            let (lower, upper) = post
                .mean
                .iter()
                .zip(post.std())
                .map(|(mu, s)| (mu - beta * s, mu + beta * s))
                .unzip();
            Ok(Bounds { lower, upper })
        })
        .collect()
}

/// Safe points whose objective upper bound reaches the best safe lower bound.
pub fn maximizer_set(safe: &[bool], objective: &Bounds) -> Result<Vec<bool>, SetError> {
    let best_lower = safe
        .iter()
        .zip(&objective.lower)
        .filter(|(s, _)| **s)
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if best_lower == f64::NEG_INFINITY && !safe.iter().any(|&s| s) {
        return Err(SetError::EmptySafeSet);
    }
    Ok(safe
        .iter()
        .zip(&objective.upper)
        .map(|(&s, &u)| s && u >= best_lower)
        .collect())
}

/// How the constraints combine when asking whether a safe point could
/// certify an unsafe one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    /// Some constraint's optimistic cone reaches the point.
    #[default]
    Exists,
    /// Every constraint's optimistic cone reaches the point.
    ForAll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpanderRule {
    pub quantifier: Quantifier,
    /// Use `e_n(θ) ≥ 0` (every safe point is an expander) instead of `e_n(θ) > 0`.
    pub literal_threshold: bool,
}

impl Default for ExpanderRule {
    fn default() -> Self {
        Self {
            quantifier: Quantifier::Exists,
            literal_threshold: false,
        }
    }
}

/// Potential expanders and the per-point counts `e_n(θ)` of unsafe grid
/// points that `θ` could optimistically certify.
pub fn expander_set(
    safe: &[bool],
    constraint_upper: &[&[f64]],
    cfg: &SafetyConfig,
    grid: &DomainGrid,
    rule: ExpanderRule,
) -> (Vec<bool>, Vec<usize>) {
    let q = cfg.constraint_count();
    debug_assert_eq!(constraint_upper.len(), q);
    let unsafe_idx: Vec<usize> = (0..grid.len()).filter(|&j| !safe[j]).collect();
    let mut counts = vec![0usize; grid.len()];
    for (i, count) in counts.iter_mut().enumerate() {
        if !safe[i] {
            continue;
        }
        // no cone can reach anything when every upper bound is negative
        let any_reach = (0..q).any(|c| constraint_upper[c][i] >= 0.0);
        if !any_reach {
            continue;
        }
        let p = grid.point(i);
        *count = unsafe_idx
            .iter()
            .filter(|&&j| {
                let dist = distance(p, grid.point(j));
                let reach = |c: usize| constraint_upper[c][i] - cfg.lipschitz[c] * dist >= 0.0;
                match rule.quantifier {
                    Quantifier::Exists => (0..q).any(reach),
                    Quantifier::ForAll => (0..q).all(reach),
                }
            })
            .count();
    }
    let mask = safe
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| s && (rule.literal_threshold || c > 0))
        .collect();
    (mask, counts)
}

/// Confidence interval width `u - l`.
#[inline]
pub fn acquisition(lower: f64, upper: f64) -> f64 {
    upper - lower
}

/// Index of the candidate with the largest width over all functions; ties go
/// to the lowest grid index.
pub fn select_next(candidates: &[bool], bounds: &[Bounds]) -> Result<usize, SetError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, _) in candidates.iter().enumerate().filter(|(_, &c)| c) {
        let w = bounds
            .iter()
            .map(|b| b.width(i))
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i).ok_or(SetError::NoCandidates)
}

/// Snapshot of the sets and bounds used to choose one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeState {
    pub safe: Vec<bool>,
    pub maximizers: Vec<bool>,
    pub expanders: Vec<bool>,
    pub expander_counts: Vec<usize>,
    pub bounds: Vec<Bounds>,
    pub beta: f64,
}

impl SafeState {
    pub fn candidates(&self) -> Vec<bool> {
        self.maximizers
            .iter()
            .zip(&self.expanders)
            .map(|(m, g)| *m || *g)
            .collect()
    }

    pub fn safe_count(&self) -> usize {
        crate::grid::mask_count(&self.safe)
    }

    pub fn select(&self) -> Result<usize, SetError> {
        select_next(&self.candidates(), &self.bounds)
    }
}
