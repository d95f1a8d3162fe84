//! SafeOpt-MC style baseline: safe sets propagated from GP lower confidence
//! bounds through Lipschitz cones, recomputed every iteration.
//!
//! Unlike the Lipschitz-only rule, safety here depends on the GP being well
//! specified. The maximizer, expander and acquisition steps are shared with
//! [`crate::engine::Engine`]; use [`safeopt_mc_config`] to get an engine that
//! runs this rule.

use crate::engine::{EngineConfig, SafeSetRule};
use crate::gp::{GpModel, GpSpec};
use crate::grid::{distance, DomainGrid};
use crate::safe::{confidence_bounds, SafetyConfig, SetError};

/// `⋂_i ⋃_{θ ∈ S_{n-1}} {θ' : l_i(θ) - L_i ‖θ - θ'‖ ≥ 0}` for given lower bounds.
pub fn lower_bound_safe_set(
    lower: &[&[f64]],
    lipschitz: &[f64],
    grid: &DomainGrid,
    previous: &[bool],
) -> Result<Vec<bool>, SetError> {
    if lower.len() != lipschitz.len() {
        return Err(SetError::ConstraintCount {
            expected: lipschitz.len(),
            got: lower.len(),
        });
    }
    let seeds: Vec<usize> = (0..grid.len()).filter(|&i| previous[i]).collect();
    if seeds.is_empty() {
        return Err(SetError::EmptySafeSet);
    }
    let mut mask = vec![true; grid.len()];
    for (l, &lip) in lower.iter().zip(lipschitz) {
        let anchors: Vec<usize> = seeds.iter().copied().filter(|&s| l[s] >= 0.0).collect();
        for (j, m) in mask.iter_mut().enumerate() {
            if !*m {
                continue;
            }
            let p = grid.point(j);
            *m = anchors
                .iter()
                .any(|&s| l[s] - lip * distance(grid.point(s), p) >= 0.0);
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(SetError::EmptySafeSet);
    }
    Ok(mask)
}

/// Baseline safe set from constraint GPs at confidence scaling `beta`.
pub fn baseline_safe_set(
    constraint_models: &[GpModel],
    beta: f64,
    cfg: &SafetyConfig,
    grid: &DomainGrid,
    previous: &[bool],
) -> Result<Vec<bool>, SetError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(SetError::InvalidBeta(beta));
    }
    let bounds = confidence_bounds(constraint_models, beta, grid)?;
    let lower: Vec<&[f64]> = bounds.iter().map(|b| b.lower.as_slice()).collect();
    lower_bound_safe_set(&lower, &cfg.lipschitz, grid, previous)
}

/// Engine configuration that runs the baseline safe-set rule.
pub fn safeopt_mc_config(functions: Vec<GpSpec>, safety: SafetyConfig, beta: f64) -> EngineConfig {
    EngineConfig {
        beta,
        rescale_objective: true,
        safe_set_rule: SafeSetRule::ConfidenceBound,
        ..EngineConfig::new(functions, safety)
    }
}
