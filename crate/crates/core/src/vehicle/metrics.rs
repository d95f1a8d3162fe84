use serde::{Deserialize, Serialize};

use super::sim::SimTrace;
use super::VehicleError;

pub const CROSS_TRACK_LIMIT: f64 = 2.0;
pub const YAW_RATE_LIMIT: f64 = 0.2;

/// Lap cost `f` (lower is better) and the two constraint margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapMetrics {
    pub objective: f64,
    pub g1: f64,
    pub g2: f64,
    pub diverged: bool,
}

fn check(trace: &SimTrace, end: usize) -> Result<(), VehicleError> {
    if trace.k1 == 0 || trace.len() <= end {
        return Err(VehicleError::IncompleteTrace {
            samples: trace.len(),
            needed: end + 1,
        });
    }
    Ok(())
}

/// Mean of `|e_ct| + |e_ca|` over `[T0, T1)` plus the peak `|e_ct|` there.
pub fn evaluate_objective(trace: &SimTrace) -> Result<f64, VehicleError> {
    check(trace, trace.k1)?;
    let k1 = trace.k1;
    let g = |k: usize| trace.e_ct[k].abs() + trace.e_ca[k].abs();
    let integral: f64 = (0..k1)
        .map(|k| 0.5 * (g(k) + g(k + 1)) * (trace.t[k + 1] - trace.t[k]))
        .sum();
    let span = trace.t[k1] - trace.t[0];
    let peak = trace.e_ct[..k1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(integral / span + peak)
}

/// `(g1, g2)`: cross-track margin before the disturbance and yaw-rate
/// margin after it.
pub fn evaluate_constraints(trace: &SimTrace) -> Result<(f64, f64), VehicleError> {
    check(trace, trace.k2)?;
    let peak_ct = trace.e_ct[..trace.k1]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let peak_yaw = trace.yaw_rate[trace.k1..trace.k2]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((CROSS_TRACK_LIMIT - peak_ct, YAW_RATE_LIMIT - peak_yaw))
}

/// All lap metrics. A diverged trace is scored on the samples it has and its
/// cross-track margin is forced to at most zero.
pub fn evaluate(trace: &SimTrace) -> Result<LapMetrics, VehicleError> {
    if !trace.diverged {
        let objective = evaluate_objective(trace)?;
        let (g1, g2) = evaluate_constraints(trace)?;
        return Ok(LapMetrics {
            objective,
            g1,
            g2,
            diverged: false,
        });
    }
    let n = trace.len();
    let pre = trace.k1.min(n);
    let peak_ct = trace.e_ct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = if n > 1 {
        trace.e_ct.iter().zip(&trace.e_ca).map(|(a, b)| a.abs() + b.abs()).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let peak_yaw = trace.yaw_rate[pre.min(n.saturating_sub(1))..]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let finite = |v: f64| if v.is_finite() { v } else { 1e6 };
    Ok(LapMetrics {
        objective: finite(mean + peak_ct),
        g1: (CROSS_TRACK_LIMIT - finite(peak_ct)).min(0.0),
        g2: YAW_RATE_LIMIT - finite(peak_yaw),
        diverged: true,
    })
}
