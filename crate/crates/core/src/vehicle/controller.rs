use serde::{Deserialize, Serialize};

use super::VehicleError;

/// Smallest value allowed for `1 - κ_ref e_ct` in the feedforward term.
const SINGULARITY_FLOOR: f64 = 0.1;

/// Physical gain box and the values used for gains that are not tuned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainBounds {
    pub k_ct: [f64; 2],
    pub k_ca: [f64; 2],
    pub k_d: [f64; 2],
    /// Physical gains used for dimensions that are held fixed.
    pub fixed: [f64; 3],
}

impl Default for GainBounds {
    fn default() -> Self {
        Self {
            k_ct: [0.001, 0.025],
            k_ca: [0.15, 0.9],
            k_d: [0.0, 0.003],
            fixed: [0.0034, 0.225, 0.0003],
        }
    }
}

impl GainBounds {
    fn ranges(&self) -> [[f64; 2]; 3] {
        [self.k_ct, self.k_ca, self.k_d]
    }

    /// Maps a normalized point to physical gains. The first `θ.len()` gains
    /// (in the order k_ct, k_ca, k_d) are tuned; the rest keep `fixed`.
    pub fn to_physical(&self, theta: &[f64]) -> Result<ControllerParams, VehicleError> {
        if theta.is_empty() || theta.len() > 3 {
            return Err(VehicleError::Config(format!(
                "between 1 and 3 tuned gains, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(VehicleError::Config(format!(
                "normalized gains must lie in [0, 1], got {theta:?}"
            )));
        }
        let mut g = self.fixed;
        for (i, (t, [lo, hi])) in theta.iter().zip(self.ranges()).enumerate() {
            g[i] = lo + t * (hi - lo);
        }
        Ok(ControllerParams {
            k_ct: g[0],
            k_ca: g[1],
            k_d: g[2],
        })
    }

    pub fn to_normalized(&self, params: &ControllerParams, dim: usize) -> Vec<f64> {
        let g = [params.k_ct, params.k_ca, params.k_d];
        self.ranges()
            .iter()
            .zip(g)
            .take(dim)
            .map(|([lo, hi], v)| (v - lo) / (hi - lo))
            .collect()
    }
}

/// Tracking controller gains in physical units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Cross-track gain, 1/m².
    pub k_ct: f64,
    /// Course-angle gain, 1/m.
    pub k_ca: f64,
    /// Cross-track rate gain, s/m².
    pub k_d: f64,
}

impl ControllerParams {
    pub fn new(k_ct: f64, k_ca: f64, k_d: f64) -> Result<Self, VehicleError> {
        if [k_ct, k_ca, k_d].iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(VehicleError::Config(
                "controller gains must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { k_ct, k_ca, k_d })
    }
}

/// Errors seen by the controller at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingErrors {
    pub cross_track: f64,
    pub course_angle: f64,
    pub cross_track_rate: f64,
    pub curvature: f64,
}

/// Rear-axle tracking law: curvature feedforward plus three feedback terms,
/// converted to a clipped steering angle.
pub fn controller_steering(
    e: &TrackingErrors,
    params: &ControllerParams,
    wheelbase: f64,
    max_steer: f64,
) -> f64 {
    let denom = (1.0 - e.curvature * e.cross_track).max(SINGULARITY_FLOOR);
    let kappa = e.curvature * e.course_angle.cos() / denom
        - params.k_ct * e.cross_track
        - params.k_ca * e.course_angle.sin()
        - params.k_d * e.cross_track_rate;
    let delta = (wheelbase * kappa).atan();
    if delta.is_nan() {
        0.0
    } else {
        delta.clamp(-max_steer, max_steer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(ct: f64, ca: f64, rate: f64, k: f64) -> TrackingErrors {
        TrackingErrors {
            cross_track: ct,
            course_angle: ca,
            cross_track_rate: rate,
            curvature: k,
        }
    }

    #[test]
    fn zero_error_is_pure_feedforward() {
        let p = ControllerParams::new(0.01, 0.2, 0.001).unwrap();
        let d = controller_steering(&errors(0.0, 0.0, 0.0, 0.04), &p, 2.7, 0.5);
        assert_eq!(d, (2.7f64 * 0.04).atan());
    }

    #[test]
    fn steers_back_toward_path() {
        let p = ControllerParams::new(0.01, 0.2, 0.0).unwrap();
        assert!(controller_steering(&errors(0.5, 0.0, 0.0, 0.0), &p, 2.7, 0.5) < 0.0);
        assert!(controller_steering(&errors(-0.5, 0.0, 0.0, 0.0), &p, 2.7, 0.5) > 0.0);
    }

    #[test]
    fn singular_feedforward_stays_finite() {
        let p = ControllerParams::new(0.03, 0.5, 0.01).unwrap();
        for &ct in &[-100.0, -1.0, 0.0, 24.9, 25.0, 25.1, 1e6] {
            for &k in &[0.0, 0.04, 0.025, -0.04] {
                let d = controller_steering(&errors(ct, 1.0, 50.0, k), &p, 2.7, 0.5);
                assert!(d.is_finite() && d.abs() <= 0.5);
            }
        }
    }

    #[test]
    fn normalized_round_trip() {
        let b = GainBounds::default();
        let p = b.to_physical(&[0.3, 0.6]).unwrap();
        assert_eq!(p.k_d, b.fixed[2]);
        let back = b.to_normalized(&p, 2);
        assert!((back[0] - 0.3).abs() < 1e-12 && (back[1] - 0.6).abs() < 1e-12);
        assert!(b.to_physical(&[1.2]).is_err());
    }
}
