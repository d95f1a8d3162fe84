use serde::{Deserialize, Serialize};

use super::GpError;

/// Affine map recorded by [`minmax_rescale`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxTransform {
    pub min: f64,
    pub max: f64,
}

impl MinMaxTransform {
    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.5
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    pub fn inverse(&self, s: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            self.min + s * (self.max - self.min)
        }
    }

    /// Factor by which the map multiplies differences.
    pub fn scale(&self) -> f64 {
        if self.is_degenerate() {
            1.0
        } else {
            1.0 / (self.max - self.min)
        }
    }
}

/// Maps `values` affinely onto `[0, 1]` (minimum to 0, maximum to 1); a
/// constant input maps to 0.5 everywhere.
pub fn minmax_rescale(values: &[f64]) -> Result<(Vec<f64>, MinMaxTransform), GpError> {
    if values.is_empty() {
        return Err(GpError::InsufficientData { needed: 1, have: 0 });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(GpError::NonFinite("rescale input"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t = MinMaxTransform { min, max };
    Ok((values.iter().map(|&v| t.apply(v)).collect(), t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_examples() {
        assert_eq!(minmax_rescale(&[2.0, 4.0, 6.0]).unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax_rescale(&[-1.0, 0.0, 3.0]).unwrap().0, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn constant_maps_to_half() {
        let (s, t) = minmax_rescale(&[5.0]).unwrap();
        assert_eq!(s, vec![0.5]);
        assert_eq!(t.inverse(0.5), 5.0);
        assert_eq!(minmax_rescale(&[3.0, 3.0]).unwrap().0, vec![0.5, 0.5]);
    }

    #[test]
    fn inverse_round_trips() {
        let v = [0.3, -2.0, 7.5, 1.25];
        let (s, t) = minmax_rescale(&v).unwrap();
        for (a, b) in v.iter().zip(&s) {
            assert!((t.inverse(*b) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert!(minmax_rescale(&[]).is_err());
        assert_eq!(
            minmax_rescale(&[1.0, f64::INFINITY]).unwrap_err(),
            GpError::NonFinite("rescale input")
        );
    }
}
