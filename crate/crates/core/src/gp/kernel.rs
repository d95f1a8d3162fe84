use serde::{Deserialize, Serialize};

use super::GpError;

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn kernel with roughness 5/2 and one lengthscale per input dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub lengthscales: Vec<f64>,
    /// Signal variance.
    pub outputscale: f64,
}

impl KernelConfig {
    pub fn new(lengthscales: Vec<f64>, outputscale: f64) -> Result<Self, GpError> {
        let cfg = Self {
            lengthscales,
            outputscale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same lengthscale in every dimension.
    pub fn isotropic(dim: usize, lengthscale: f64, outputscale: f64) -> Result<Self, GpError> {
        Self::new(vec![lengthscale; dim], outputscale)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.lengthscales.is_empty() {
            return Err(GpError::InvalidHyperparameter(
                "at least one lengthscale required".into(),
            ));
        }
        if let Some(l) = self
            .lengthscales
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return Err(GpError::InvalidHyperparameter(format!(
                "lengthscale must be positive and finite, got {l}"
            )));
        }
        if !(self.outputscale.is_finite() && self.outputscale > 0.0) {
            return Err(GpError::InvalidHyperparameter(format!(
                "outputscale must be positive and finite, got {}",
                self.outputscale
            )));
        }
        Ok(())
    }

    /// Covariance between two points.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64, GpError> {
        if a.len() != self.dim() || b.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: if a.len() != self.dim() { a.len() } else { b.len() },
            });
        }
        Ok(self.eval_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.outputscale * matern52(self.scaled_distance(a, b))
    }

    #[inline]
    pub(crate) fn scaled_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let t = (x - y) / l;
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Derivative of `k(a, b)` with respect to `log lengthscale[j]` for every `j`,
    /// written into `out`.
    pub(crate) fn lengthscale_gradient(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let r = self.scaled_distance(a, b);
        let common = self.outputscale * (5.0 / 3.0) * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp();
        for (j, o) in out.iter_mut().enumerate() {
            let t = (a[j] - b[j]) / self.lengthscales[j];
            *o = common * t * t;
        }
    }
}

/// Unit-variance Matérn-5/2 correlation at scaled distance `r`.
#[inline]
pub fn matern52(r: f64) -> f64 {
    let s = SQRT5 * r;
    (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()
}
