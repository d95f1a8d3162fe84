use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::GpError;

/// Gamma distribution in shape/rate form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self, GpError> {
        let p = Self { shape, rate };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.shape > 0.0 && self.rate > 0.0 && self.shape.is_finite() && self.rate.is_finite() {
            Ok(())
        } else {
            Err(GpError::InvalidHyperparameter(format!(
                "gamma prior needs shape > 0 and rate > 0, got ({}, {})",
                self.shape, self.rate
            )))
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    /// d ln_pdf(x) / d ln(x)
    pub fn ln_pdf_log_gradient(&self, x: f64) -> f64 {
        (self.shape - 1.0) - self.rate * x
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// Priors on the free kernel hyperparameters used by MAP fitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPriorConfig {
    /// Applied independently to every lengthscale.
    pub lengthscale: GammaPrior,
    pub outputscale: GammaPrior,
}

impl GammaPriorConfig {
    pub fn new(lengthscale: GammaPrior, outputscale: GammaPrior) -> Result<Self, GpError> {
        lengthscale.validate()?;
        outputscale.validate()?;
        Ok(Self {
            lengthscale,
            outputscale,
        })
    }
}

impl Default for GammaPriorConfig {
    /// Γ(3, 10) on lengthscales and Γ(3, 2) on the outputscale.
    fn default() -> Self {
        Self {
            lengthscale: GammaPrior {
                shape: 3.0,
                rate: 10.0,
            },
            outputscale: GammaPrior {
                shape: 3.0,
                rate: 2.0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_matches_closed_form_for_integer_shape() {
        // Γ(3, 10): p(x) = 10^3 x^2 e^{-10x} / 2
        let p = GammaPrior::new(3.0, 10.0).unwrap();
        let x: f64 = 0.2;
        let expected = (1000.0 * x * x * (-10.0 * x).exp() / 2.0).ln();
        assert!((p.ln_pdf(x) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(GammaPrior::new(0.0, 1.0).is_err());
        assert!(GammaPrior::new(1.0, -2.0).is_err());
    }
}
