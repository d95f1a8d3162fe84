//! Exact Gaussian process regression with a zero prior mean.
//!
//! A [`GpModel`] holds its hyperparameters, the conditioning data and a Cholesky
//! factorization of `K + (σ_d² + jitter) I` that is rebuilt whenever the data or
//! hyperparameters change. The jitter starts at `1e-10 σ_f²` and is escalated by
//! factors of ten up to `1e-6 σ_f²` before giving up.

mod fit;
mod kernel;
mod prior;
mod scale;

pub use fit::{fit_hyperparameters, FitOptions, FitResult};
pub use kernel::{matern52, KernelConfig};
pub use prior::{GammaPrior, GammaPriorConfig};
pub use scale::{minmax_rescale, MinMaxTransform};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("gram matrix not positive definite even with jitter {jitter:e} (n = {n})")]
    NotPositiveDefinite { n: usize, jitter: f64 },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("operation needs at least {needed} observations, have {have}")]
    InsufficientData { needed: usize, have: usize },
}

/// Observation noise used in the Gaussian likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub noise_std: f64,
}

impl NoiseConfig {
    pub fn new(noise_std: f64) -> Result<Self, GpError> {
        if noise_std.is_finite() && noise_std >= 0.0 {
            Ok(Self { noise_std })
        } else {
            Err(GpError::InvalidHyperparameter(format!(
                "noise std must be finite and >= 0, got {noise_std}"
            )))
        }
    }

    pub fn variance(&self) -> f64 {
        self.noise_std * self.noise_std
    }
}

/// Hyperparameters of a single-output GP, without data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSpec {
    pub kernel: KernelConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub priors: Option<GammaPriorConfig>,
}

#[derive(Clone, Debug)]
struct Factorization {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Posterior mean and variance at a batch of points.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl Posterior {
    pub fn std(&self) -> impl Iterator<Item = f64> + '_ {
        self.variance.iter().map(|v| v.sqrt())
    }
}

/// Log marginal likelihood (plus log prior when priors are attached) and its
/// gradient with respect to `[log ℓ_1 .. log ℓ_d, log σ_f², log σ_d²]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GpModel {
    spec: GpSpec,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    factor: Option<Factorization>,
}

impl GpModel {
    pub fn new(kernel: KernelConfig, noise: NoiseConfig) -> Self {
        Self::from_spec(GpSpec {
            kernel,
            noise,
            priors: None,
        })
    }

    pub fn from_spec(spec: GpSpec) -> Self {
        Self {
            spec,
            inputs: Vec::new(),
            targets: Vec::new(),
            factor: None,
        }
    }

    pub fn with_priors(mut self, priors: GammaPriorConfig) -> Self {
        self.spec.priors = Some(priors);
        self
    }

    /// Builds a model conditioned on all `(inputs[i], targets[i])` at once.
    pub fn with_data(
        spec: GpSpec,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self, GpError> {
        if inputs.len() != targets.len() {
            return Err(GpError::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        let d = spec.kernel.dim();
        if let Some(x) = inputs.iter().find(|x| x.len() != d) {
            return Err(GpError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if inputs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite("inputs"));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite("observations"));
        }
        let mut model = Self {
            spec,
            inputs,
            targets,
            factor: None,
        };
        model.refactor()?;
        Ok(model)
    }

    pub fn spec(&self) -> &GpSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.spec.kernel
    }

    pub fn noise(&self) -> NoiseConfig {
        self.spec.noise
    }

    pub fn priors(&self) -> Option<&GammaPriorConfig> {
        self.spec.priors.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.spec.kernel.dim()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Jitter added to the diagonal at the last successful factorization.
    pub fn jitter(&self) -> f64 {
        self.factor.as_ref().map_or(0.0, |f| f.jitter)
    }

    /// Returns a new model additionally conditioned on `(x, y)`.
    pub fn update(&self, x: &[f64], y: f64) -> Result<Self, GpError> {
        let mut next = self.clone();
        next.push(x, y)?;
        Ok(next)
    }

    /// Conditions this model on `(x, y)` in place.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<(), GpError> {
        if x.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !y.is_finite() {
            return Err(GpError::NonFinite("observation"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite("input"));
        }
        self.inputs.push(x.to_vec());
        self.targets.push(y);
        if let Err(e) = self.refactor() {
            self.inputs.pop();
            self.targets.pop();
            self.refactor()?;
            return Err(e);
        }
        Ok(())
    }

    /// Same data, different kernel hyperparameters.
    pub fn with_kernel(&self, kernel: KernelConfig) -> Result<Self, GpError> {
        kernel.validate()?;
        if kernel.dim() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: kernel.dim(),
            });
        }
        let mut next = Self {
            spec: GpSpec {
                kernel,
                ..self.spec.clone()
            },
            inputs: self.inputs.clone(),
            targets: self.targets.clone(),
            factor: None,
        };
        next.refactor()?;
        Ok(next)
    }

    /// Same inputs, replaced targets.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self, GpError> {
        Self::with_data(self.spec.clone(), self.inputs.clone(), targets)
    }

    fn gram(&self) -> DMatrix<f64> {
        let n = self.len();
        let k = &self.spec.kernel;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = k.outputscale;
            for j in 0..i {
                let v = k.eval_unchecked(&self.inputs[i], &self.inputs[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn refactor(&mut self) -> Result<(), GpError> {
        if self.is_empty() {
            self.factor = None;
            return Ok(());
        }
        let gram = self.gram();
        let factor = factorize(&gram, self.spec.noise.variance(), self.spec.kernel.outputscale)?;
        let y = DVector::from_column_slice(&self.targets);
        let alpha = factor.0.solve(&y);
        self.factor = Some(Factorization {
            chol: factor.0,
            alpha,
            jitter: factor.1,
        });
        Ok(())
    }

    /// Posterior mean and variance of the latent function at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64), GpError> {
        if x.len() != self.dim() {
            return Err(GpError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let p = self.posterior_many(std::iter::once(x))?;
        Ok((p.mean[0], p.variance[0]))
    }

    /// Posterior at many points; the variance is clamped to `[0, σ_f²]`.
    pub fn posterior_many<'a, I>(&self, points: I) -> Result<Posterior, GpError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let pts: Vec<&[f64]> = points.into_iter().collect();
        let d = self.dim();
        if let Some(p) = pts.iter().find(|p| p.len() != d) {
            return Err(GpError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        let k = &self.spec.kernel;
        let prior_var = k.outputscale;
        let Some(factor) = &self.factor else {
            return Ok(Posterior {
                mean: vec![0.0; pts.len()],
                variance: vec![prior_var; pts.len()],
            });
        };
        let n = self.len();
        let m = pts.len();
        let mut cross = DMatrix::zeros(n, m);
        for (j, p) in pts.iter().enumerate() {
            for i in 0..n {
                cross[(i, j)] = k.eval_unchecked(&self.inputs[i], p);
            }
        }
        let mean: Vec<f64> = cross.tr_mul(&factor.alpha).iter().copied().collect();
        let l = factor.chol.l_dirty();
        let mut v = cross;
        l.solve_lower_triangular_mut(&mut v);
        let variance = v
            .column_iter()
            .map(|c| (prior_var - c.norm_squared()).clamp(0.0, prior_var))
            .collect();
        Ok(Posterior { mean, variance })
    }

    /// Log marginal likelihood of the data, plus the Gamma log densities of the
    /// lengthscales and outputscale when priors are attached (MAP objective).
    pub fn log_marginal_likelihood(&self) -> Result<LogLikelihood, GpError> {
        let Some(factor) = &self.factor else {
            return Err(GpError::InsufficientData { needed: 1, have: 0 });
        };
        let n = self.len();
        let d = self.dim();
        let k = &self.spec.kernel;
        let y = DVector::from_column_slice(&self.targets);
        let alpha = &factor.alpha;
        let log_det: f64 = factor.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let mut value = -0.5 * y.dot(alpha) - log_det
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        // W = α αᵀ - K⁻¹; dL/dp = ½ tr(W ∂K/∂p)
        let mut w = factor.chol.inverse();
        w.neg_mut();
        w.ger(1.0, alpha, alpha, 1.0);

        let mut gradient = vec![0.0; d + 2];
        let mut dl = vec![0.0; d];
        // strictly lower triangle; each off-diagonal pair appears twice in the trace
        for i in 0..n {
            for j in 0..i {
                k.lengthscale_gradient(&self.inputs[i], &self.inputs[j], &mut dl);
                let wij = w[(i, j)];
                for (g, v) in gradient[..d].iter_mut().zip(&dl) {
                    *g += wij * v;
                }
                gradient[d] += wij * k.eval_unchecked(&self.inputs[i], &self.inputs[j]);
            }
        }
        let trace_w: f64 = w.diagonal().sum();
        gradient[d] += 0.5 * trace_w * (k.outputscale + factor.jitter);
        gradient[d + 1] = 0.5 * trace_w * self.spec.noise.variance();

        if let Some(pr) = &self.spec.priors {
            for (j, &l) in k.lengthscales.iter().enumerate() {
                value += pr.lengthscale.ln_pdf(l);
                gradient[j] += pr.lengthscale.ln_pdf_log_gradient(l);
            }
            value += pr.outputscale.ln_pdf(k.outputscale);
            gradient[d] += pr.outputscale.ln_pdf_log_gradient(k.outputscale);
        }
        Ok(LogLikelihood { value, gradient })
    }
}

/// Cholesky of `gram + (noise_var + jitter) I` with jitter escalation.
fn factorize(
    gram: &DMatrix<f64>,
    noise_var: f64,
    outputscale: f64,
) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    let n = gram.nrows();
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * outputscale;
        let mut m = gram.clone();
        for i in 0..n {
            m[(i, i)] += noise_var + jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        if rel >= JITTER_MAX {
            return Err(GpError::NotPositiveDefinite { n, jitter });
        }
        rel *= 10.0;
    }
}
