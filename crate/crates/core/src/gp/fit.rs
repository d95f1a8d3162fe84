//! MAP hyperparameter fitting by multi-start gradient ascent in log space.
//!
//! Only lengthscales and outputscale are free; the noise level stays at its
//! configured value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{GammaPriorConfig, GpModel, KernelConfig};

const LOG_BOUNDS_LENGTHSCALE: (f64, f64) = (-6.907_755_278_982_137, 4.605_170_185_988_092); // [1e-3, 1e2]
const LOG_BOUNDS_OUTPUTSCALE: (f64, f64) = (-13.815_510_557_964_274, 9.210_340_371_976_184); // [1e-6, 1e4]

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Total number of starts, the first being the model's current hyperparameters.
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop a start once the objective improves by less than this (absolute).
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iters: 100,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub kernel: KernelConfig,
    /// MAP objective at the starting hyperparameters (`-inf` if it could not be evaluated).
    pub initial_objective: f64,
    pub objective: f64,
    /// Set when no start improved on the initial hyperparameters.
    pub warning: bool,
}

struct Objective<'a> {
    model: &'a GpModel,
    priors: GammaPriorConfig,
}

impl Objective<'_> {
    fn kernel(&self, p: &[f64]) -> KernelConfig {
        let d = p.len() - 1;
        KernelConfig {
            lengthscales: p[..d].iter().map(|v| v.exp()).collect(),
            outputscale: p[d].exp(),
        }
    }

    fn eval(&self, p: &[f64]) -> Option<(f64, Vec<f64>)> {
        let m = self.model.with_kernel(self.kernel(p)).ok()?;
        let m = m.with_priors(self.priors);
        let ll = m.log_marginal_likelihood().ok()?;
        if !ll.value.is_finite() || ll.gradient.iter().any(|g| !g.is_finite()) {
            return None;
        }
        let mut g = ll.gradient;
        g.truncate(p.len());
        Some((ll.value, g))
    }
}

fn clamp_params(p: &mut [f64]) {
    let d = p.len() - 1;
    for v in &mut p[..d] {
        *v = v.clamp(LOG_BOUNDS_LENGTHSCALE.0, LOG_BOUNDS_LENGTHSCALE.1);
    }
    p[d] = p[d].clamp(LOG_BOUNDS_OUTPUTSCALE.0, LOG_BOUNDS_OUTPUTSCALE.1);
}

/// Projected gradient ascent with a backtracking (Armijo) line search.
fn ascend(obj: &Objective, start: Vec<f64>, opts: &FitOptions) -> Option<(Vec<f64>, f64)> {
    let mut x = start;
    clamp_params(&mut x);
    let (mut fx, mut gx) = obj.eval(&x)?;
    let mut step = 0.1;
    for _ in 0..opts.max_iters {
        let mut accepted = false;
        while step > 1e-10 {
            let mut cand: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a + step * g).collect();
            clamp_params(&mut cand);
            let predicted: f64 = cand
                .iter()
                .zip(&x)
                .zip(&gx)
                .map(|((c, a), g)| (c - a) * g)
                .sum();
            if predicted <= 0.0 {
                break;
            }
            match obj.eval(&cand) {
                Some((fc, gc)) if fc >= fx + 1e-4 * predicted => {
                    let gain = fc - fx;
                    x = cand;
                    fx = fc;
                    gx = gc;
                    step *= 2.0;
                    accepted = true;
                    if gain < opts.tolerance {
                        return Some((x, fx));
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            break;
        }
    }
    Some((x, fx))
}

/// Maximizes the log marginal likelihood plus Gamma log-priors over
/// `log ℓ` and `log σ_f²`, starting from the model's current kernel and
/// `opts.restarts - 1` draws from the priors.
pub fn fit_hyperparameters(
    model: &GpModel,
    priors: &GammaPriorConfig,
    opts: &FitOptions,
) -> FitResult {
    let initial = model.kernel().clone();
    let obj = Objective {
        model,
        priors: *priors,
    };
    let mut start: Vec<f64> = initial.lengthscales.iter().map(|l| l.ln()).collect();
    start.push(initial.outputscale.ln());
    let initial_objective = obj.eval(&start).map_or(f64::NEG_INFINITY, |(v, _)| v);
    let fallback = FitResult {
        kernel: initial.clone(),
        initial_objective,
        objective: initial_objective,
        warning: true,
    };
    if model.len() < 2 || !initial_objective.is_finite() {
        return fallback;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let ls_dist = Gamma::new(priors.lengthscale.shape, 1.0 / priors.lengthscale.rate).ok();
    let os_dist = Gamma::new(priors.outputscale.shape, 1.0 / priors.outputscale.rate).ok();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..opts.restarts.max(1) {
        let s = if r == 0 {
            start.clone()
        } else {
            let (Some(ld), Some(od)) = (&ls_dist, &os_dist) else {
                break;
            };
            let mut s: Vec<f64> = (0..model.dim())
                .map(|_| ld.sample(&mut rng).max(1e-3).ln())
                .collect();
            s.push(od.sample(&mut rng).max(1e-6).ln());
            s
        };
        if let Some((x, fx)) = ascend(&obj, s, opts) {
            if best.as_ref().is_none_or(|(_, fb)| fx > *fb) {
                best = Some((x, fx));
            }
        }
    }
    match best {
        Some((x, fx)) if fx > initial_objective => FitResult {
            kernel: obj.kernel(&x),
            initial_objective,
            objective: fx,
            warning: false,
        },
        _ => fallback,
    }
}
