//! Brute-force oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use mclosbo::gp::GpSpec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn matern(spec: &GpSpec, a: &[f64], b: &[f64]) -> f64 {
    let r: f64 = a
        .iter()
        .zip(b)
        .zip(&spec.kernel.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt();
    let s5 = 5f64.sqrt() * r;
    spec.kernel.outputscale * (1.0 + s5 + 5.0 * r * r / 3.0) * (-s5).exp()
}

/// Posterior mean and variance at `q` from an LU solve of the noisy Gram
/// matrix. `jitter` is the extra diagonal term the model reports.
pub fn dense_posterior(
    spec: &GpSpec,
    jitter: f64,
    xs: &[Vec<f64>],
    ys: &[f64],
    q: &[f64],
) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, matern(spec, q, q));
    }
    let mut k = DMatrix::from_fn(n, n, |i, j| matern(spec, &xs[i], &xs[j]));
    for i in 0..n {
        k[(i, i)] += spec.noise.noise_std.powi(2) + jitter;
    }
    let ks = DVector::from_fn(n, |i, _| matern(spec, &xs[i], q));
    let lu = k.lu();
    let a = lu.solve(&DVector::from_column_slice(ys)).unwrap();
    let b = lu.solve(&ks).unwrap();
    (ks.dot(&a), matern(spec, q, q) - ks.dot(&b))
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let ys = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    (xs, ys)
}

/// A measured point with one value per constraint.
pub struct Meas {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn oracle_safe_set(
    points: &[Vec<f64>],
    meas: &[Meas],
    lipschitz: &[f64],
    noise: &[f64],
    initial: &[usize],
) -> Vec<bool> {
    let mut out = vec![false; points.len()];
    for (j, p) in points.iter().enumerate() {
        if initial.contains(&j) {
            out[j] = true;
            continue;
        }
        for m in meas {
            let d = euclid(&m.point, p);
            let mut ok = true;
            for i in 0..lipschitz.len() {
                if m.values[i] - noise[i] - lipschitz[i] * d < 0.0 {
                    ok = false;
                }
            }
            if ok {
                out[j] = true;
            }
        }
    }
    out
}

pub fn oracle_maximizers(safe: &[bool], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    let mut best = f64::NEG_INFINITY;
    for j in 0..safe.len() {
        if safe[j] && lower[j] > best {
            best = lower[j];
        }
    }
    (0..safe.len()).map(|j| safe[j] && upper[j] >= best).collect()
}

/// Counts over (safe point, unsafe point, constraint) triples.
pub fn oracle_expander_counts(
    points: &[Vec<f64>],
    safe: &[bool],
    upper: &[Vec<f64>],
    lipschitz: &[f64],
    for_all: bool,
) -> Vec<usize> {
    let n = points.len();
    let mut counts = vec![0; n];
    for a in 0..n {
        if !safe[a] {
            continue;
        }
        for b in 0..n {
            if safe[b] {
                continue;
            }
            let d = euclid(&points[a], &points[b]);
            let mut hits = 0;
            for i in 0..lipschitz.len() {
                if upper[i][a] - lipschitz[i] * d >= 0.0 {
                    hits += 1;
                }
            }
            let reach = if for_all { hits == lipschitz.len() } else { hits > 0 };
            if reach {
                counts[a] += 1;
            }
        }
    }
    counts
}

/// `⋂_i ⋃_{θ ∈ previous} {θ' : l_i(θ) − L_i‖θ−θ'‖ ≥ 0}`.
pub fn oracle_baseline_safe_set(
    points: &[Vec<f64>],
    lower: &[Vec<f64>],
    lipschitz: &[f64],
    previous: &[bool],
) -> Vec<bool> {
    (0..points.len())
        .map(|t| {
            (0..lipschitz.len()).all(|i| {
                (0..points.len()).any(|s| {
                    previous[s] && lower[i][s] - lipschitz[i] * euclid(&points[s], &points[t]) >= 0.0
                })
            })
        })
        .collect()
}
