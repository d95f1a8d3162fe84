//! Random smooth test functions with known Lipschitz bounds and a known
//! safe starting point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{DomainGrid, ParameterPoint};

/// Margin every constraint has at the initial point.
pub const INITIAL_MARGIN: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub amplitude: f64,
    pub width: f64,
}

/// `offset + Σ a_k exp(-‖θ - c_k‖² / (2 w_k²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub bumps: Vec<Bump>,
    pub offset: f64,
}

impl BumpFunction {
    fn random(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        let n = rng.random_range(3..=6);
        let bumps = (0..n)
            .map(|_| Bump {
                center: (0..dim).map(|_| rng.random::<f64>()).collect(),
                amplitude: rng.random_range(0.3..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                width: rng.random_range(0.2..0.5),
            })
            .collect();
        Self { bumps, offset: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .bumps
                .iter()
                .map(|b| {
                    let r2: f64 = b.center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
                    b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp()
                })
                .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for b in &self.bumps {
            let r2: f64 = b.center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
            let w2 = b.width * b.width;
            let s = -b.amplitude * (-r2 / (2.0 * w2)).exp() / w2;
            for (gi, (c, v)) in g.iter_mut().zip(b.center.iter().zip(x)) {
                *gi += s * (v - c);
            }
        }
        g
    }

    /// Sum of the per-bump maximal gradient norms `|a| e^{-1/2} / w`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.amplitude.abs() * (-0.5f64).exp() / b.width)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProblem {
    pub seed: u64,
    pub dim: usize,
    pub objective: BumpFunction,
    pub constraints: Vec<BumpFunction>,
    pub initial: ParameterPoint,
}

impl SyntheticProblem {
    /// Deterministic problem for `(seed, dim, q)`. The initial point is a
    /// point of `grid` and every constraint exceeds [`INITIAL_MARGIN`] there.
    pub fn generate(seed: u64, dim: usize, q: usize, grid: &DomainGrid) -> Self {
        assert!((1..=3).contains(&dim) && q >= 1 && grid.dim() == dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = rng.random_range(0..grid.len());
        let initial = ParameterPoint(grid.point(idx).to_vec());
        let objective = BumpFunction::random(&mut rng, dim);
        let constraints = (0..q)
            .map(|_| {
                let mut g = BumpFunction::random(&mut rng, dim);
                let extra = rng.random_range(0.0..0.8);
                g.offset = INITIAL_MARGIN + extra - g.eval(initial.as_slice());
                g
            })
            .collect();
        Self {
            seed,
            dim,
            objective,
            constraints,
            initial,
        }
    }

    pub fn lipschitz(&self) -> Vec<f64> {
        self.constraints.iter().map(BumpFunction::lipschitz_bound).collect()
    }
}
