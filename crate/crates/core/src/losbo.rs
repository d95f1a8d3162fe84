//! Single-function LoSBO: one unknown function is both objective and safety
//! constraint, safety is certified by one Lipschitz constant and one noise
//! bound.
//!
//! This is a separate, deliberately plain implementation. It exists so the
//! multi-constraint engine can be checked against it when run with one
//! constraint equal to the objective.

use crate::gp::{GpError, GpModel, GpSpec};
use crate::grid::DomainGrid;

#[derive(Clone, Debug)]
pub struct Losbo {
    grid: DomainGrid,
    spec: GpSpec,
    lipschitz: f64,
    noise_bound: f64,
    beta: f64,
    initial: Vec<usize>,
    queries: Vec<usize>,
    values: Vec<f64>,
}

impl Losbo {
    pub fn new(
        grid: DomainGrid,
        spec: GpSpec,
        lipschitz: f64,
        noise_bound: f64,
        beta: f64,
        initial: Vec<usize>,
    ) -> Self {
        assert!(!initial.is_empty(), "initial safe set must be non-empty");
        Self {
            grid,
            spec,
            lipschitz,
            noise_bound,
            beta,
            initial,
            queries: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn queries(&self) -> &[usize] {
        &self.queries
    }

    pub fn safe_set(&self) -> Vec<bool> {
        let n = self.grid.len();
        let mut safe = vec![false; n];
        for &i in &self.initial {
            safe[i] = true;
        }
        for (&q, &y) in self.queries.iter().zip(&self.values) {
            for (j, s) in safe.iter_mut().enumerate() {
                if y - self.noise_bound - self.lipschitz * self.grid.distance(q, j) >= 0.0 {
                    *s = true;
                }
            }
        }
        safe
    }

    /// Next query index, or `None` when no candidate remains.
    pub fn next(&self) -> Result<Option<usize>, GpError> {
        if let Some(&i) = self.initial.iter().find(|i| !self.queries.contains(i)) {
            return Ok(Some(i));
        }
        let xs: Vec<Vec<f64>> = self
            .queries
            .iter()
            .map(|&i| self.grid.point(i).to_vec())
            .collect();
        let gp = GpModel::with_data(self.spec.clone(), xs, self.values.clone())?;
        let post = gp.posterior_many(self.grid.points())?;
        let n = self.grid.len();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for j in 0..n {
            let s = post.variance[j].sqrt();
            lo[j] = post.mean[j] - self.beta * s;
            hi[j] = post.mean[j] + self.beta * s;
        }
        let safe = self.safe_set();
        let best_lower = (0..n)
            .filter(|&j| safe[j])
            .map(|j| lo[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut pick: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| safe[j]) {
            let maximizer = hi[j] >= best_lower;
            let expander = (0..n)
                .any(|k| !safe[k] && hi[j] - self.lipschitz * self.grid.distance(j, k) >= 0.0);
            if !(maximizer || expander) {
                continue;
            }
            let w = hi[j] - lo[j];
            match pick {
                Some((_, bw)) if w <= bw => {}
                _ => pick = Some((j, w)),
            }
        }
        Ok(pick.map(|(j, _)| j))
    }

    pub fn observe(&mut self, index: usize, value: f64) {
        self.queries.push(index);
        self.values.push(value);
    }
}
