//! Asynchronous use: a new query is chosen while the previous measurement is
//! still running. Measurements arrive one step late; the engine fills the gap
//! with a virtual point at the posterior mean.

use std::collections::VecDeque;

use mclosbo::bench::{Problem, SyntheticProblem};
use mclosbo::engine::{Engine, EngineConfig};
use mclosbo::grid::DomainGrid;
use mclosbo::safe::SafetyConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = DomainGrid::uniform(1, 101);
    let problem = SyntheticProblem::generate(11, 1, 1, &grid);
    let noise = problem.noise_bounds();
    let safety = SafetyConfig::new(problem.lipschitz(), noise[1..].to_vec())?;
    let config = EngineConfig::new(problem.gp_specs(), safety);
    let start = grid.index_of(problem.initial.as_slice()).unwrap();
    let mut engine = Engine::new(config, grid, vec![start])?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut running = VecDeque::new();
    for step in 0..25 {
        let s = engine.suggest()?;
        println!(
            "step {step:2}: query {:.2} chosen from {} completed, {} pending",
            s.point.0[0],
            s.completed,
            engine.pending_count() - 1
        );
        running.push_back(s);
        if running.len() > 1 {
            let done = running.pop_front().unwrap();
            let t = problem.evaluate(&done.point.0);
            let y0 = t.objective + rng.random_range(-noise[0]..=noise[0]);
            let y1 = t.constraints[0] + rng.random_range(-noise[1]..=noise[1]);
            engine.observe(done.id, y0, &[y1])?;
        }
    }
    println!("{} completed, {} pending", engine.completed_count(), engine.pending_count());
    Ok(())
}
