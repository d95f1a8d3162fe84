//! Drive the engine by hand on a synthetic problem with two constraints:
//! suggest, measure with bounded noise, observe.

use mclosbo::bench::{Problem, SyntheticProblem};
use mclosbo::engine::{Engine, EngineConfig};
use mclosbo::grid::{mask_count, DomainGrid};
use mclosbo::safe::SafetyConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = DomainGrid::uniform(2, 21);
    let problem = SyntheticProblem::generate(3, 2, 2, &grid);
    let noise = problem.noise_bounds();
    let safety = SafetyConfig::new(problem.lipschitz(), noise[1..].to_vec())?;
    let config = EngineConfig::new(problem.gp_specs(), safety);
    let start = grid.index_of(problem.initial.as_slice()).unwrap();
    let mut engine = Engine::new(config, grid.clone(), vec![start])?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut best = f64::NEG_INFINITY;
    for it in 0..30 {
        let s = engine.suggest()?;
        let truth = problem.evaluate(&s.point.0);
        let y0 = truth.objective + rng.random_range(-noise[0]..=noise[0]);
        let ys: Vec<f64> = truth
            .constraints
            .iter()
            .zip(&noise[1..])
            .map(|(g, &e)| g + rng.random_range(-e..=e))
            .collect();
        engine.observe(s.id, y0, &ys)?;
        best = best.max(y0);
        let worst = truth.constraints.iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "{it:2} {:?} {:<11?} |S| = {:3}  f = {:.3}  min g = {:.3}  best = {best:.3}",
            s.point.0, s.kind, s.safe_count, truth.objective, worst
        );
    }
    let safe = engine.lipschitz_safe_set()?;
    println!("final safe set: {} of {} grid points", mask_count(&safe), grid.len());
    Ok(())
}
