//! Save the optimizer state to JSON mid-run, including a pending query, and
//! resume from it in a fresh engine.

use mclosbo::bench::{Problem, SyntheticProblem};
use mclosbo::engine::{Engine, EngineConfig, HyperoptConfig};
use mclosbo::grid::DomainGrid;
use mclosbo::safe::SafetyConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = DomainGrid::uniform(2, 15);
    let problem = SyntheticProblem::generate(21, 2, 1, &grid);
    let safety = SafetyConfig::new(problem.lipschitz(), vec![0.0])?;
    let mut config = EngineConfig::new(problem.gp_specs(), safety);
    config.hyperopt = Some(HyperoptConfig::default());
    let start = grid.index_of(problem.initial.as_slice()).unwrap();
    let mut engine = Engine::new(config, grid, vec![start])?;

    let measure = |e: &mut Engine, id: usize, x: &[f64]| {
        let t = problem.evaluate(x);
        e.observe(id, t.objective, &t.constraints)
    };
    for _ in 0..8 {
        let s = engine.suggest()?;
        measure(&mut engine, s.id, &s.point.0)?;
    }
    let pending = engine.suggest()?;
    let json = engine.to_json();
    println!("snapshot: {} bytes, {} records, 1 pending", json.len(), engine.records().len());

    let mut resumed = Engine::from_json(&json)?;
    measure(&mut resumed, pending.id, &pending.point.0)?;
    measure(&mut engine, pending.id, &pending.point.0)?;
    for _ in 0..5 {
        let a = engine.suggest()?;
        let b = resumed.suggest()?;
        assert_eq!(a, b);
        println!("both choose {:?}", a.point.0);
        measure(&mut engine, a.id, &a.point.0)?;
        measure(&mut resumed, b.id, &b.point.0)?;
    }
    Ok(())
}
