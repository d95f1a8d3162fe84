//! MCLoSBO against the SafeOpt-MC baseline on the same synthetic problem,
//! first with well-specified surrogates, then with lengthscales ten times too
//! long.

use mclosbo::bench::{median, run_experiment, Algorithm, ExperimentConfig, ProblemConfig, RunStatus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<12} {:>6} {:>12} {:>11} {:>10}", "algorithm", "scale", "median best", "violations", "early stop");
    for scale in [1.0, 10.0] {
        for algorithm in [Algorithm::Mclosbo, Algorithm::SafeoptMc] {
            let mut e = ExperimentConfig::new(2, ProblemConfig::Synthetic { seed: 10, constraints: 2 });
            e.algorithm = algorithm;
            e.hyperparameter_scale = scale;
            e.iterations = 30;
            e.replicates = 8;
            let runs = run_experiment(&e)?;
            let best: Vec<f64> = runs.iter().map(|r| r.best_objective_true()).collect();
            let violations: usize = runs.iter().map(|r| r.total_violations()).sum();
            let stopped = runs.iter().filter(|r| r.status != RunStatus::Completed).count();
            println!(
                "{:<12} {scale:>6} {:>12.4} {violations:>11} {stopped:>10}",
                algorithm.as_str(),
                median(&best)
            );
        }
    }
    Ok(())
}
