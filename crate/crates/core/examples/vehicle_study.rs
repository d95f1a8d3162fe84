//! A small version of the controller-tuning study: the five standard variants
//! on the 1D vehicle problem, written to a results directory.
//!
//! `cargo run --release --example vehicle_study -- results/demo 10`

use std::path::PathBuf;

use mclosbo::bench::{median, run_study, write_all, ProblemConfig, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "results/vehicle-demo".into()));
    let replicates = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);

    let study = StudyConfig {
        name: "vehicle-demo".into(),
        dims: vec![1],
        iterations: 20,
        replicates,
        seed: 0,
        beta: 2.0,
        resolution: None,
        problem: ProblemConfig::default(),
        variants: StudyConfig::standard_variants(),
    };
    let started = chrono::Utc::now();
    let exps = study.experiments();
    let mut all = Vec::new();
    for (e, res) in exps.iter().zip(run_study(&exps)) {
        let runs = res?;
        let best: Vec<f64> = runs.iter().map(|r| r.best_objective()).collect();
        let violations: usize = runs.iter().map(|r| r.total_violations()).sum();
        println!(
            "{:<28} initial {:.4}  median best {:.4}  violations {violations}",
            e.label(),
            runs[0].initial.objective,
            median(&best)
        );
        all.extend(runs);
    }
    write_all(&dir, &all, &study, started)?;
    println!("wrote {}", dir.display());
    Ok(())
}
