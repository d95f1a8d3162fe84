use mclosbo::bench::{
    run_experiment, run_study, write_all, write_runs, write_summary, Algorithm, ExperimentConfig,
    Mode, Problem, ProblemConfig, StudyConfig, SyntheticProblem, INITIAL_MARGIN, RUNS_HEADER,
    SUMMARY_HEADER,
};
use mclosbo::engine::SuggestionKind;
use mclosbo::grid::DomainGrid;
use mclosbo::safe::Quantifier;

fn synthetic(seed: u64, dim: usize, q: usize) -> ExperimentConfig {
    let mut e = ExperimentConfig::new(dim, ProblemConfig::Synthetic { seed, constraints: q });
    e.iterations = 10;
    e
}

#[test]
fn one_iteration_queries_the_initial_point() {
    let mut e = ExperimentConfig::new(1, ProblemConfig::default());
    e.iterations = 1;
    let r = run_experiment(&e).unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].rows.len(), 1);
    let row = &r[0].rows[0];
    assert_eq!(row.kind, SuggestionKind::Bootstrap);
    assert!((row.theta.0[0] - 0.1).abs() < 1e-12);
    assert_eq!(row.truth, r[0].initial);
}

#[test]
fn two_configs_three_replicates_give_six_summary_rows() {
    let mut a = synthetic(1, 1, 2);
    a.replicates = 3;
    let mut b = synthetic(2, 2, 1);
    b.replicates = 3;
    b.mode = Mode::Async;
    let mut recs = Vec::new();
    for r in run_study(&[a, b]) {
        recs.extend(r.unwrap());
    }
    let mut out = Vec::new();
    write_summary(&mut out, &recs).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    assert_eq!(lines.len(), 7);
}

#[test]
fn violation_totals_equal_the_row_flags() {
    // misspecified baseline runs are allowed to violate, so they exercise the count
    let mut e = synthetic(7, 1, 3);
    e.algorithm = Algorithm::SafeoptMc;
    e.hyperparameter_scale = 10.0;
    e.iterations = 25;
    e.replicates = 4;
    let recs = run_experiment(&e).unwrap();
    let mut out = Vec::new();
    write_runs(&mut out, &recs).unwrap();
    let text = String::from_utf8(out).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (rep, v1, v2, v3, tot) = (col("replicate"), col("violation_1"), col("violation_2"), col("violation_3"), col("violations"));
    let mut per_rep = vec![0usize; 4];
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let flags: usize = [v1, v2, v3].iter().map(|&c| f[c].parse::<usize>().unwrap()).sum();
        assert_eq!(flags, f[tot].parse::<usize>().unwrap());
        per_rep[f[rep].parse::<usize>().unwrap()] += flags;
    }
    for r in &recs {
        assert_eq!(r.total_violations(), per_rep[r.replicate]);
        let direct: usize = r
            .rows
            .iter()
            .map(|row| row.truth.constraints.iter().filter(|g| **g < 0.0).count())
            .sum();
        assert_eq!(direct, r.total_violations());
    }
}

#[test]
fn same_seed_same_rows() {
    let mut e = synthetic(3, 2, 2);
    e.hyperopt = true;
    e.mode = Mode::Async;
    e.replicates = 2;
    let a = run_experiment(&e).unwrap();
    let b = run_experiment(&e).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.rows, y.rows);
        assert_eq!(x.safe_sets, y.safe_sets);
        assert_eq!(x.status, y.status);
    }
    e.seed = 1;
    let c = run_experiment(&e).unwrap();
    assert_ne!(a[0].rows, c[0].rows);
}

#[test]
fn replicates_differ_and_are_independent_of_each_other() {
    let mut e = synthetic(4, 1, 1);
    e.replicates = 3;
    let all = run_experiment(&e).unwrap();
    assert_ne!(all[0].rows, all[1].rows);
    let mut one = e.clone();
    one.replicates = 2;
    let part = run_experiment(&one).unwrap();
    assert_eq!(all[1].rows, part[1].rows);
}

#[test]
fn simulator_runs_improve_on_the_initial_controller() {
    let mut e = ExperimentConfig::new(1, ProblemConfig::default());
    e.replicates = 100;
    let recs = run_experiment(&e).unwrap();
    let improved = recs
        .iter()
        .filter(|r| r.best_objective() > r.initial.objective)
        .count();
    assert!(improved >= 95, "{improved} of 100");
    assert_eq!(recs.iter().map(|r| r.total_violations()).sum::<usize>(), 0);
}

#[test]
fn results_directory_has_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = synthetic(5, 1, 1);
    e.replicates = 2;
    let recs = run_experiment(&e).unwrap();
    write_all(dir.path(), &recs, &e, chrono::Utc::now()).unwrap();
    for f in ["runs.csv", "summary.csv", "quantiles.csv", "timings.csv", "meta.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().next().unwrap(), RUNS_HEADER);
    assert_eq!(runs.lines().count(), 1 + 2 * e.iterations);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["runs"], 2);
    assert_eq!(meta["config"]["iterations"], 10);
    // best_so_far round-trips exactly
    let header: Vec<&str> = RUNS_HEADER.split(',').collect();
    let col = header.iter().position(|h| *h == "best_so_far").unwrap();
    let last = runs.lines().nth(e.iterations).unwrap();
    let v: f64 = last.split(',').nth(col).unwrap().parse().unwrap();
    assert_eq!(v, recs[0].best_objective());
}

#[test]
fn failed_setups_do_not_abort_a_study() {
    let good = synthetic(1, 1, 1);
    let mut bad = synthetic(1, 1, 1);
    bad.initial = Some(vec![vec![0.123_456]]);
    let res = run_study(&[bad, good]);
    assert!(res[0].is_err());
    assert_eq!(res[1].as_ref().unwrap().len(), 1);
}

#[test]
fn experiment_toml_round_trips() {
    let text = r#"
        name = "demo"
        algorithm = "safeopt-mc"
        mode = "async"
        hyperopt = true
        dim = 2
        iterations = 12
        replicates = 3
        seed = 42
        beta = 2.5
        resolution = 11
        expander_literal = true
        expander_quantifier = "for_all"
        initial = [[0.1, 0.2]]

        [problem]
        kind = "synthetic"
        seed = 9
        constraints = 2

        [[functions]]
        lengthscale = 0.3
        outputscale = 1.0
        noise_std = 0.05
        [[functions]]
        lengthscale = 0.3
        outputscale = 1.0
        noise_std = 0.05
        [[functions]]
        lengthscale = 0.3
        outputscale = 1.0
        noise_std = 0.05

        [safety]
        lipschitz = [3.0, 4.0]
        noise_bounds = [0.05, 0.05]
    "#;
    let e = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(e.algorithm, Algorithm::SafeoptMc);
    assert_eq!(e.mode, Mode::Async);
    assert_eq!(e.expander_quantifier, Quantifier::ForAll);
    assert_eq!(e.variant(), "safeopt-mc-async-hyperopt");
    let again = ExperimentConfig::from_toml(&toml::to_string(&e).unwrap()).unwrap();
    assert_eq!(e, again);
    let grid = e.grid();
    let p = e.build_problem(&grid).unwrap();
    assert_eq!(e.initial_points(p.as_ref(), &grid).unwrap().len(), 1);
    let cfg = e.engine_config(p.as_ref()).unwrap();
    assert_eq!(cfg.beta, 2.5);
    assert_eq!(cfg.safety.lipschitz, vec![3.0, 4.0]);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(ExperimentConfig::from_toml("dim = 1\niterations = 0").is_err());
    assert!(ExperimentConfig::from_toml("dim = 1\nalgorithm = \"safeopt\"").is_err());
    let mut e = synthetic(1, 1, 2);
    e.safety = Some(mclosbo::bench::SafetyBlock {
        lipschitz: vec![1.0],
        noise_bounds: vec![0.1],
        objective_noise: None,
    });
    let grid = e.grid();
    let p = e.build_problem(&grid).unwrap();
    assert!(e.engine_config(p.as_ref()).is_err());
}

#[test]
fn study_toml_expands_to_experiments() {
    let s = StudyConfig::from_toml(
        r#"
        name = "small"
        dims = [1, 2]
        replicates = 2
        [[variants]]
        algorithm = "mclosbo"
        mode = "async"
        [[variants]]
        algorithm = "safeopt-mc"
        "#,
    )
    .unwrap();
    let exps = s.experiments();
    assert_eq!(exps.len(), 4);
    assert!(exps.iter().all(|e| e.replicates == 2 && e.iterations == 30));
    assert_eq!(exps[0].variant(), "mclosbo-async");
    assert_eq!(exps[3].dim, 2);
    assert!(StudyConfig::from_toml("dims = []\nvariants = []").is_err());
}

#[test]
fn synthetic_lipschitz_bounds_the_gradient() {
    for seed in 0..12 {
        for dim in 1..=3 {
            let grid = DomainGrid::uniform(dim, 5);
            let p = SyntheticProblem::generate(seed, dim, 3, &grid);
            let dense = DomainGrid::uniform(dim, [201, 41, 15][dim - 1]);
            let fns = std::iter::once(&p.objective).chain(&p.constraints);
            for f in fns {
                let bound = f.lipschitz_bound();
                let worst = dense
                    .points()
                    .map(|x| f.gradient(x).iter().map(|g| g * g).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                assert!(worst <= bound, "seed {seed} dim {dim}: {worst} > {bound}");
            }
        }
    }
}

#[test]
fn synthetic_initial_point_is_safe_with_margin() {
    for seed in 0..20 {
        let grid = DomainGrid::uniform(2, 31);
        let p = SyntheticProblem::generate(seed, 2, 3, &grid);
        assert!(grid.index_of(p.initial.as_slice()).is_some());
        let e = p.evaluate(p.initial.as_slice());
        assert!(e.constraints.iter().all(|g| *g >= INITIAL_MARGIN));
        assert_eq!(p.objective, SyntheticProblem::generate(seed, 2, 3, &grid).objective);
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let synth = ExperimentConfig::load(&dir.join("synthetic_safeopt.toml")).unwrap();
    assert!(synth.build_problem(&synth.grid()).is_ok());
    let veh = ExperimentConfig::load(&dir.join("vehicle_2d_async.toml")).unwrap();
    let ProblemConfig::Vehicle { config_file: Some(path), .. } = &veh.problem else {
        panic!("vehicle problem with a config file expected");
    };
    assert!(dir.join("..").join(path).exists());
    assert_eq!(StudyConfig::load(&dir.join("vehicle_study.toml")).unwrap().experiments().len(), 15);
    let v = std::fs::read_to_string(dir.join("vehicle.toml")).unwrap();
    assert_eq!(mclosbo::vehicle::VehicleConfig::from_toml(&v).unwrap(), mclosbo::vehicle::VehicleConfig::default());
}
