use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mclosbo::bench::{run_experiment, run_study, write_all, ExperimentConfig, StudyConfig, SyntheticProblem};
use mclosbo::grid::{default_resolution, DomainGrid};
use mclosbo::vehicle::{estimate_lipschitz, ControllerParams, Simulator, VehicleConfig};

#[derive(Parser)]
#[command(name = "mclosbo", version, about = "Safe Bayesian optimization experiments")]
struct Cli {
    /// Worker threads for parallel replicates.
    #[arg(long, global = true, env = "MCLOSBO_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config for all its replicates.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "MCLOSBO_OUT_DIR")]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a study: variants crossed with dimensions.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "MCLOSBO_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Estimate Lipschitz constants of the constraints on a grid.
    Lipschitz {
        #[arg(long, value_enum, default_value_t = ProblemKind::Sim)]
        problem: ProblemKind,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = 1.5)]
        factor: f64,
        /// Seed of the synthetic problem.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file with `[track]`, `[sim]` and `[gains]` tables.
        #[arg(long)]
        vehicle_config: Option<PathBuf>,
    },
    /// Simulate one lap with physical gains and write the trace as CSV.
    ExportTrace {
        /// Comma-separated k_ct,k_ca,k_d.
        #[arg(long, value_delimiter = ',', required = true)]
        params: Vec<f64>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
        #[arg(long)]
        vehicle_config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Sim,
    Synthetic,
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn vehicle(path: Option<&Path>) -> Result<Simulator> {
    let cfg = match path {
        Some(p) => VehicleConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => VehicleConfig::default(),
    };
    Ok(Simulator::new(cfg)?)
}

fn out_dir(out: Option<PathBuf>, name: &str) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("results").join(if name.is_empty() { "run" } else { name }))
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Run { config, out, seed } => {
            let started = chrono::Utc::now();
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let records = run_experiment(&cfg)?;
            let dir = out_dir(out, &cfg.label());
            write_all(&dir, &records, &cfg, started)?;
            let v: usize = records.iter().map(|r| r.total_violations()).sum();
            println!("{} replicates, {v} violations -> {}", records.len(), dir.display());
        }
        Command::Study { config, out } => {
            let started = chrono::Utc::now();
            let cfg = StudyConfig::load(&config)?;
            let exps = cfg.experiments();
            let mut records = Vec::new();
            for (e, res) in exps.iter().zip(run_study(&exps)) {
                match res {
                    Ok(r) => records.extend(r),
                    Err(err) => log::error!("{}: {err}", e.label()),
                }
            }
            let dir = out_dir(out, &cfg.name);
            write_all(&dir, &records, &cfg, started)?;
            println!("{} runs -> {}", records.len(), dir.display());
        }
        Command::Lipschitz {
            problem,
            dim,
            resolution,
            factor,
            seed,
            vehicle_config,
        } => {
            let grid = DomainGrid::uniform(dim, resolution.unwrap_or(default_resolution(dim)));
            let est = match problem {
                ProblemKind::Sim => {
                    let sim = vehicle(vehicle_config.as_deref())?;
                    estimate_lipschitz(
                        |t| match sim.run_normalized(t) {
                            Ok(m) => vec![m.g1, m.g2],
                            Err(_) => vec![f64::NAN, f64::NAN],
                        },
                        &grid,
                        factor,
                    )
                }
                ProblemKind::Synthetic => {
                    let p = SyntheticProblem::generate(seed, dim, 3, &grid);
                    println!("analytic bounds: {:?}", p.lipschitz());
                    estimate_lipschitz(
                        |t| p.constraints.iter().map(|g| g.eval(t)).collect(),
                        &grid,
                        factor,
                    )
                }
            };
            for (i, (c, r)) in est.constants.iter().zip(&est.raw).enumerate() {
                println!("g{}: L = {c:.6} (max slope {r:.6})", i + 1);
            }
            if est.skipped > 0 {
                println!("{} grid points skipped", est.skipped);
            }
        }
        Command::ExportTrace {
            params,
            out,
            vehicle_config,
        } => {
            if params.len() != 3 {
                return Err(format!("expected 3 gains, got {}", params.len()).into());
            }
            let sim = vehicle(vehicle_config.as_deref())?;
            let p = ControllerParams::new(params[0], params[1], params[2])?;
            let trace = sim.trace(&p)?;
            trace.write_csv(std::io::BufWriter::new(std::fs::File::create(&out)?))?;
            let m = mclosbo::vehicle::evaluate(&trace)?;
            println!(
                "f = {:.6}, g1 = {:.6}, g2 = {:.6}, diverged = {} -> {}",
                m.objective,
                m.g1,
                m.g2,
                m.diverged,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
