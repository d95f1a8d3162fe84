//! CSV and JSON writers for run results. Floats use 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use super::runner::RunRecord;

pub const RUNS_HEADER: &str = "experiment,variant,algorithm,mode,hyperopt,dim,replicate,iteration,kind,\
grid_index,theta_0,theta_1,theta_2,raw_objective,objective_true,objective_measured,\
g1_true,g1_measured,g2_true,g2_measured,g3_true,g3_measured,\
violation_1,violation_2,violation_3,violations,safe_set_size,safe_min,safe_max,\
completed_at_selection,pending_at_selection,best_so_far";

pub const SUMMARY_HEADER: &str = "experiment,variant,algorithm,mode,hyperopt,dim,replicate,status,\
iterations,initial_objective,best_objective,best_objective_true,final_objective,\
total_violations,violating_queries,final_safe_set_size";

pub const QUANTILES_HEADER: &str = "variant,dim,metric,n,min,q25,median,q75,max,mean";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn prefix(r: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.experiment,
        r.variant,
        r.algorithm.as_str(),
        r.mode.as_str(),
        r.hyperopt,
        r.dim,
        r.replicate
    )
}

pub fn write_runs<W: Write>(mut w: W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    for r in records {
        let p = prefix(r);
        for row in &r.rows {
            let mut line = String::new();
            let kind = match row.kind {
                crate::engine::SuggestionKind::Bootstrap => "bootstrap",
                crate::engine::SuggestionKind::Acquisition => "acquisition",
            };
            write!(line, "{p},{},{kind},{}", row.iteration, row.index).unwrap();
            for k in 0..3 {
                write!(line, ",{}", opt(row.theta.0.get(k).map(|v| fmt_f64(*v)))).unwrap();
            }
            write!(
                line,
                ",{},{},{}",
                fmt_f64(row.truth.raw_objective),
                fmt_f64(row.truth.objective),
                fmt_f64(row.measured_objective)
            )
            .unwrap();
            for k in 0..3 {
                write!(
                    line,
                    ",{},{}",
                    opt(row.truth.constraints.get(k).map(|v| fmt_f64(*v))),
                    opt(row.measured_constraints.get(k).map(|v| fmt_f64(*v)))
                )
                .unwrap();
            }
            for k in 0..3 {
                write!(line, ",{}", opt(row.violations.get(k).map(|&v| v as u8))).unwrap();
            }
            write!(
                line,
                ",{},{},{},{},{},{},{}",
                row.violations.iter().filter(|&&v| v).count(),
                row.safe_set_size,
                fmt_f64(row.safe_min),
                fmt_f64(row.safe_max),
                row.completed_at_selection,
                row.pending_at_selection,
                fmt_f64(row.best_so_far)
            )
            .unwrap();
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub fn write_summary<W: Write>(mut w: W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},\"{}\",{},{},{},{},{},{},{},{}",
            prefix(r),
            r.status.as_str().replace('"', "'"),
            r.rows.len(),
            fmt_f64(r.initial.objective),
            fmt_f64(r.best_objective()),
            fmt_f64(r.best_objective_true()),
            fmt_f64(r.final_objective()),
            r.total_violations(),
            r.violating_queries(),
            r.rows.last().map_or(0, |x| x.safe_set_size)
        )?;
    }
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = q * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Best-objective distribution per `(variant, dim)`, in first-seen order.
pub fn write_quantiles<W: Write>(mut w: W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(w, "{QUANTILES_HEADER}")?;
    let mut groups: Vec<((String, usize), Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.variant.clone(), r.dim);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    type Metric = fn(&RunRecord) -> f64;
    let metrics: [(&str, Metric); 3] = [
        ("best_objective", RunRecord::best_objective),
        ("best_objective_true", RunRecord::best_objective_true),
        ("final_objective", RunRecord::final_objective),
    ];
    for ((variant, dim), recs) in groups {
        for (name, f) in metrics {
            let mut v: Vec<f64> = recs.iter().map(|r| f(r)).filter(|x| x.is_finite()).collect();
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            writeln!(
                w,
                "{variant},{dim},{name},{},{},{},{},{},{},{}",
                v.len(),
                fmt_f64(quantile(&v, 0.0)),
                fmt_f64(quantile(&v, 0.25)),
                fmt_f64(quantile(&v, 0.5)),
                fmt_f64(quantile(&v, 0.75)),
                fmt_f64(quantile(&v, 1.0)),
                fmt_f64(mean)
            )?;
        }
    }
    Ok(())
}

pub fn write_timings<W: Write>(mut w: W, records: &[RunRecord]) -> io::Result<()> {
    writeln!(w, "experiment,replicate,iteration,wall_time_s")?;
    for r in records {
        for (i, t) in r.wall_times.iter().enumerate() {
            writeln!(w, "{},{},{i},{t:.6}", r.experiment, r.replicate)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    git_hash: String,
    started: String,
    finished: String,
    runs: usize,
    config: &'a C,
}

fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `runs.csv`, `summary.csv`, `quantiles.csv`, `timings.csv` and
/// `meta.json` into `dir`.
pub fn write_all<C: Serialize>(
    dir: &Path,
    records: &[RunRecord],
    config: &C,
    started: chrono::DateTime<chrono::Utc>,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let open = |name: &str| fs::File::create(dir.join(name)).map(io::BufWriter::new);
    write_runs(open("runs.csv")?, records)?;
    write_summary(open("summary.csv")?, records)?;
    write_quantiles(open("quantiles.csv")?, records)?;
    write_timings(open("timings.csv")?, records)?;
    let meta = Meta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        git_hash: git_hash(),
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        runs: records.len(),
        config,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
    fs::write(dir.join("meta.json"), json + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-17, 12345.678] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
