//! Simulate one lap of the path-tracking benchmark and write the trace.
//!
//! `cargo run --release --example vehicle_trace -- 0.1,0.1,0.1 lap.csv`
//! takes normalized gains in [0, 1].

use mclosbo::vehicle::{evaluate, Simulator, VehicleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let theta: Vec<f64> = match args.next() {
        Some(s) => s.split(',').map(str::parse).collect::<Result<_, _>>()?,
        None => vec![0.1, 0.1, 0.1],
    };
    let out = args.next().unwrap_or_else(|| "lap.csv".into());

    let config = VehicleConfig::default();
    let params = config.gains.to_physical(&theta)?;
    let sim = Simulator::new(config)?;
    let trace = sim.trace(&params)?;
    trace.write_csv(std::io::BufWriter::new(std::fs::File::create(&out)?))?;

    let m = evaluate(&trace)?;
    println!("gains {params:?}");
    println!("objective f = {:.5}", m.objective);
    println!("cross-track margin g1 = {:.5}", m.g1);
    println!("yaw-rate margin g2 = {:.5}", m.g2);
    let peak = trace.e_ct.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    println!("{} samples, peak |e_ct| = {peak:.3} m -> {out}", trace.len());
    Ok(())
}
