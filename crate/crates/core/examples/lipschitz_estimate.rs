//! Estimate Lipschitz constants of the two vehicle constraints on grids of
//! increasing resolution and compare them with the configured values.

use mclosbo::bench::VEHICLE_LIPSCHITZ;
use mclosbo::grid::DomainGrid;
use mclosbo::vehicle::{estimate_lipschitz, Simulator, VehicleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = Simulator::new(VehicleConfig::default())?;
    let constraints = |t: &[f64]| match sim.run_normalized(t) {
        Ok(m) => vec![m.g1, m.g2],
        Err(_) => vec![f64::NAN; 2],
    };
    println!("configured: L1 = {}, L2 = {}", VEHICLE_LIPSCHITZ[0], VEHICLE_LIPSCHITZ[1]);
    for (dim, res) in [(1, 26), (1, 51), (1, 101), (2, 16)] {
        let est = estimate_lipschitz(constraints, &DomainGrid::uniform(dim, res), 1.5);
        println!(
            "d = {dim}, {res:3} per axis: max slopes {:.3} {:.3}, x1.5 = {:.3} {:.3}",
            est.raw[0], est.raw[1], est.constants[0], est.constants[1]
        );
    }
    Ok(())
}
