//! Fit a Matérn-5/2 GP to noisy samples of a 1D function, with and without
//! MAP hyperparameter fitting.

use mclosbo::gp::{fit_hyperparameters, FitOptions, GammaPriorConfig, GpModel, KernelConfig, NoiseConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn truth(x: f64) -> f64 {
    (6.0 * x).sin() + 0.5 * x
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| truth(x[0]) + rng.random_range(-0.05..0.05)).collect();

    let prior = GpModel::new(KernelConfig::isotropic(1, 0.2, 1.0)?, NoiseConfig::new(0.05)?);
    let model = GpModel::with_data(prior.spec().clone(), xs, ys)?;

    let fit = fit_hyperparameters(&model, &GammaPriorConfig::default(), &FitOptions::default());
    println!(
        "MAP: lengthscale {:.4}, outputscale {:.4} (objective {:.3} -> {:.3})",
        fit.kernel.lengthscales[0], fit.kernel.outputscale, fit.initial_objective, fit.objective
    );
    let fitted = model.with_kernel(fit.kernel)?;

    println!("{:>6} {:>9} {:>9} {:>8} {:>9} {:>8}", "x", "truth", "mean", "std", "map mean", "map std");
    let grid: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
    let a = model.posterior_many(grid.iter().map(|x| x.as_slice()))?;
    let b = fitted.posterior_many(grid.iter().map(|x| x.as_slice()))?;
    for (k, x) in grid.iter().enumerate() {
        println!(
            "{:6.2} {:9.4} {:9.4} {:8.4} {:9.4} {:8.4}",
            x[0],
            truth(x[0]),
            a.mean[k],
            a.variance[k].sqrt(),
            b.mean[k],
            b.variance[k].sqrt()
        );
    }
    Ok(())
}
