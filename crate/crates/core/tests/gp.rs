use mclosbo::gp::{
    fit_hyperparameters, matern52, FitOptions, GammaPrior, GammaPriorConfig, GpModel, GpSpec,
    KernelConfig, NoiseConfig,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{dense_posterior as dense_oracle, random_dataset};

fn spec(dim: usize, l: f64, s: f64, noise: f64) -> GpSpec {
    GpSpec {
        kernel: KernelConfig::isotropic(dim, l, s).unwrap(),
        noise: NoiseConfig::new(noise).unwrap(),
        priors: None,
    }
}

#[test]
fn three_point_posterior_matches_dense_solve() {
    let s = spec(1, 0.2, 1.0, 0.03);
    let xs = vec![vec![0.1], vec![0.5], vec![0.9]];
    let ys = vec![0.2, -0.3, 0.5];
    let m = GpModel::with_data(s.clone(), xs.clone(), ys.clone()).unwrap();
    let (mean, var) = m.posterior(&[0.4]).unwrap();
    // frozen from a numpy dense solve
    assert!((mean - (-0.234_052_164_247_950_64)).abs() < 1e-8);
    assert!((var - 0.282_654_691_854_996_14).abs() < 1e-8);
    let (om, ov) = dense_oracle(&s, 0.0, &xs, &ys, &[0.4]);
    assert!((mean - om).abs() < 1e-8 && (var - ov).abs() < 1e-8);
}

#[test]
fn random_posteriors_match_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let d = rng.random_range(1..=3);
        let n = rng.random_range(1..=20);
        let mut s = spec(d, 0.2, 1.0, rng.random_range(0.01..0.3));
        s.kernel.lengthscales = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
        s.kernel.outputscale = rng.random_range(0.1..3.0);
        let (xs, ys) = random_dataset(&mut rng, n, d);
        let m = GpModel::with_data(s.clone(), xs.clone(), ys.clone()).unwrap();
        for _ in 0..5 {
            let q: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let (mean, var) = m.posterior(&q).unwrap();
            let (om, ov) = dense_oracle(&s, m.jitter(), &xs, &ys, &q);
            assert!((mean - om).abs() < 1e-8, "mean {mean} vs {om}");
            assert!((var - ov.max(0.0)).abs() < 1e-8, "var {var} vs {ov}");
        }
    }
}

#[test]
fn sequential_updates_equal_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let d = rng.random_range(1..=3);
        let n = rng.random_range(1..=20);
        let s = spec(d, 0.3, 1.3, 0.05);
        let (xs, ys) = random_dataset(&mut rng, n, d);
        let batch = GpModel::with_data(s.clone(), xs.clone(), ys.clone()).unwrap();
        let mut seq = GpModel::from_spec(s);
        for (x, y) in xs.iter().zip(&ys) {
            seq = seq.update(x, *y).unwrap();
        }
        for _ in 0..5 {
            let q: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let a = batch.posterior(&q).unwrap();
            let b = seq.posterior(&q).unwrap();
            assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10);
        }
    }
}

#[test]
fn matern_closed_form() {
    assert_eq!(matern52(0.0), 1.0);
    let r: f64 = 0.7;
    let direct = (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-5f64.sqrt() * r).exp();
    assert!((matern52(r) - direct).abs() < 1e-15);
}

fn log_params(m: &GpModel) -> Vec<f64> {
    let mut p: Vec<f64> = m.kernel().lengthscales.iter().map(|l| l.ln()).collect();
    p.push(m.kernel().outputscale.ln());
    p.push((m.noise().noise_std.powi(2)).ln());
    p
}

fn rebuild(m: &GpModel, p: &[f64]) -> GpModel {
    let d = m.dim();
    let spec = GpSpec {
        kernel: KernelConfig::new(p[..d].iter().map(|v| v.exp()).collect(), p[d].exp()).unwrap(),
        noise: NoiseConfig::new((p[d + 1].exp()).sqrt()).unwrap(),
        priors: m.priors().copied(),
    };
    GpModel::with_data(spec, m.inputs().to_vec(), m.targets().to_vec()).unwrap()
}

#[test]
fn map_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for inst in 0..24 {
        let d = rng.random_range(1..=3);
        let mut s = spec(d, 0.2, 1.0, rng.random_range(0.05..0.4));
        s.kernel.lengthscales = (0..d).map(|_| rng.random_range(0.1..0.8)).collect();
        s.kernel.outputscale = rng.random_range(0.3..2.0);
        if inst % 2 == 0 {
            s.priors = Some(GammaPriorConfig::default());
        }
        let (xs, ys) = random_dataset(&mut rng, 6, d);
        let m = GpModel::with_data(s, xs, ys).unwrap();
        let ll = m.log_marginal_likelihood().unwrap();
        let p = log_params(&m);
        for k in 0..p.len() {
            let mut up = p.clone();
            up[k] += h;
            let mut dn = p.clone();
            dn[k] -= h;
            let fd = (rebuild(&m, &up).log_marginal_likelihood().unwrap().value
                - rebuild(&m, &dn).log_marginal_likelihood().unwrap().value)
                / (2.0 * h);
            let g = ll.gradient[k];
            let rel = (g - fd).abs() / fd.abs().max(1e-3);
            assert!(rel < 1e-4, "instance {inst} param {k}: analytic {g} fd {fd}");
        }
    }
}

#[test]
fn gamma_prior_adds_its_log_density() {
    let s = spec(2, 0.3, 0.8, 0.1);
    let xs = vec![vec![0.1, 0.2], vec![0.7, 0.4], vec![0.3, 0.9]];
    let ys = vec![0.5, -0.1, 0.3];
    let plain = GpModel::with_data(s.clone(), xs.clone(), ys.clone()).unwrap();
    let lp = GammaPrior::new(3.0, 10.0).unwrap();
    let op = GammaPrior::new(3.0, 2.0).unwrap();
    let with = plain
        .clone()
        .with_priors(GammaPriorConfig::new(lp, op).unwrap());
    let with = GpModel::with_data(with.spec().clone(), xs, ys).unwrap();
    let diff = with.log_marginal_likelihood().unwrap().value
        - plain.log_marginal_likelihood().unwrap().value;
    let expected = 2.0 * lp.ln_pdf(0.3) + op.ln_pdf(0.8);
    assert!((diff - expected).abs() < 1e-12);
}

#[test]
fn recovers_lengthscale_of_a_sampled_function() {
    // draw f ~ GP(0, Matérn(ℓ = 0.2)) on 20 points via Cholesky of the Gram matrix
    let truth = KernelConfig::isotropic(1, 0.2, 1.0).unwrap();
    let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
    let n = xs.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| truth.eval(&xs[i], &xs[j]).unwrap());
    for i in 0..n {
        k[(i, i)] += 1e-10;
    }
    let l = k.cholesky().unwrap().unpack();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let z = DVector::from_fn(n, |_, _| {
        // Box-Muller
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let ys: Vec<f64> = (l * z).iter().copied().collect();

    let start = spec(1, 0.6, 1.0, 1e-3);
    let m = GpModel::with_data(start, xs, ys).unwrap();
    let fit = fit_hyperparameters(&m, &GammaPriorConfig::default(), &FitOptions::default());
    let ell = fit.kernel.lengthscales[0];
    assert!(ell > 0.1 && ell < 0.4, "recovered lengthscale {ell}");
    assert!(fit.objective >= fit.initial_objective);
}

#[test]
fn fitting_never_decreases_the_map_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..10 {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(2..12);
        let (xs, ys) = random_dataset(&mut rng, n, d);
        let m = GpModel::with_data(spec(d, 0.2, 1.0, 0.05), xs, ys).unwrap();
        let priors = GammaPriorConfig::default();
        let fit = fit_hyperparameters(
            &m,
            &priors,
            &FitOptions {
                seed: i,
                ..Default::default()
            },
        );
        let before = GpModel::with_data(
            GpSpec {
                priors: Some(priors),
                ..m.spec().clone()
            },
            m.inputs().to_vec(),
            m.targets().to_vec(),
        )
        .unwrap()
        .log_marginal_likelihood()
        .unwrap()
        .value;
        assert!((fit.initial_objective - before).abs() < 1e-12);
        assert!(fit.objective >= before);
        assert!(fit.kernel.lengthscales.iter().all(|l| *l > 0.0) && fit.kernel.outputscale > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_never_increases_with_data(
        seed in 0u64..10_000,
        n in 1usize..15,
        d in 1usize..=3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xs, ys) = random_dataset(&mut rng, n, d);
        let s = spec(d, 0.25, 1.0, 0.05);
        let small = GpModel::with_data(s.clone(), xs[..n - 1].to_vec(), ys[..n - 1].to_vec()).unwrap();
        let big = small.update(&xs[n - 1], ys[n - 1]).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let a = small.posterior(&q).unwrap().1;
            let b = big.posterior(&q).unwrap().1;
            prop_assert!(b <= a + 1e-9);
            prop_assert!((0.0..=1.0 + 1e-9).contains(&b));
        }
    }

    #[test]
    fn gram_matrices_are_psd(seed in 0u64..10_000, n in 2usize..30, d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xs, _) = random_dataset(&mut rng, n, d);
        let k = KernelConfig::new((0..d).map(|_| rng.random_range(0.05..1.0)).collect(), 1.0).unwrap();
        let g = DMatrix::from_fn(n, n, |i, j| k.eval(&xs[i], &xs[j]).unwrap());
        prop_assert_eq!(&g, &g.transpose());
        let min_eig = g.symmetric_eigenvalues().min();
        prop_assert!(min_eig >= -1e-8, "min eigenvalue {}", min_eig);
    }

    #[test]
    fn empty_model_is_the_prior(x in 0.0f64..1.0, s in 0.1f64..5.0) {
        let m = GpModel::from_spec(spec(1, 0.2, s, 0.1));
        prop_assert_eq!(m.posterior(&[x]).unwrap(), (0.0, s));
    }
}
