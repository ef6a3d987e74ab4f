use bbglm_core::diagnostics::{ess, split_rhat};
use bbglm_core::nuts::run_chains;
use bbglm_core::nuts::targets::{DenseGaussian, IsoGaussian};
use bbglm_core::SamplerConfig;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

fn ks_distance(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let phi = Normal::standard();
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = phi.cdf(v);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn standard_normal_marginal_passes_ks() {
    let config = SamplerConfig {
        warmup: 500,
        draws: 2000,
        ..SamplerConfig::with_seed(8)
    };
    let draws = run_chains(&IsoGaussian::standard(1), &config).unwrap();
    // thin to roughly independent draws
    let thinned: Vec<f64> = draws.pooled(0).into_iter().step_by(4).collect();
    let d = ks_distance(thinned.clone());
    let crit = 1.63 / (thinned.len() as f64).sqrt();
    assert!(d < crit, "KS {d} vs 1% critical value {crit}");
}

#[test]
fn correlated_gaussian_moments() {
    let dim = 10;
    let cov = DMatrix::from_fn(dim, dim, |i, j| {
        let (si, sj) = (0.5 + 0.2 * i as f64, 0.5 + 0.2 * j as f64);
        0.6f64.powi((i as i32 - j as i32).abs()) * si * sj
    });
    let mean: Vec<f64> = (0..dim).map(|i| i as f64 - 4.5).collect();
    let target = DenseGaussian::new(mean.clone(), cov.clone()).unwrap();
    let draws = run_chains(&target, &SamplerConfig::with_seed(21)).unwrap();
    assert!(draws.divergences_per_chain().iter().all(|&d| d == 0));

    for i in 0..dim {
        let chains = draws.param_chains(i);
        assert!(split_rhat(&chains).unwrap() < 1.01);
        let n_eff = ess(&chains).unwrap();
        let pooled = draws.pooled(i);
        let m = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let sd = cov[(i, i)].sqrt();
        assert!(
            (m - mean[i]).abs() < 4.0 * sd / n_eff.sqrt(),
            "mean {i}: {m}"
        );
        let var = pooled.iter().map(|v| (v - m).powi(2)).sum::<f64>() / pooled.len() as f64;
        assert!((var / cov[(i, i)] - 1.0).abs() < 0.1, "var {i}: {var}");
    }
    // lag-one correlation of neighbouring coordinates
    let (a, b) = (draws.pooled(3), draws.pooled(4));
    let (ma, mb) = (
        a.iter().sum::<f64>() / a.len() as f64,
        b.iter().sum::<f64>() / b.len() as f64,
    );
    let cab = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64;
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / a.len() as f64;
    let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / b.len() as f64;
    assert!((cab / (va * vb).sqrt() - 0.6).abs() < 0.05);
}

#[test]
fn seed_controls_output() {
    let config = SamplerConfig {
        warmup: 200,
        draws: 200,
        ..SamplerConfig::with_seed(1)
    };
    let target = IsoGaussian::standard(3);
    let a = run_chains(&target, &config).unwrap();
    let b = run_chains(&target, &config).unwrap();
    let c = run_chains(&target, &SamplerConfig { seed: 2, ..config }).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.values, c.values);
}
