use rand::Rng;
use rand_distr::StandardNormal;

use super::{leapfrog, LogDensity, PhasePoint};
use crate::error::{Error, Result};

/// Smallest step size the sampler accepts before declaring a collapse.
pub(crate) const MIN_STEP_SIZE: f64 = 1e-12;
const MAX_STEP_SIZE: f64 = 1e7;

/// Dual-averaging step size adaptation with shrinkage target
/// `mu = log(10 * eps0)`, `gamma = 0.05`, `t0 = 10`, `kappa = 0.75`.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    mu: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    target: f64,
    counter: f64,
    error_avg: f64,
    log_step_avg: f64,
}

impl DualAveraging {
    pub fn new(initial_step: f64, target_accept: f64) -> Self {
        Self {
            mu: (10.0 * initial_step).ln(),
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            target: target_accept,
            counter: 0.0,
            error_avg: 0.0,
            log_step_avg: 0.0,
        }
    }

    /// Feeds one acceptance statistic and returns the step size to use next.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let m = self.counter;
        let w = 1.0 / (m + self.t0);
        self.error_avg = (1.0 - w) * self.error_avg + w * (self.target - accept_stat);
        let log_step = self.mu - m.sqrt() / self.gamma * self.error_avg;
        let eta = m.powf(-self.kappa);
        self.log_step_avg = eta * log_step + (1.0 - eta) * self.log_step_avg;
        log_step.exp()
    }

    /// The averaged iterate, used once warmup ends.
    pub fn final_step(&self) -> f64 {
        self.log_step_avg.exp()
    }
}

fn one_step_log_ratio<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    at: &PhasePoint,
    step: f64,
    rng: &mut R,
) -> f64 {
    let mut z = at.clone();
    for p in z.momentum.iter_mut() {
        *p = rng.sample(StandardNormal);
    }
    let h0 = z.energy();
    match leapfrog(target, &z, step) {
        Ok(next) => {
            let r = h0 - next.energy();
            if r.is_nan() {
                f64::NEG_INFINITY
            } else {
                r
            }
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Doubles or halves the step size from `initial` until the one-step
/// acceptance probability crosses 1/2.
pub fn find_reasonable_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    at: &PhasePoint,
    initial: f64,
    rng: &mut R,
    chain: usize,
) -> Result<f64> {
    let threshold = 0.5f64.ln();
    let mut step = initial;
    let increase = one_step_log_ratio(target, at, step, rng) > threshold;
    loop {
        step = if increase { step * 2.0 } else { step * 0.5 };
        if step < MIN_STEP_SIZE {
            return Err(Error::StepSizeCollapse {
                chain,
                step_size: step,
            });
        }
        if step > MAX_STEP_SIZE {
            return Ok(step);
        }
        let above = one_step_log_ratio(target, at, step, rng) > threshold;
        if above != increase {
            // overshot by one factor of two when growing
            return Ok(if increase { step * 0.5 } else { step });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::targets::IsoGaussian;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_target_acceptance_reaches_fixed_point() {
        let mut da = DualAveraging::new(0.5, 0.8);
        let mut steps = Vec::new();
        for _ in 0..2000 {
            da.update(0.8);
            steps.push(da.final_step());
        }
        let a = steps[1899];
        let b = steps[1999];
        assert!(((b - a) / a).abs() < 1e-3);
    }

    #[test]
    fn full_acceptance_grows_step() {
        let mut da = DualAveraging::new(0.1, 0.8);
        let mut prev = 0.0;
        for _ in 0..50 {
            let s = da.update(1.0);
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn reasonable_step_for_standard_normal() {
        let target = IsoGaussian::standard(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = PhasePoint::new(&target, vec![0.1; 5]);
        let step = find_reasonable_step_size(&target, &z, 1.0, &mut rng, 0).unwrap();
        assert!(step > 0.1 && step < 4.0, "{step}");
    }

    #[test]
    fn collapse_is_reported() {
        // the density is NaN everywhere except the start point
        struct Cliff;
        impl LogDensity for Cliff {
            fn dim(&self) -> usize {
                1
            }
            fn logp_and_grad(&self, q: &[f64], g: &mut [f64]) -> f64 {
                g[0] = 0.0;
                if q[0] == 0.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = PhasePoint::new(&Cliff, vec![0.0]);
        assert!(matches!(
            find_reasonable_step_size(&Cliff, &z, 1.0, &mut rng, 4),
            Err(Error::StepSizeCollapse { chain: 4, .. })
        ));
    }
}
