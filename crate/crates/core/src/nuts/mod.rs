//! No-U-Turn Hamiltonian Monte Carlo.
//!
//! Identity mass matrix, multinomial trajectory sampling, position-difference
//! U-turn criterion checked on every subtree, and dual-averaging step size
//! adaptation during warmup. Chains are independent and run on the current
//! rayon pool; every chain owns its own ChaCha stream so results do not depend
//! on the schedule.

mod adapt;
mod chains;
mod draws;
pub mod targets;
mod tree;

pub use adapt::{find_reasonable_step_size, DualAveraging};
pub use chains::{run_chain, run_chains, ChainOutput};
pub use draws::{PosteriorDraws, SamplerStats};
pub use tree::{nuts_transition, TransitionStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::GlmModel;

/// Energy error (in log units) above which a trajectory is declared divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;

/// A differentiable log density the sampler can explore.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log density. A
    /// non-finite return value marks the position as outside the support.
    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64;

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta[{i}]")).collect()
    }
}

impl LogDensity for GlmModel {
    fn dim(&self) -> usize {
        self.n_params()
    }

    fn logp_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        GlmModel::logp_and_grad(self, position, grad)
    }

    fn param_names(&self) -> Vec<String> {
        std::iter::once("(Intercept)".to_string())
            .chain(self.data().feature_ids.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_treedepth: usize,
    pub seed: u64,
    pub init_radius: f64,
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            chains: 4,
            warmup: 2000,
            draws: 2000,
            target_accept: 0.8,
            max_treedepth: 10,
            seed,
            init_radius: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.chains < 1 {
            return bad("chains must be at least 1".into());
        }
        if self.warmup < 100 {
            return bad(format!("warmup must be at least 100, got {}", self.warmup));
        }
        if self.draws < 1 {
            return bad("draws must be at least 1".into());
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad(format!(
                "target_accept must be in (0, 1), got {}",
                self.target_accept
            ));
        }
        if !(self.init_radius > 0.0) || !self.init_radius.is_finite() {
            return bad(format!(
                "init_radius must be positive, got {}",
                self.init_radius
            ));
        }
        Ok(())
    }
}

/// A point in phase space with cached log density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl PhasePoint {
    pub fn new<T: LogDensity + ?Sized>(target: &T, position: Vec<f64>) -> Self {
        let mut grad = vec![0.0; position.len()];
        let logp = target.logp_and_grad(&position, &mut grad);
        let momentum = vec![0.0; position.len()];
        Self {
            position,
            momentum,
            grad,
            logp,
        }
    }

    /// Hamiltonian with unit mass: `-log p(q) + |p|^2 / 2`.
    pub fn energy(&self) -> f64 {
        -self.logp + 0.5 * self.momentum.iter().map(|p| p * p).sum::<f64>()
    }
}

/// One leapfrog step of size `step` (negative steps integrate backwards in
/// time). Fails with [`Error::NonFiniteGradient`] if the gradient at the new
/// position is not finite; the caller treats that as a divergence.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    point: &PhasePoint,
    step: f64,
) -> Result<PhasePoint> {
    let half = 0.5 * step;
    let mut momentum: Vec<f64> = point
        .momentum
        .iter()
        .zip(&point.grad)
        .map(|(p, g)| p + half * g)
        .collect();
    let position: Vec<f64> = point
        .position
        .iter()
        .zip(&momentum)
        .map(|(q, p)| q + step * p)
        .collect();
    let mut grad = vec![0.0; position.len()];
    let logp = target.logp_and_grad(&position, &mut grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    for (p, g) in momentum.iter_mut().zip(&grad) {
        *p += half * g;
    }
    Ok(PhasePoint {
        position,
        momentum,
        grad,
        logp,
    })
}

#[cfg(test)]
mod tests {
    use super::targets::{IsoGaussian, ZeroField};
    use super::*;

    #[test]
    fn leapfrog_zero_field_is_stationary() {
        let target = ZeroField { dim: 3 };
        let mut z = PhasePoint::new(&target, vec![0.5, -1.0, 2.0]);
        z.momentum = vec![0.0; 3];
        let out = leapfrog(&target, &z, 0.3).unwrap();
        assert_eq!(out.position, z.position);
        assert_eq!(out.momentum, z.momentum);
    }

    #[test]
    fn leapfrog_standard_normal_hand_values() {
        let target = IsoGaussian::standard(1);
        let z = PhasePoint::new(&target, vec![1.0]);
        let out = leapfrog(&target, &z, 0.1).unwrap();
        assert!((out.position[0] - 0.995).abs() < 1e-15);
        assert!((out.momentum[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn leapfrog_reversible() {
        let target = IsoGaussian::standard(4);
        let mut z = PhasePoint::new(&target, vec![0.3, -1.2, 0.7, 2.0]);
        z.momentum = vec![1.0, 0.5, -0.25, -2.0];
        let fwd = leapfrog(&target, &z, 0.17).unwrap();
        let mut flipped = fwd.clone();
        flipped.momentum.iter_mut().for_each(|p| *p = -*p);
        let back = leapfrog(&target, &flipped, 0.17).unwrap();
        for i in 0..4 {
            assert!((back.position[i] - z.position[i]).abs() < 1e-12);
            assert!((back.momentum[i] + z.momentum[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_conserved_for_small_steps() {
        let target = IsoGaussian::standard(3);
        let mut z = PhasePoint::new(&target, vec![1.0, -0.5, 0.25]);
        z.momentum = vec![0.3, 0.8, -1.1];
        let h0 = z.energy();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            z = leapfrog(&target, &z, 0.01).unwrap();
            worst = worst.max((z.energy() - h0).abs());
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn config_validation() {
        let ok = SamplerConfig::with_seed(1);
        assert!(ok.validate().is_ok());
        assert!(SamplerConfig { chains: 0, ..ok }.validate().is_err());
        assert!(SamplerConfig { warmup: 99, ..ok }.validate().is_err());
        assert!(SamplerConfig { draws: 0, ..ok }.validate().is_err());
        assert!(SamplerConfig {
            target_accept: 1.0,
            ..ok
        }
        .validate()
        .is_err());
    }
}
