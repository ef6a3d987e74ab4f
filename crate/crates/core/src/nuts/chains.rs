use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adapt::MIN_STEP_SIZE;
use super::{
    find_reasonable_step_size, nuts_transition, DualAveraging, LogDensity, PhasePoint,
    PosteriorDraws, SamplerConfig, SamplerStats, TransitionStats,
};
use crate::error::{Error, Result};

const MAX_INIT_ATTEMPTS: usize = 100;

/// Post-warmup output of a single chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub values: Vec<f64>,
    pub stats: Vec<TransitionStats>,
    pub step_size: f64,
}

/// The RNG stream of `chain`: seeded from `seed`, one ChaCha stream per chain.
pub(crate) fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn initial_point<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    rng: &mut ChaCha8Rng,
    chain: usize,
) -> Result<PhasePoint> {
    let r = config.init_radius;
    for _ in 0..MAX_INIT_ATTEMPTS {
        let q: Vec<f64> = (0..target.dim()).map(|_| rng.random_range(-r..r)).collect();
        let z = PhasePoint::new(target, q);
        if z.logp.is_finite() && z.grad.iter().all(|g| g.is_finite()) {
            return Ok(z);
        }
    }
    Err(Error::ChainFailed {
        chain,
        reason: format!("log density not finite at {MAX_INIT_ATTEMPTS} initial points"),
    })
}

/// Runs warmup plus sampling for one chain.
pub fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = chain_rng(config.seed, chain);
    let mut z = initial_point(target, config, &mut rng, chain)?;
    let mut step = find_reasonable_step_size(target, &z, 1.0, &mut rng, chain)?;
    let mut adapt = DualAveraging::new(step, config.target_accept);

    let dim = target.dim();
    let mut values = Vec::with_capacity(config.draws * dim);
    let mut stats = Vec::with_capacity(config.draws);
    for iter in 0..config.warmup + config.draws {
        let (next, s) = nuts_transition(target, &z, step, config.max_treedepth, &mut rng);
        z = next;
        if iter < config.warmup {
            step = adapt.update(s.accept_stat);
            if iter + 1 == config.warmup {
                step = adapt.final_step();
            }
            if !(step >= MIN_STEP_SIZE) || !step.is_finite() {
                return Err(Error::StepSizeCollapse {
                    chain,
                    step_size: step,
                });
            }
        } else {
            values.extend_from_slice(&z.position);
            stats.push(s);
        }
    }
    Ok(ChainOutput {
        values,
        stats,
        step_size: step,
    })
}

/// Runs `config.chains` independent chains on the current rayon pool and
/// assembles their post-warmup draws in chain order.
pub fn run_chains<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let outputs: Vec<Result<ChainOutput>> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect();

    let n = config.chains * config.draws;
    let mut values = Vec::with_capacity(n * target.dim());
    let mut stats = SamplerStats {
        divergent: Vec::with_capacity(n),
        tree_depth: Vec::with_capacity(n),
        n_leapfrog: Vec::with_capacity(n),
        step_size: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
    };
    for (chain, out) in outputs.into_iter().enumerate() {
        let out = out.map_err(|e| match e {
            Error::ChainFailed { .. } => e,
            other => Error::ChainFailed {
                chain,
                reason: other.to_string(),
            },
        })?;
        values.extend(out.values);
        for s in out.stats {
            stats.divergent.push(s.divergent);
            stats.tree_depth.push(s.tree_depth as u32);
            stats.n_leapfrog.push(s.n_leapfrog as u32);
            stats.step_size.push(out.step_size);
            stats.accept_stat.push(s.accept_stat);
            stats.energy.push(s.energy);
        }
    }
    PosteriorDraws::new(
        target.param_names(),
        config.chains,
        config.draws,
        values,
        stats,
    )
}
