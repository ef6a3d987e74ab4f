use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{leapfrog, LogDensity, PhasePoint, MAX_ENERGY_ERROR};

/// Per-transition sampler statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    /// Mean Metropolis acceptance probability over every leapfrog state visited.
    pub accept_stat: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
    /// Hamiltonian at the start of the transition.
    pub energy: f64,
}

struct Subtree {
    /// Endpoint nearest the existing trajectory.
    inner: PhasePoint,
    /// Endpoint furthest along the direction of integration.
    outer: PhasePoint,
    proposal: PhasePoint,
    log_sum_weight: f64,
}

#[derive(Default)]
struct Counters {
    n_leapfrog: usize,
    sum_accept: f64,
    divergent: bool,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// True once the trajectory spanned by `minus` (earliest) and `plus` (latest)
/// starts to double back on itself.
fn is_turning(minus: &PhasePoint, plus: &PhasePoint) -> bool {
    let mut dot_minus = 0.0;
    let mut dot_plus = 0.0;
    for i in 0..minus.position.len() {
        let dq = plus.position[i] - minus.position[i];
        dot_minus += dq * minus.momentum[i];
        dot_plus += dq * plus.momentum[i];
    }
    dot_minus < 0.0 || dot_plus < 0.0
}

fn ordered<'a>(
    a: &'a PhasePoint,
    b: &'a PhasePoint,
    forward: bool,
) -> (&'a PhasePoint, &'a PhasePoint) {
    if forward {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds a subtree of `2^depth` leapfrog steps starting from `edge`.
/// Returns `None` when the subtree diverged or contains a U-turn; such a
/// subtree contributes nothing to the proposal.
#[allow(clippy::too_many_arguments)]
fn build_tree<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    edge: &PhasePoint,
    forward: bool,
    depth: usize,
    step: f64,
    h0: f64,
    rng: &mut R,
    counters: &mut Counters,
) -> Option<Subtree> {
    if depth == 0 {
        counters.n_leapfrog += 1;
        let signed = if forward { step } else { -step };
        let next = match leapfrog(target, edge, signed) {
            Ok(z) => z,
            Err(_) => {
                counters.divergent = true;
                return None;
            }
        };
        let h = next.energy();
        let log_w = h0 - h;
        if !h.is_finite() || -log_w > MAX_ENERGY_ERROR {
            counters.divergent = true;
            if log_w.is_finite() {
                counters.sum_accept += log_w.exp().min(1.0);
            }
            return None;
        }
        counters.sum_accept += log_w.exp().min(1.0);
        return Some(Subtree {
            inner: next.clone(),
            outer: next.clone(),
            proposal: next,
            log_sum_weight: log_w,
        });
    }

    let first = build_tree(target, edge, forward, depth - 1, step, h0, rng, counters)?;
    let second = build_tree(
        target,
        &first.outer,
        forward,
        depth - 1,
        step,
        h0,
        rng,
        counters,
    )?;

    let log_sum_weight = log_add_exp(first.log_sum_weight, second.log_sum_weight);
    let take_second = rng.random::<f64>() < (second.log_sum_weight - log_sum_weight).exp();
    let proposal = if take_second {
        second.proposal
    } else {
        first.proposal
    };
    let (minus, plus) = ordered(&first.inner, &second.outer, forward);
    if is_turning(minus, plus) {
        return None;
    }
    Some(Subtree {
        inner: first.inner,
        outer: second.outer,
        proposal,
        log_sum_weight,
    })
}

/// One NUTS transition from `current` with step size `step`.
///
/// The trajectory doubles in a random direction until it makes a U-turn,
/// diverges, or has doubled `max(max_treedepth, 1)` times; `max_treedepth = 0`
/// therefore degenerates to a Metropolis-corrected single leapfrog step.
pub fn nuts_transition<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &PhasePoint,
    step: f64,
    max_treedepth: usize,
    rng: &mut R,
) -> (PhasePoint, TransitionStats) {
    let mut start = current.clone();
    for p in start.momentum.iter_mut() {
        *p = rng.sample(StandardNormal);
    }
    let h0 = start.energy();

    let mut left = start.clone();
    let mut right = start.clone();
    let mut sample = start.clone();
    let mut log_sum_weight = 0.0;
    let mut counters = Counters::default();
    let mut depth = 0;
    let limit = max_treedepth.max(1);

    while depth < limit {
        let forward = rng.random::<bool>();
        let edge = if forward { &right } else { &left };
        let sub = build_tree(target, edge, forward, depth, step, h0, rng, &mut counters);
        depth += 1;
        let Some(sub) = sub else { break };

        // biased progressive sampling favours the new subtree
        if sub.log_sum_weight > log_sum_weight
            || rng.random::<f64>() < (sub.log_sum_weight - log_sum_weight).exp()
        {
            sample = sub.proposal;
        }
        log_sum_weight = log_add_exp(log_sum_weight, sub.log_sum_weight);
        if forward {
            right = sub.outer;
        } else {
            left = sub.outer;
        }
        if is_turning(&left, &right) {
            break;
        }
    }

    let accept_stat = if counters.n_leapfrog > 0 {
        counters.sum_accept / counters.n_leapfrog as f64
    } else {
        0.0
    };
    let stats = TransitionStats {
        accept_stat,
        tree_depth: depth,
        n_leapfrog: counters.n_leapfrog,
        divergent: counters.divergent,
        energy: h0,
    };
    sample.momentum.fill(0.0);
    (sample, stats)
}
