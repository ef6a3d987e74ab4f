//! Convergence diagnostics and posterior summaries.
//!
//! R-hat and bulk ESS are computed on rank-normalized split chains. Summary
//! statistics (median, equal-tailed credible interval, probability of
//! direction, percentage in the region of practical equivalence) use the
//! pooled draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::nuts::PosteriorDraws;

/// Default ROPE half-width for logistic coefficients: `0.1 * pi / sqrt(3)`.
pub const DEFAULT_ROPE_HALF_WIDTH: f64 = 0.1814;

/// R-hat threshold below which chains are considered mixed.
pub const RHAT_CONVERGED: f64 = 1.1;

/// Percentage in ROPE at or above which a parameter is declared practically null.
pub const PRACTICALLY_NULL_PCT: f64 = 97.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeSpec {
    pub low: f64,
    pub high: f64,
    pub ci_level: f64,
}

impl Default for RopeSpec {
    fn default() -> Self {
        Self {
            low: -DEFAULT_ROPE_HALF_WIDTH,
            high: DEFAULT_ROPE_HALF_WIDTH,
            ci_level: 0.89,
        }
    }
}

impl RopeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.low < self.high) {
            return Err(Error::InvalidConfig(format!(
                "ROPE low {} must be below high {}",
                self.low, self.high
            )));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ci_level must be in (0, 1), got {}",
                self.ci_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    /// No credible-interval mass inside the ROPE.
    Significant,
    /// At least 97.5% of the credible-interval mass inside the ROPE.
    PracticallyNull,
    Undecided,
}

impl Significance {
    pub fn from_rope_pct(rope_pct: f64) -> Self {
        if rope_pct == 0.0 {
            Self::Significant
        } else if rope_pct >= PRACTICALLY_NULL_PCT {
            Self::PracticallyNull
        } else {
            Self::Undecided
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub median: f64,
    pub ci_level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pd: f64,
    pub rope_low: f64,
    pub rope_high: f64,
    pub rope_pct: f64,
    /// `None` when the draws are degenerate or too short.
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    pub significance: Significance,
    pub significant: bool,
}

/// Sample quantile with linear interpolation between order statistics.
/// `sorted` must be sorted ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Probability of direction: the larger of the positive and negative
/// posterior masses. Exact zeros count half to each side.
pub fn probability_of_direction(draws: &[f64]) -> f64 {
    let n = draws.len() as f64;
    let pos = draws.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = draws.iter().filter(|&&v| v < 0.0).count() as f64;
    let zero = n - pos - neg;
    (pos.max(neg) + 0.5 * zero) / n
}

/// Percentage of the draws inside the equal-tailed credible interval that
/// also fall inside the ROPE.
pub fn rope_percentage(sorted: &[f64], rope: &RopeSpec) -> f64 {
    let alpha = (1.0 - rope.ci_level) / 2.0;
    let lo = quantile_sorted(sorted, alpha);
    let hi = quantile_sorted(sorted, 1.0 - alpha);
    let in_ci = sorted.iter().filter(|&&v| v >= lo && v <= hi);
    let (mut total, mut inside) = (0usize, 0usize);
    for &v in in_ci {
        total += 1;
        if v >= rope.low && v <= rope.high {
            inside += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    100.0 * inside as f64 / total as f64
}

fn split_chains(chains: &[Vec<f64>]) -> Result<Vec<&[f64]>> {
    if chains.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidDraws("chains have different lengths".into()));
    }
    if n < 4 {
        return Err(Error::InvalidDraws(format!(
            "need at least 4 draws per chain, got {n}"
        )));
    }
    let half = n / 2;
    Ok(chains
        .iter()
        .flat_map(|c| [&c[..half], &c[n - half..]])
        .collect())
}

/// Rank-normalizes the pooled values of `chains` (average ranks for ties,
/// Blom offset 3/8) and returns them with the same chain structure.
fn rank_normalize(chains: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    let s = pooled.len();
    let first = pooled[0];
    if pooled.iter().all(|&v| v == first) {
        return Err(Error::DegenerateDraws);
    }
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // 1-based average rank of the tie block
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let normal = Normal::standard();
    let z: Vec<f64> = ranks
        .iter()
        .map(|r| normal.inverse_cdf((r - 0.375) / (s as f64 + 0.25)))
        .collect();
    let mut out = Vec::with_capacity(chains.len());
    let mut offset = 0;
    for c in chains {
        out.push(z[offset..offset + c.len()].to_vec());
        offset += c.len();
    }
    Ok(out)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Classic potential scale reduction over already-split chains.
fn rhat_classic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = n * sample_var(&means);
    let w = chains.iter().map(|c| sample_var(c)).sum::<f64>() / m;
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Rank-normalized split R-hat for one parameter (`chains[c][draw]`).
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let split = split_chains(chains)?;
    let z = rank_normalize(&split)?;
    Ok(rhat_classic(&z))
}

/// Lazily evaluated biased autocovariance of one chain.
struct Autocov<'a> {
    x: &'a [f64],
    mean: f64,
}

impl Autocov<'_> {
    fn at(&self, lag: usize) -> f64 {
        let n = self.x.len();
        if lag >= n {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n - lag {
            s += (self.x[i] - self.mean) * (self.x[i + lag] - self.mean);
        }
        s / n as f64
    }
}

/// Effective sample size of already-split, normalized chains, using Geyer's
/// initial monotone positive sequence.
fn ess_of_chains(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let acovs: Vec<Autocov> = chains
        .iter()
        .map(|c| Autocov {
            x: c,
            mean: mean(c),
        })
        .collect();
    let mean_acov = |lag: usize| acovs.iter().map(|a| a.at(lag)).sum::<f64>() / m as f64;

    let means: Vec<f64> = acovs.iter().map(|a| a.mean).collect();
    let mean_var = mean_acov(0) * n as f64 / (n as f64 - 1.0);
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    let rho = |lag: usize| 1.0 - (mean_var - mean_acov(lag)) / var_plus;

    let mut rho_hat = vec![0.0; n + 2];
    rho_hat[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = rho(1);
    rho_hat[1] = rho_odd;

    let mut t = 1;
    while t + 3 < n && rho_even + rho_odd > 0.0 {
        rho_even = rho(t + 1);
        rho_odd = rho(t + 2);
        if rho_even + rho_odd >= 0.0 {
            rho_hat[t + 1] = rho_even;
            rho_hat[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t.saturating_sub(2);
    if rho_even > 0.0 {
        rho_hat[max_t + 1] = rho_even;
    }

    // initial monotone sequence
    let mut t = 1;
    while t + 2 <= max_t {
        if rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t] {
            rho_hat[t + 1] = (rho_hat[t - 1] + rho_hat[t]) / 2.0;
            rho_hat[t + 2] = rho_hat[t + 1];
        }
        t += 2;
    }

    let total = (m * n) as f64;
    let tau = -1.0 + 2.0 * rho_hat[..=max_t].iter().sum::<f64>() + rho_hat[max_t + 1];
    let tau = tau.max(1.0 / total.log10());
    total / tau
}

/// Bulk effective sample size of one parameter (`chains[c][draw]`).
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    let split = split_chains(chains)?;
    let z = rank_normalize(&split)?;
    Ok(ess_of_chains(&z))
}

fn summarize_one(name: &str, chains: &[Vec<f64>], rope: &RopeSpec) -> Result<ParameterSummary> {
    let mut sorted: Vec<f64> = chains.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let pd = probability_of_direction(&sorted);
    sorted.sort_by(f64::total_cmp);
    let alpha = (1.0 - rope.ci_level) / 2.0;
    let median = quantile_sorted(&sorted, 0.5);
    let ci_low = quantile_sorted(&sorted, alpha);
    let ci_high = quantile_sorted(&sorted, 1.0 - alpha);
    let rope_pct = rope_percentage(&sorted, rope);
    let significance = Significance::from_rope_pct(rope_pct);
    Ok(ParameterSummary {
        name: name.to_string(),
        description: None,
        median,
        ci_level: rope.ci_level,
        ci_low,
        ci_high,
        pd,
        rope_low: rope.low,
        rope_high: rope.high,
        rope_pct,
        rhat: split_rhat(chains).ok(),
        ess: ess(chains).ok(),
        significance,
        significant: significance == Significance::Significant,
    })
}

/// Summary row for every parameter of `draws`.
pub fn summarize(draws: &PosteriorDraws, rope: &RopeSpec) -> Result<Vec<ParameterSummary>> {
    rope.validate()?;
    if draws.total_draws() == 0 {
        return Err(Error::EmptyDraws);
    }
    (0..draws.n_params())
        .into_par_iter()
        .map(|j| summarize_one(&draws.param_names[j], &draws.param_chains(j), rope))
        .collect()
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.decimals$}"))
}

/// Markdown table with columns Parameter, Median, CI, pd, ROPE, % in ROPE,
/// Rhat, ESS; numbers to three decimals.
pub fn render_summary_table(rows: &[ParameterSummary]) -> String {
    let level = rows.first().map_or(89.0, |r| r.ci_level * 100.0);
    let mut out = format!(
        "| Parameter | Median | {level:.0}% CI | pd | {level:.0}% ROPE | % in ROPE | Rhat | ESS |\n\
         |---|---:|---|---:|---|---:|---:|---:|\n"
    );
    for r in rows {
        let label = match &r.description {
            Some(d) => format!("{} ({d})", r.name),
            None => r.name.clone(),
        };
        out.push_str(&format!(
            "| {label} | {:.3} | [{:.3}, {:.3}] | {:.3} | [{:.3}, {:.3}] | {:.3} | {} | {} |\n",
            r.median,
            r.ci_low,
            r.ci_high,
            r.pd,
            r.rope_low,
            r.rope_high,
            r.rope_pct,
            fmt_opt(r.rhat, 3),
            fmt_opt(r.ess, 3),
        ));
    }
    out
}

/// One sentence describing a parameter's effect direction, certainty and
/// practical significance.
pub fn narrative(r: &ParameterSummary) -> String {
    let direction = if r.median >= 0.0 {
        "positive"
    } else {
        "negative"
    };
    let label = match &r.description {
        Some(d) => format!("{} ({d})", r.name),
        None => r.name.clone(),
    };
    let verdict = match r.significance {
        Significance::Significant => "significant",
        Significance::PracticallyNull => "practically null (not significant)",
        Significance::Undecided => "not significant",
    };
    let convergence = match r.rhat {
        Some(rh) if rh < RHAT_CONVERGED => format!("chains converged (Rhat = {rh:.3})"),
        Some(rh) => format!("chains did NOT converge (Rhat = {rh:.3})"),
        None => "convergence not assessable".to_string(),
    };
    format!(
        "{label}: probability of {:.2}% of being {direction}; median = {:.3}, {:.0}% CI [{:.3}, {:.3}], \
         {:.2}% in ROPE; {convergence}, ESS = {}. Effect is {verdict}.",
        100.0 * r.pd,
        r.median,
        100.0 * r.ci_level,
        r.ci_low,
        r.ci_high,
        r.rope_pct,
        fmt_opt(r.ess, 0),
    )
}
