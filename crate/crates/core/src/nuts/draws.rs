use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DRAWS_FORMAT: &str = "bbglm-draws";
pub const DRAWS_VERSION: u32 = 1;

/// Per-iteration sampler statistics, each laid out `[chain][draw]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<u32>,
    pub n_leapfrog: Vec<u32>,
    pub step_size: Vec<f64>,
    pub accept_stat: Vec<f64>,
    pub energy: Vec<f64>,
}

impl SamplerStats {
    fn len(&self) -> Option<usize> {
        let n = self.divergent.len();
        let same = [
            self.tree_depth.len(),
            self.n_leapfrog.len(),
            self.step_size.len(),
            self.accept_stat.len(),
            self.energy.len(),
        ]
        .iter()
        .all(|&l| l == n);
        same.then_some(n)
    }
}

/// Post-warmup draws, `values` laid out row-major as `[chain][draw][param]`.
///
/// JSON layout:
///
/// ```text
/// {
///   "format": "bbglm-draws", "version": 1,
///   "param_names": ["(Intercept)", "attr8", ...],
///   "chains": 4, "draws": 2000,
///   "values": [...chains * draws * params numbers...],
///   "stats": {"divergent": [...], "tree_depth": [...], "n_leapfrog": [...],
///             "step_size": [...], "accept_stat": [...], "energy": [...]}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub format: String,
    pub version: u32,
    pub param_names: Vec<String>,
    pub chains: usize,
    pub draws: usize,
    pub values: Vec<f64>,
    pub stats: SamplerStats,
}

impl PosteriorDraws {
    pub fn new(
        param_names: Vec<String>,
        chains: usize,
        draws: usize,
        values: Vec<f64>,
        stats: SamplerStats,
    ) -> Result<Self> {
        let d = Self {
            format: DRAWS_FORMAT.into(),
            version: DRAWS_VERSION,
            param_names,
            chains,
            draws,
            values,
            stats,
        };
        d.validate()?;
        Ok(d)
    }

    /// Draws without sampler statistics (e.g. from an external source or a
    /// point mass); statistics are filled with neutral values.
    pub fn from_values(
        param_names: Vec<String>,
        chains: usize,
        draws: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = chains * draws;
        let stats = SamplerStats {
            divergent: vec![false; n],
            tree_depth: vec![0; n],
            n_leapfrog: vec![0; n],
            step_size: vec![0.0; n],
            accept_stat: vec![1.0; n],
            energy: vec![0.0; n],
        };
        Self::new(param_names, chains, draws, values, stats)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != DRAWS_FORMAT || self.version != DRAWS_VERSION {
            return Err(Error::InvalidDraws(format!(
                "unsupported format {:?} version {}",
                self.format, self.version
            )));
        }
        if self.chains == 0 || self.draws == 0 || self.param_names.is_empty() {
            return Err(Error::EmptyDraws);
        }
        let expected = self.chains * self.draws * self.param_names.len();
        if self.values.len() != expected {
            return Err(Error::InvalidDraws(format!(
                "{} values, expected {expected}",
                self.values.len()
            )));
        }
        if self.stats.len() != Some(self.chains * self.draws) {
            return Err(Error::InvalidDraws(
                "sampler statistics do not match the draws shape".into(),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDraws("non-finite draw".into()));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn total_draws(&self) -> usize {
        self.chains * self.draws
    }

    /// One draw's parameter vector.
    pub fn draw(&self, chain: usize, draw: usize) -> &[f64] {
        let p = self.n_params();
        let start = (chain * self.draws + draw) * p;
        &self.values[start..start + p]
    }

    /// Every draw across chains, in chain-major order.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_params())
    }

    /// Per-chain traces of one parameter.
    pub fn param_chains(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.chains)
            .map(|c| (0..self.draws).map(|d| self.draw(c, d)[param]).collect())
            .collect()
    }

    /// All chains of one parameter pooled.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.iter_draws().map(|d| d[param]).collect()
    }

    pub fn divergences_per_chain(&self) -> Vec<usize> {
        self.stats
            .divergent
            .chunks_exact(self.draws)
            .map(|c| c.iter().filter(|&&d| d).count())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }
}
