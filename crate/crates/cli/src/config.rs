//! Run configuration: a flat `key = value` text file.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value
//! key     := [a-z0-9_.]+
//! ```
//!
//! Keys are unique and unknown keys are rejected. `seed` is mandatory.
//! Relative paths are resolved against the directory of the config file.
//!
//! | key | value | default |
//! |---|---|---|
//! | `train`, `test` | path | none |
//! | `format` | `arff` or `csv` | `arff` |
//! | `csv_header` | `true` or `false` | `true` |
//! | `label_column` | column name | `class` |
//! | `preset` | `model1`, `model2` or `custom` | `model2` |
//! | `features` | comma-separated ids (custom preset) | empty |
//! | `model_name` | label for reports | preset name |
//! | `impute` | `median`, `mean` or `drop` | `median` |
//! | `prior` | `df,location,scale` for every parameter | `7,0,2.5` |
//! | `prior.<param>` | `df,location,scale` for one parameter | |
//! | `chains`, `warmup`, `draws` | integers | `4`, `2000`, `2000` |
//! | `target_accept`, `max_treedepth`, `init_radius` | numbers | `0.8`, `10`, `2` |
//! | `rope_low`, `rope_high`, `ci_level` | numbers | `-0.1814`, `0.1814`, `0.89` |
//! | `threshold` | probability | `0.5` |
//! | `positive_label` | `0` or `1` | `1` |
//! | `kfold_k` | integer | `10` |
//! | `kfold_warmup`, `kfold_draws` | integers | `warmup`, `draws` |
//! | `seed` | unsigned integer | required |
//! | `out` | output directory | `out` next to the config |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bbglm_core::glm::Prior;
use bbglm_core::{ImputeStrategy, Preset, RopeSpec, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Arff,
    Csv,
}

impl FromStr for DataFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "arff" => Ok(Self::Arff),
            "csv" => Ok(Self::Csv),
            other => Err(ConfigError(format!(
                "format must be arff or csv, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Arff => "arff",
            Self::Csv => "csv",
        })
    }
}

const KEYS: &[&str] = &[
    "train",
    "test",
    "format",
    "csv_header",
    "label_column",
    "preset",
    "features",
    "model_name",
    "impute",
    "prior",
    "chains",
    "warmup",
    "draws",
    "target_accept",
    "max_treedepth",
    "init_radius",
    "rope_low",
    "rope_high",
    "ci_level",
    "threshold",
    "positive_label",
    "kfold_k",
    "kfold_warmup",
    "kfold_draws",
    "seed",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: DataFormat,
    pub csv_header: bool,
    pub label_column: String,
    pub preset: Preset,
    pub features: Vec<String>,
    pub model_name: Option<String>,
    pub impute: ImputeStrategy,
    pub prior: Prior,
    pub prior_overrides: BTreeMap<String, Prior>,
    pub sampler: SamplerConfig,
    pub rope: RopeSpec,
    pub threshold: f64,
    pub positive_label: u8,
    pub kfold_k: usize,
    pub kfold_warmup: Option<usize>,
    pub kfold_draws: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("invalid value {value:?} for {key}")))
}

fn parse_prior(key: &str, value: &str) -> Result<Prior, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError(format!(
            "{key} expects df,location,scale; got {value:?}"
        )));
    }
    let df = parse_num(key, parts[0])?;
    let location = parse_num(key, parts[1])?;
    let scale = parse_num(key, parts[2])?;
    Prior::new(df, location, scale).map_err(|e| ConfigError(format!("{key}: {e}")))
}

fn fmt_prior(p: &Prior) -> String {
    format!("{},{},{}", p.df, p.location, p.scale)
}

impl RunConfig {
    fn with_seed(seed: u64) -> Self {
        Self {
            train: None,
            test: None,
            format: DataFormat::Arff,
            csv_header: true,
            label_column: "class".into(),
            preset: Preset::Model2,
            features: Vec::new(),
            model_name: None,
            impute: ImputeStrategy::Median,
            prior: Prior::default(),
            prior_overrides: BTreeMap::new(),
            sampler: SamplerConfig::with_seed(seed),
            rope: RopeSpec::default(),
            threshold: 0.5,
            positive_label: 1,
            kfold_k: 10,
            kfold_warmup: None,
            kfold_draws: None,
            seed,
            out: PathBuf::from("out"),
        }
    }

    /// Parses config text. `base` resolves relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let seed = match entries.get("seed") {
            Some(v) => parse_num("seed", v)?,
            None => return Err(ConfigError("missing mandatory key: seed".into())),
        };
        let mut cfg = Self::with_seed(seed);
        cfg.out = base.join("out");
        for (key, value) in &entries {
            cfg.set(key, value, base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Sets one key, as from the config file. Flag overrides use this with
    /// the current directory as `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), ConfigError> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "train" => self.train = Some(path(value)),
            "test" => self.test = Some(path(value)),
            "format" => self.format = value.parse()?,
            "csv_header" => self.csv_header = parse_num(key, value)?,
            "label_column" => self.label_column = value.to_string(),
            "preset" => {
                self.preset = value
                    .parse()
                    .map_err(|e| ConfigError(format!("preset: {e}")))?
            }
            "features" => {
                self.features = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "model_name" => self.model_name = Some(value.to_string()),
            "impute" => {
                self.impute = value
                    .parse()
                    .map_err(|e| ConfigError(format!("impute: {e}")))?
            }
            "prior" => self.prior = parse_prior(key, value)?,
            "chains" => self.sampler.chains = parse_num(key, value)?,
            "warmup" => self.sampler.warmup = parse_num(key, value)?,
            "draws" => self.sampler.draws = parse_num(key, value)?,
            "target_accept" => self.sampler.target_accept = parse_num(key, value)?,
            "max_treedepth" => self.sampler.max_treedepth = parse_num(key, value)?,
            "init_radius" => self.sampler.init_radius = parse_num(key, value)?,
            "rope_low" => self.rope.low = parse_num(key, value)?,
            "rope_high" => self.rope.high = parse_num(key, value)?,
            "ci_level" => self.rope.ci_level = parse_num(key, value)?,
            "threshold" => self.threshold = parse_num(key, value)?,
            "positive_label" => self.positive_label = parse_num(key, value)?,
            "kfold_k" => self.kfold_k = parse_num(key, value)?,
            "kfold_warmup" => self.kfold_warmup = Some(parse_num(key, value)?),
            "kfold_draws" => self.kfold_draws = Some(parse_num(key, value)?),
            "seed" => {
                self.seed = parse_num(key, value)?;
                self.sampler.seed = self.seed;
            }
            "out" => self.out = path(value),
            k if k.starts_with("prior.") && k.len() > "prior.".len() => {
                self.prior_overrides
                    .insert(k["prior.".len()..].to_string(), parse_prior(k, value)?);
            }
            other => return Err(ConfigError(format!("unknown key: {other}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sampler
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        self.rope
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfigError(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.positive_label > 1 {
            return Err(ConfigError("positive_label must be 0 or 1".into()));
        }
        if self.kfold_k < 2 {
            return Err(ConfigError("kfold_k must be at least 2".into()));
        }
        if self.preset == Preset::Custom && self.features.is_empty() {
            return Err(ConfigError("preset custom requires a features list".into()));
        }
        Ok(())
    }

    /// Sampler settings used inside every K-fold refit.
    pub fn kfold_sampler(&self) -> SamplerConfig {
        SamplerConfig {
            warmup: self.kfold_warmup.unwrap_or(self.sampler.warmup),
            draws: self.kfold_draws.unwrap_or(self.sampler.draws),
            ..self.sampler.clone()
        }
    }

    /// Every setting as resolved `key = value` pairs, sorted by key.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        if let Some(p) = &self.train {
            put("train", p.display().to_string());
        }
        if let Some(p) = &self.test {
            put("test", p.display().to_string());
        }
        put("format", self.format.to_string());
        put("csv_header", self.csv_header.to_string());
        put("label_column", self.label_column.clone());
        put("preset", self.preset.to_string());
        if !self.features.is_empty() {
            put("features", self.features.join(","));
        }
        if let Some(n) = &self.model_name {
            put("model_name", n.clone());
        }
        put("impute", self.impute.to_string());
        put("prior", fmt_prior(&self.prior));
        for (name, p) in &self.prior_overrides {
            put(&format!("prior.{name}"), fmt_prior(p));
        }
        let s = &self.sampler;
        put("chains", s.chains.to_string());
        put("warmup", s.warmup.to_string());
        put("draws", s.draws.to_string());
        put("target_accept", s.target_accept.to_string());
        put("max_treedepth", s.max_treedepth.to_string());
        put("init_radius", s.init_radius.to_string());
        put("rope_low", self.rope.low.to_string());
        put("rope_high", self.rope.high.to_string());
        put("ci_level", self.rope.ci_level.to_string());
        put("threshold", self.threshold.to_string());
        put("positive_label", self.positive_label.to_string());
        put("kfold_k", self.kfold_k.to_string());
        if let Some(w) = self.kfold_warmup {
            put("kfold_warmup", w.to_string());
        }
        if let Some(d) = self.kfold_draws {
            put("kfold_draws", d.to_string());
        }
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        m
    }
}

fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value", n + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        let known = KEYS.contains(&key.as_str()) || key.starts_with("prior.");
        if !known || key.is_empty() {
            return Err(ConfigError(format!("line {}: unknown key {key:?}", n + 1)));
        }
        if entries.insert(key.clone(), value).is_some() {
            return Err(ConfigError(format!(
                "line {}: duplicate key {key:?}",
                n + 1
            )));
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("seed = 7\n", Path::new("/data")).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.sampler.seed, 7);
        assert_eq!(c.sampler.chains, 4);
        assert_eq!(c.preset, Preset::Model2);
        assert_eq!(c.out, PathBuf::from("/data/out"));
    }

    #[test]
    fn seed_is_mandatory() {
        let e = RunConfig::parse("chains = 2\n", Path::new(".")).unwrap_err();
        assert!(e.0.contains("seed"));
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(RunConfig::parse("seed = 1\nsede = 2\n", Path::new("."))
            .unwrap_err()
            .0
            .contains("unknown"));
        assert!(RunConfig::parse("seed = 1\nseed = 2\n", Path::new("."))
            .unwrap_err()
            .0
            .contains("duplicate"));
        assert!(RunConfig::parse("seed 1\n", Path::new(".")).is_err());
    }

    #[test]
    fn paths_resolve_against_base() {
        let c = RunConfig::parse(
            "seed=1\ntrain = a/train.arff\ntest=/abs/t.arff\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.train.unwrap(), PathBuf::from("/cfg/a/train.arff"));
        assert_eq!(c.test.unwrap(), PathBuf::from("/abs/t.arff"));
    }

    #[test]
    fn priors_and_overrides() {
        let c = RunConfig::parse(
            "seed=1\nprior = 3, 0, 1\nprior.attr8 = 7,0,10\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.prior.df, 3.0);
        assert_eq!(c.prior_overrides["attr8"].scale, 10.0);
        assert!(RunConfig::parse("seed=1\nprior = 3,0\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("seed=1\nprior = 3,0,-1\n", Path::new(".")).is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let text = "seed=5\npreset=custom\nfeatures=attr1, attr2\nwarmup=150\nkfold_draws=300\n";
        let c = RunConfig::parse(text, Path::new("/x")).unwrap();
        let snap: String = c
            .snapshot()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let back = RunConfig::parse(&snap, Path::new("/x")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_settings() {
        assert!(RunConfig::parse("seed=1\nthreshold=1.5\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("seed=1\npositive_label=2\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("seed=1\npreset=custom\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("seed=1\nwarmup=10\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("seed=-3\n", Path::new(".")).is_err());
    }
}
