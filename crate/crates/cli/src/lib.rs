//! `bbglm` command-line front end.
//!
//! Exit codes: 0 on success, 1 on user or configuration errors, 2 when a
//! computation fails (sampler, fold refit, singular system).

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use bbglm_core::Error;
use config::{ConfigError, RunConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    User(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::User(_) => 1,
            Self::Compute(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::User(m) | Self::Compute(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::User(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFiniteGradient
            | Error::StepSizeCollapse { .. }
            | Error::ChainFailed { .. }
            | Error::FoldFitFailed { .. }
            | Error::SingularSystem => Self::Compute(e.to_string()),
            other => Self::User(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bbglm",
    version,
    about = "Bayesian logistic GLM for bankruptcy prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct Overrides {
    /// Flat key = value run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// model1, model2 or custom
    #[arg(long)]
    preset: Option<String>,
    /// arff or csv
    #[arg(long)]
    format: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Label counted as positive in headline metrics (0 or 1)
    #[arg(long)]
    positive_label: Option<u8>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the posterior and write draws, transforms and a run manifest
    Fit(Overrides),
    /// Summarize a draws file: table plus one sentence per parameter
    Report {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Classify the test split with the posterior predictive
    Evaluate {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// K-fold ELPD comparison of two configurations
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Altman Z-score, maximum-likelihood GLM and constant-negative baselines
    Baselines(Overrides),
    /// List the 64 financial ratios
    Catalog,
    /// Write the synthetic train/test ARFF files
    Surrogate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = bbglm_core::surrogate::DEFAULT_SEED)]
        seed: u64,
    },
}

fn load_config(o: &Overrides, need_seed: bool) -> Result<RunConfig, CliError> {
    let cwd = Path::new(".");
    let mut cfg = match (&o.config, o.seed) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(seed)) => RunConfig::parse(&format!("seed = {seed}"), cwd)?,
        (None, None) if !need_seed => RunConfig::parse("seed = 0", cwd)?,
        (None, None) => {
            return Err(CliError::User(
                "a seed is required: pass --config or --seed".into(),
            ))
        }
    };
    let flags: [(&str, Option<String>); 6] = [
        ("seed", o.seed.map(|v| v.to_string())),
        ("preset", o.preset.clone()),
        ("format", o.format.clone()),
        ("out", o.out.as_ref().map(|p| p.display().to_string())),
        ("threshold", o.threshold.map(|v| v.to_string())),
        ("positive_label", o.positive_label.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v, cwd)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Fit(o) => commands::fit(&load_config(&o, true)?),
        Command::Report { overrides, draws } => {
            commands::report(&load_config(&overrides, false)?, draws.as_deref())
        }
        Command::Evaluate { overrides, draws } => {
            commands::evaluate(&load_config(&overrides, true)?, draws.as_deref()).map(|(_, md)| md)
        }
        Command::Compare { first, second, out } => {
            let a = RunConfig::from_file(&first)?;
            let b = RunConfig::from_file(&second)?;
            commands::compare(&a, &b, out.as_deref()).map(|(_, md)| md)
        }
        Command::Baselines(o) => commands::baselines(&load_config(&o, true)?).map(|(_, md)| md),
        Command::Catalog => Ok(commands::catalog()),
        Command::Surrogate { out, seed } => commands::surrogate(seed, &out),
    }
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var("BB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::User(format!("BB_THREADS must be a positive integer, got {v:?}"))
            }),
        Err(_) => Ok(None),
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = thread_count().and_then(|threads| match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::User(e.to_string()))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    });
    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
