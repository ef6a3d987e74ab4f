//! Bayesian logistic regression for bankruptcy forecasting from financial ratios.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`ingest`]: ARFF / CSV parsing and missing-value imputation.
//! * [`preprocess`]: the 64-ratio feature catalog, model presets, standard
//!   scaling and stratified folds.
//! * [`glm`]: Bernoulli-logit likelihood with Student-t priors.
//! * [`nuts`]: No-U-Turn Hamiltonian Monte Carlo with dual-averaging step
//!   size adaptation and multi-chain orchestration.
//! * [`diagnostics`]: rank-normalized split R-hat, bulk ESS and ROPE-based
//!   posterior summaries.
//! * [`evaluate`]: posterior predictive classification, confusion metrics,
//!   K-fold ELPD and the Altman / maximum-likelihood baselines.
//! * [`surrogate`]: deterministic synthetic stand-in for the Polish companies
//!   data with the same dimensions and class balance.

pub mod diagnostics;
pub mod error;
pub mod evaluate;
pub mod glm;
pub mod ingest;
pub mod nuts;
pub mod preprocess;
pub mod surrogate;

pub use diagnostics::{ParameterSummary, RopeSpec, Significance};
pub use error::{Error, Result};
pub use evaluate::{ConfusionMatrix, ElpdResult, EvalReport, MetricSet};
pub use glm::{GlmModel, ParamVector, Prior, PriorSpec};
pub use ingest::{Cell, ImputationStats, ImputeStrategy, RawTable};
pub use nuts::{PosteriorDraws, SamplerConfig};
pub use preprocess::{FeatureCatalog, LabeledMatrix, ModelSpec, Preset, Scaler};
