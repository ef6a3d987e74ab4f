use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use bbglm_core::diagnostics::{narrative, render_summary_table, summarize};
use bbglm_core::evaluate::{
    altman_scores, classify, compare_models, irls_fit, kfold_elpd, posterior_predictive_prob,
    AltmanZone, ComparisonRow,
};
use bbglm_core::glm::GlmModel;
use bbglm_core::ingest::{impute_missing, parse_arff, parse_csv};
use bbglm_core::nuts::run_chains;
use bbglm_core::preprocess::fit_scaler;
use bbglm_core::{
    EvalReport, FeatureCatalog, ImputationStats, LabeledMatrix, ModelSpec, ParameterSummary,
    PosteriorDraws, Preset, PriorSpec, RawTable, Scaler,
};

use crate::config::{DataFormat, RunConfig};
use crate::manifest::{FileHash, RunManifest};
use crate::CliError;

pub const DRAWS_FILE: &str = "draws.json";
pub const SCALER_FILE: &str = "scaler.json";
pub const IMPUTATION_FILE: &str = "imputation.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::User(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text)
        .map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::User(e.to_string()))
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::User(format!("config key {key} is required for this command")))
}

pub fn load_table(path: &Path, cfg: &RunConfig) -> Result<RawTable, CliError> {
    let text = read_text(path)?;
    let parsed = match cfg.format {
        DataFormat::Arff => parse_arff(&text),
        DataFormat::Csv => parse_csv(&text, cfg.csv_header),
    };
    parsed.map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

pub fn model_spec(cfg: &RunConfig) -> Result<ModelSpec, CliError> {
    let mut spec = match cfg.preset {
        Preset::Custom => {
            let ids: Vec<&str> = cfg.features.iter().map(String::as_str).collect();
            let name = cfg.model_name.as_deref().unwrap_or("custom");
            ModelSpec::custom(name, &ids, &FeatureCatalog::builtin())?
        }
        preset => ModelSpec::preset(preset)?,
    };
    if let Some(name) = &cfg.model_name {
        spec.name = name.clone();
    }
    Ok(spec)
}

pub fn prior_spec(cfg: &RunConfig, spec: &ModelSpec) -> Result<PriorSpec, CliError> {
    let names = spec.param_names();
    let mut priors = PriorSpec::uniform(names.len(), cfg.prior);
    for (name, prior) in &cfg.prior_overrides {
        let idx = names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                CliError::User(format!("prior.{name}: no such parameter in the model"))
            })?;
        priors.priors[idx] = *prior;
    }
    Ok(priors)
}

/// Imputed and standardized training data plus the fitted transforms.
pub struct Prepared {
    pub spec: ModelSpec,
    pub imputation: ImputationStats,
    pub scaler: Scaler,
    pub train: LabeledMatrix,
}

pub fn prepare_train(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let spec = model_spec(cfg)?;
    let raw = load_table(required(&cfg.train, "train")?, cfg)?;
    let (imputed, imputation) = impute_missing(&raw, cfg.impute, None)?;
    let matrix = LabeledMatrix::from_table(&imputed, &spec, &cfg.label_column)?;
    let scaler = fit_scaler(&matrix)?;
    let train = scaler.apply(&matrix)?;
    Ok(Prepared {
        spec,
        imputation,
        scaler,
        train,
    })
}

/// Test table after training-fitted imputation, and its standardized model matrix.
pub fn prepare_test(
    cfg: &RunConfig,
    spec: &ModelSpec,
    imputation: &ImputationStats,
    scaler: &Scaler,
) -> Result<(RawTable, LabeledMatrix), CliError> {
    let raw = load_table(required(&cfg.test, "test")?, cfg)?;
    let (imputed, _) = impute_missing(&raw, imputation.strategy, Some(imputation))?;
    let matrix = LabeledMatrix::from_table(&imputed, spec, &cfg.label_column)?;
    let scaled = scaler.apply(&matrix)?;
    Ok((imputed, scaled))
}

pub fn fit(cfg: &RunConfig) -> Result<String, CliError> {
    let started = Instant::now();
    let prep = prepare_train(cfg)?;
    let priors = prior_spec(cfg, &prep.spec)?;
    let model = GlmModel::new(prep.train, priors)?;
    let draws = run_chains(&model, &cfg.sampler)?;

    let draws_path = cfg.out.join(DRAWS_FILE);
    let scaler_path = cfg.out.join(SCALER_FILE);
    let imputation_path = cfg.out.join(IMPUTATION_FILE);
    write_text(&draws_path, &draws.to_json()?)?;
    write_text(&scaler_path, &to_json(&prep.scaler)?)?;
    write_text(&imputation_path, &to_json(&prep.imputation)?)?;

    let hash =
        |p: &Path| FileHash::of(p).map_err(|e| CliError::User(format!("{}: {e}", p.display())));
    let mut manifest = RunManifest::new("fit", cfg.snapshot());
    manifest.inputs.push(hash(required(&cfg.train, "train")?)?);
    for p in [&draws_path, &scaler_path, &imputation_path] {
        manifest.outputs.push(hash(p)?);
    }
    manifest.divergences_per_chain = draws.divergences_per_chain();
    manifest.duration_secs = started.elapsed().as_secs_f64();
    let manifest_path = cfg.out.join(MANIFEST_FILE);
    write_text(&manifest_path, &to_json(&manifest)?)?;

    let mut out = format!(
        "fitted {} ({} parameters): {} chains x {} draws, divergences per chain {:?}\n",
        prep.spec.name,
        draws.n_params(),
        draws.chains,
        draws.draws,
        manifest.divergences_per_chain
    );
    for p in [&draws_path, &scaler_path, &imputation_path, &manifest_path] {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(out)
}

pub fn load_draws(path: &Path) -> Result<PosteriorDraws, CliError> {
    PosteriorDraws::from_json(&read_text(path)?)
        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn draws_path(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| cfg.out.join(DRAWS_FILE), Path::to_path_buf)
}

/// Summary rows with catalog descriptions attached.
pub fn summary_rows(
    draws: &PosteriorDraws,
    cfg: &RunConfig,
) -> Result<Vec<ParameterSummary>, CliError> {
    let catalog = FeatureCatalog::builtin();
    let mut rows = summarize(draws, &cfg.rope)?;
    for r in &mut rows {
        r.description = catalog.description(&r.name).map(String::from);
    }
    Ok(rows)
}

pub fn report(cfg: &RunConfig, draws_file: Option<&Path>) -> Result<String, CliError> {
    let path = draws_path(cfg, draws_file);
    let draws = load_draws(&path)?;
    let rows = summary_rows(&draws, cfg)?;
    let mut md = render_summary_table(&rows);
    md.push('\n');
    for r in &rows {
        let _ = writeln!(md, "- {}", narrative(r));
    }
    let significant: Vec<&str> = rows
        .iter()
        .filter(|r| r.significant && r.name != "(Intercept)")
        .map(|r| r.name.as_str())
        .collect();
    let _ = writeln!(md, "\nSignificant parameters: {}", significant.join(", "));
    let dir = path.parent().unwrap_or(Path::new("."));
    write_text(&dir.join("summary.json"), &to_json(&rows)?)?;
    write_text(&dir.join("summary.md"), &md)?;
    Ok(md)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

pub fn evaluate(
    cfg: &RunConfig,
    draws_file: Option<&Path>,
) -> Result<(EvalReport, String), CliError> {
    let path = draws_path(cfg, draws_file);
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let draws = load_draws(&path)?;
    let scaler: Scaler = load_json(&dir.join(SCALER_FILE))?;
    let imputation: ImputationStats = load_json(&dir.join(IMPUTATION_FILE))?;
    let spec = model_spec(cfg)?;
    if draws.param_names != spec.param_names() {
        return Err(CliError::User(format!(
            "draws in {} do not belong to model {} (parameters {:?})",
            path.display(),
            spec.name,
            draws.param_names
        )));
    }
    let (_, test) = prepare_test(cfg, &spec, &imputation, &scaler)?;
    let probs = posterior_predictive_prob(&draws, &test)?;
    let pred = classify(&probs, cfg.threshold);
    let report = EvalReport::from_predictions(
        &spec.name,
        "test",
        &pred,
        &test.y,
        cfg.threshold,
        cfg.positive_label,
    )?;
    let md = report.to_markdown();
    write_text(&dir.join("eval.json"), &to_json(&report)?)?;
    write_text(&dir.join("eval.md"), &md)?;
    Ok((report, md))
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareOutput {
    pub k: usize,
    pub fold_seed: u64,
    pub rows: Vec<ComparisonRow>,
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut md = String::from(
        "| Model | ELPD | SE | ELPD difference | Std Error |\n|---|---:|---:|---:|---:|\n",
    );
    for r in rows {
        let _ = writeln!(
            md,
            "| {} | {:.3} | {:.3} | {:.3} | {:.3} |",
            r.model, r.elpd, r.se, r.elpd_diff, r.se_diff
        );
    }
    md
}

/// K-fold ELPD of both models on the same training rows and folds. Fold
/// assignment uses the first config's seed.
pub fn compare(
    a: &RunConfig,
    b: &RunConfig,
    out: Option<&Path>,
) -> Result<(CompareOutput, String), CliError> {
    let fold_seed = a.seed;
    let mut results = Vec::new();
    for cfg in [a, b] {
        let prep = prepare_train(cfg)?;
        let priors = prior_spec(cfg, &prep.spec)?;
        let elpd = kfold_elpd(
            &prep.train,
            &priors,
            a.kfold_k,
            fold_seed,
            &cfg.kfold_sampler(),
        )?;
        results.push((prep.spec.name, elpd));
    }
    if results[0].0 == results[1].0 {
        results[1].0.push_str(" (b)");
    }
    let rows = compare_models(&results)?;
    let md = render_comparison(&rows);
    let output = CompareOutput {
        k: a.kfold_k,
        fold_seed,
        rows,
    };
    let dir = out.map_or_else(|| a.out.clone(), Path::to_path_buf);
    write_text(&dir.join("compare.json"), &to_json(&output)?)?;
    write_text(&dir.join("compare.md"), &md)?;
    Ok((output, md))
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselinesOutput {
    pub reports: Vec<EvalReport>,
    pub irls: IrlsSummary,
    pub altman_zones: AltmanZones,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrlsSummary {
    pub param_names: Vec<String>,
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub separation: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AltmanZones {
    pub distress: usize,
    pub grey: usize,
    pub safe: usize,
}

pub fn baselines(cfg: &RunConfig) -> Result<(BaselinesOutput, String), CliError> {
    let prep = prepare_train(cfg)?;
    let (test_raw, test) = prepare_test(cfg, &prep.spec, &prep.imputation, &prep.scaler)?;
    let actual = &test.y;

    let scores = altman_scores(&test_raw)?;
    let mut zones = AltmanZones::default();
    for s in &scores {
        match s.zone {
            AltmanZone::Distress => zones.distress += 1,
            AltmanZone::Grey => zones.grey += 1,
            AltmanZone::Safe => zones.safe += 1,
        }
    }
    let altman_pred: Vec<u8> = scores.iter().map(|s| s.class).collect();
    let mut altman = EvalReport::from_predictions(
        "altman-z",
        "test",
        &altman_pred,
        actual,
        1.81,
        cfg.positive_label,
    )?;
    altman.notes.push(format!(
        "Z = 1.2 attr3 + 1.4 attr6 + 3.3 attr7 + 0.6 attr8 + 1.0 attr9 with book equity; distress below 1.81, grey zone [1.81, 2.99) counted as non-bankrupt ({} distress, {} grey, {} safe)",
        zones.distress, zones.grey, zones.safe
    ));

    let fit = irls_fit(&prep.train, 100, 1e-8)?;
    let names = prep.spec.param_names();
    let point = PosteriorDraws::from_values(names.clone(), 1, 1, fit.beta.0.clone())?;
    let irls_pred = classify(&posterior_predictive_prob(&point, &test)?, cfg.threshold);
    let mut irls = EvalReport::from_predictions(
        &format!("{}-ml", prep.spec.name),
        "test",
        &irls_pred,
        actual,
        cfg.threshold,
        cfg.positive_label,
    )?;
    if fit.separation {
        irls.notes
            .push("coefficients diverged: the training data look (quasi-)separable".into());
    } else if !fit.converged {
        irls.notes.push(format!(
            "no convergence after {} iterations",
            fit.iterations
        ));
    }

    let constant = vec![0u8; actual.len()];
    let negative = EvalReport::from_predictions(
        "constant-negative",
        "test",
        &constant,
        actual,
        cfg.threshold,
        cfg.positive_label,
    )?;

    let output = BaselinesOutput {
        reports: vec![altman, irls, negative],
        irls: IrlsSummary {
            param_names: names,
            beta: fit.beta.0,
            iterations: fit.iterations,
            converged: fit.converged,
            separation: fit.separation,
        },
        altman_zones: zones,
    };
    let md: String = output
        .reports
        .iter()
        .map(|r| r.to_markdown() + "\n")
        .collect();
    write_text(&cfg.out.join("baselines.json"), &to_json(&output)?)?;
    write_text(&cfg.out.join("baselines.md"), &md)?;
    Ok((output, md))
}

pub fn catalog() -> String {
    let catalog = FeatureCatalog::builtin();
    let mut out = String::new();
    for entry in &catalog.entries {
        let _ = writeln!(out, "{}\t{}", entry.id, entry.description);
    }
    out
}

pub fn surrogate(seed: u64, out: &Path) -> Result<String, CliError> {
    let s = bbglm_core::surrogate::generate(seed)?;
    let train = out.join("train.arff");
    let test = out.join("test.arff");
    write_text(&train, &s.train_arff())?;
    write_text(&test, &s.test_arff())?;
    Ok(format!(
        "wrote {}\nwrote {}\n",
        train.display(),
        test.display()
    ))
}
