use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{log_sigmoid, GlmModel, PriorSpec};
use crate::nuts::{run_chains, PosteriorDraws, SamplerConfig};
use crate::preprocess::{stratified_kfold, Fold, LabeledMatrix};

/// Expected log predictive density with pointwise contributions in the
/// original row order of the data it was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElpdResult {
    pub elpd: f64,
    pub se: f64,
    pub per_point: Vec<f64>,
}

impl ElpdResult {
    pub fn from_pointwise(per_point: Vec<f64>) -> Self {
        let n = per_point.len() as f64;
        let elpd = per_point.iter().sum::<f64>();
        Self {
            elpd,
            se: (n * sample_variance(&per_point)).sqrt(),
            per_point,
        }
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (xs.iter().map(|x| (x - m).exp()).sum::<f64>() / xs.len() as f64).ln()
}

/// `log( mean_s p(y_i | beta_s) )` for every held-out row.
pub fn heldout_elpd(draws: &PosteriorDraws, heldout: &LabeledMatrix) -> Result<Vec<f64>> {
    if draws.n_params() != heldout.n_cols + 1 {
        return Err(Error::DimensionMismatch(format!(
            "draws have {} parameters, held-out data has {} features (+ intercept)",
            draws.n_params(),
            heldout.n_cols
        )));
    }
    let mut buf = vec![0.0; draws.total_draws()];
    Ok((0..heldout.n_rows)
        .map(|i| {
            let row = heldout.row(i);
            let sign = if heldout.y[i] == 1 { 1.0 } else { -1.0 };
            for (slot, beta) in buf.iter_mut().zip(draws.iter_draws()) {
                let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
                *slot = log_sigmoid(sign * eta);
            }
            log_mean_exp(&buf)
        })
        .collect())
}

/// K-fold ELPD with a caller supplied fitting routine. `fit` receives the
/// fold index and that fold's training rows. Folds run in parallel and must
/// partition `0..data.n_rows`.
pub fn kfold_elpd_with<F>(data: &LabeledMatrix, folds: &[Fold], fit: F) -> Result<ElpdResult>
where
    F: Fn(usize, &LabeledMatrix) -> Result<PosteriorDraws> + Sync,
{
    let mut seen = vec![false; data.n_rows];
    for f in folds {
        for &i in &f.heldout {
            if i >= data.n_rows || std::mem::replace(&mut seen[i], true) {
                return Err(Error::MisalignedFolds(format!(
                    "row {i} is out of range or held out twice"
                )));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::MisalignedFolds(
            "some rows are never held out".into(),
        ));
    }

    let per_fold: Vec<Result<Vec<f64>>> = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| {
            let train = data.select_rows(&fold.train);
            let heldout = data.select_rows(&fold.heldout);
            let draws = fit(k, &train).map_err(|e| Error::FoldFitFailed {
                fold: k,
                reason: e.to_string(),
            })?;
            heldout_elpd(&draws, &heldout)
        })
        .collect();

    let mut per_point = vec![0.0; data.n_rows];
    for (fold, values) in folds.iter().zip(per_fold) {
        for (&i, v) in fold.heldout.iter().zip(values?) {
            per_point[i] = v;
        }
    }
    Ok(ElpdResult::from_pointwise(per_point))
}

/// Stratified K-fold ELPD refitting the GLM with NUTS on every fold. Fold
/// `k` samples with seed `config.seed + k + 1`; fold assignment uses
/// `fold_seed`.
pub fn kfold_elpd(
    data: &LabeledMatrix,
    priors: &PriorSpec,
    k: usize,
    fold_seed: u64,
    config: &SamplerConfig,
) -> Result<ElpdResult> {
    let folds = stratified_kfold(data, k, fold_seed)?;
    kfold_elpd_with(data, &folds, |fold, train| {
        let model = GlmModel::new(train.clone(), priors.clone())?;
        let cfg = SamplerConfig {
            seed: config.seed.wrapping_add(fold as u64 + 1),
            ..config.clone()
        };
        run_chains(&model, &cfg)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElpdDiff {
    pub diff: f64,
    pub se: f64,
}

/// `elpd(a) - elpd(b)` with the standard error of the pointwise difference.
pub fn elpd_diff(a: &ElpdResult, b: &ElpdResult) -> Result<ElpdDiff> {
    if a.per_point.len() != b.per_point.len() {
        return Err(Error::MisalignedFolds(format!(
            "{} vs {} pointwise values",
            a.per_point.len(),
            b.per_point.len()
        )));
    }
    let d: Vec<f64> = a
        .per_point
        .iter()
        .zip(&b.per_point)
        .map(|(x, y)| x - y)
        .collect();
    Ok(ElpdDiff {
        diff: d.iter().sum(),
        se: (d.len() as f64 * sample_variance(&d)).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub elpd: f64,
    pub se: f64,
    pub elpd_diff: f64,
    pub se_diff: f64,
}

/// Ranks models by ELPD, best first. Differences are taken against the best
/// model, so its own row reads 0.
pub fn compare_models(models: &[(String, ElpdResult)]) -> Result<Vec<ComparisonRow>> {
    let best = models
        .iter()
        .max_by(|a, b| a.1.elpd.total_cmp(&b.1.elpd))
        .ok_or(Error::EmptyResult)?;
    let mut rows = models
        .iter()
        .map(|(name, r)| {
            let d = elpd_diff(r, &best.1)?;
            Ok(ComparisonRow {
                model: name.clone(),
                elpd: r.elpd,
                se: r.se,
                elpd_diff: d.diff,
                se_diff: d.se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.elpd_diff.total_cmp(&a.elpd_diff));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_mass(beta: &[f64]) -> PosteriorDraws {
        let names = (0..beta.len()).map(|j| format!("b{j}")).collect();
        PosteriorDraws::from_values(names, 1, 1, beta.to_vec()).unwrap()
    }

    #[test]
    fn zero_coefficients_give_log_half() {
        let m = LabeledMatrix::new(vec![1.0, -2.0], vec![1, 0], vec!["a".into()]).unwrap();
        let v = heldout_elpd(&point_mass(&[0.0, 0.0]), &m).unwrap();
        for x in v {
            assert!((x - 0.5f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_models_differ_by_zero() {
        let r = ElpdResult::from_pointwise(vec![-0.1, -0.5, -2.0]);
        assert_eq!(elpd_diff(&r, &r).unwrap(), ElpdDiff { diff: 0.0, se: 0.0 });
        let short = ElpdResult::from_pointwise(vec![-0.1]);
        assert!(matches!(
            elpd_diff(&r, &short),
            Err(Error::MisalignedFolds(_))
        ));
    }

    #[test]
    fn comparison_normalizes_best_to_zero() {
        let a = ElpdResult::from_pointwise(vec![-0.2, -0.3, -0.1]);
        let b = ElpdResult::from_pointwise(vec![-0.3, -0.3, -0.4]);
        let rows = compare_models(&[("b".into(), b), ("a".into(), a)]).unwrap();
        assert_eq!(rows[0].model, "a");
        assert_eq!((rows[0].elpd_diff, rows[0].se_diff), (0.0, 0.0));
        assert!((rows[1].elpd_diff + 0.4).abs() < 1e-12);
    }

    #[test]
    fn folds_must_partition_rows() {
        let m = LabeledMatrix::new(vec![0.0; 4], vec![0, 1, 0, 1], vec!["a".into()]).unwrap();
        let folds = vec![Fold {
            train: vec![0, 1],
            heldout: vec![2, 3],
        }];
        let fit = |_: usize, _: &LabeledMatrix| Ok(point_mass(&[0.0, 0.0]));
        assert!(matches!(
            kfold_elpd_with(&m, &folds, fit),
            Err(Error::MisalignedFolds(_))
        ));
    }

    #[test]
    fn log_mean_exp_is_stable() {
        assert!((log_mean_exp(&[-1000.0, -1000.0]) + 1000.0).abs() < 1e-12);
        assert!((log_mean_exp(&[0.0, 2f64.ln()]) - 1.5f64.ln()).abs() < 1e-15);
    }
}
