//! Posterior predictive classification, confusion metrics, K-fold ELPD and
//! the non-Bayesian baselines.

mod baselines;
mod elpd;

pub use baselines::{
    altman_scores, altman_zscore, irls_fit, AltmanScore, AltmanZone, IrlsFit, ALTMAN_COLUMNS,
};
pub use elpd::{
    compare_models, elpd_diff, heldout_elpd, kfold_elpd, kfold_elpd_with, ComparisonRow, ElpdDiff,
    ElpdResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::sigmoid;
use crate::nuts::PosteriorDraws;
use crate::preprocess::LabeledMatrix;

/// Label of a bankrupt firm.
pub const BANKRUPT: u8 = 1;

fn check_draw_dims(draws: &PosteriorDraws, data: &LabeledMatrix) -> Result<()> {
    if draws.n_params() != data.n_cols + 1 {
        return Err(Error::DimensionMismatch(format!(
            "draws have {} parameters, data has {} features (+ intercept)",
            draws.n_params(),
            data.n_cols
        )));
    }
    Ok(())
}

/// Monte Carlo posterior predictive probability of the positive class for
/// every row: the mean of `sigmoid(x . beta)` over all pooled draws.
pub fn posterior_predictive_prob(draws: &PosteriorDraws, data: &LabeledMatrix) -> Result<Vec<f64>> {
    check_draw_dims(draws, data)?;
    let s = draws.total_draws() as f64;
    let mut probs = vec![0.0; data.n_rows];
    for beta in draws.iter_draws() {
        for (i, p) in probs.iter_mut().enumerate() {
            let row = data.row(i);
            let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
            *p += sigmoid(eta);
        }
    }
    probs.iter_mut().for_each(|p| *p /= s);
    Ok(probs)
}

/// 1 when the probability strictly exceeds `threshold`.
pub fn classify(probs: &[f64], threshold: f64) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p > threshold)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
    /// Which label counts as "positive".
    pub positive_label: u8,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

pub fn confusion(pred: &[u8], actual: &[u8], positive_label: u8) -> Result<ConfusionMatrix> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    let mut cm = ConfusionMatrix {
        tn: 0,
        fp: 0,
        fn_: 0,
        tp: 0,
        positive_label,
    };
    for (&p, &a) in pred.iter().zip(actual) {
        match (p == positive_label, a == positive_label) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Classification metrics in percent. Metrics whose denominator is zero are
/// reported as 0 and listed in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let mut undefined = Vec::new();
    let mut ratio = |num: usize, den: usize, name: &str| {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall");
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        undefined.push("f1".into());
        0.0
    };
    MetricSet {
        accuracy: 100.0 * accuracy,
        precision: 100.0 * precision,
        recall: 100.0 * recall,
        f1: 100.0 * f1,
        undefined,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
}

impl Orientation {
    pub fn new(pred: &[u8], actual: &[u8], positive_label: u8) -> Result<Self> {
        let confusion = confusion(pred, actual, positive_label)?;
        Ok(Self {
            metrics: metrics(&confusion),
            confusion,
        })
    }
}

/// Evaluation of one classifier on one dataset, reported with both
/// bankrupt (1) and non-bankrupt (0) as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub dataset: String,
    pub n: usize,
    pub threshold: f64,
    /// Orientation that feeds the headline metrics.
    pub headline_positive_label: u8,
    pub bankrupt_positive: Orientation,
    pub nonbankrupt_positive: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elpd: Option<ElpdSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElpdSummary {
    pub elpd: f64,
    pub se: f64,
}

impl EvalReport {
    pub fn from_predictions(
        model: &str,
        dataset: &str,
        pred: &[u8],
        actual: &[u8],
        threshold: f64,
        headline_positive_label: u8,
    ) -> Result<Self> {
        Ok(Self {
            model: model.into(),
            dataset: dataset.into(),
            n: actual.len(),
            threshold,
            headline_positive_label,
            bankrupt_positive: Orientation::new(pred, actual, BANKRUPT)?,
            nonbankrupt_positive: Orientation::new(pred, actual, 1 - BANKRUPT)?,
            elpd: None,
            notes: Vec::new(),
        })
    }

    pub fn headline(&self) -> &Orientation {
        if self.headline_positive_label == BANKRUPT {
            &self.bankrupt_positive
        } else {
            &self.nonbankrupt_positive
        }
    }

    pub fn to_markdown(&self) -> String {
        let cm = &self.bankrupt_positive.confusion;
        let mut out = format!(
            "### {} on {} (n = {}, threshold = {:.3})\n\n\
             |  | Predicted NO | Predicted YES |\n|---|---:|---:|\n\
             | True NO | {} | {} |\n| True YES | {} | {} |\n\n\
             | Positive class | Accuracy | Precision | Recall | F1 |\n|---|---:|---:|---:|---:|\n",
            self.model, self.dataset, self.n, self.threshold, cm.tn, cm.fp, cm.fn_, cm.tp
        );
        for (label, o) in [
            ("bankrupt (1)", &self.bankrupt_positive),
            ("non-bankrupt (0)", &self.nonbankrupt_positive),
        ] {
            let m = &o.metrics;
            let headline = if o.confusion.positive_label == self.headline_positive_label {
                " *"
            } else {
                ""
            };
            out.push_str(&format!(
                "| {label}{headline} | {:.3} | {:.3} | {:.3} | {:.3} |\n",
                m.accuracy, m.precision, m.recall, m.f1
            ));
        }
        if let Some(e) = &self.elpd {
            out.push_str(&format!("\nELPD = {:.3} (SE {:.3})\n", e.elpd, e.se));
        }
        for note in &self.notes {
            out.push_str(&format!("\n> {note}\n"));
        }
        out
    }
}
