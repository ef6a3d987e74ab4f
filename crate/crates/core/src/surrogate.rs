//! Synthetic stand-in for the Polish companies bankruptcy data (64 ratios plus
//! a `class` column), used when the public files are unavailable.
//!
//! The generator is calibrated to reference summary statistics: split sizes
//! and class counts, model2 posterior medians on the standardized scale, the
//! bankrupt rate, and the shape of the held-out confusion matrix. Firms are
//! drawn from a population model and kept until each class quota is filled.
//!
//! Population model, on a latent standardized scale:
//! * the 12 model2 ratios are jointly Gaussian with a correlation matrix whose
//!   near-null direction is aligned with the coefficient vector, so the risk
//!   score `s = gamma . z` has standard deviation [`RISK_SD`] although the
//!   individual coefficients are large;
//! * `P(bankrupt) = sigmoid(INTERCEPT + min(s, RISK_CAP))`;
//! * the held-out split also contains a small share of extreme-ratio firms
//!   whose score is pushed far above the cap, so their risk saturates;
//! * the five model1 ratios are noisy signed proxies of the capped score;
//! * the Altman ratios have marginals typical of distressed small firms;
//! * every other ratio is independent noise on its own raw scale, with a small
//!   share of missing cells.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::Result;
use crate::glm::sigmoid;
use crate::ingest::{write_arff, Cell, RawTable};
use crate::preprocess::{MODEL1_FEATURES, MODEL2_FEATURES};

pub const DEFAULT_SEED: u64 = 2013;
pub const RELATION: &str = "polish-bankruptcy-surrogate";
pub const CLASS_COLUMN: &str = "class";

/// Intercept of the population model.
pub const INTERCEPT: f64 = -5.078;
/// Reference model2 posterior medians, in [`MODEL2_FEATURES`] order.
pub const MODEL2_MEDIANS: [f64; 12] = [
    -0.064, 0.036, 0.197, -0.197, 9.176, 2.720, -18.648, -4.337, 19.113, -0.189, -10.258, 0.102,
];
/// Generating coefficients are the medians times this factor, offsetting the
/// shrinkage of the Student-t prior along the weakly identified direction.
pub const COEF_INFLATION: f64 = 1.25;
pub const RISK_SD: f64 = 1.7;
pub const RISK_CAP: f64 = 4.3;
/// Share of extreme-ratio firms in the held-out population.
pub const OUTLIER_SHARE: f64 = 0.012;
const OUTLIER_SCORE: (f64, f64) = (6.0, 10.0);
/// Signs of the model1 proxies (attr5, attr24, attr25, attr26, attr34).
const MODEL1_SIGNS: [f64; 5] = [1.0, 1.0, -1.0, -1.0, 1.0];
const MODEL1_NOISE: f64 = 0.6;
const MISSING_SHARE: f64 = 0.01;
const LOW_WEIGHT_MISSING_SHARE: f64 = 0.002;
const LOW_WEIGHT_COLUMNS: [&str; 2] = ["attr10", "attr64"];
/// (column, mean, sd) of the Altman ratios not used by model2.
const ALTMAN_MARGINALS: [(&str, f64, f64); 4] = [
    ("attr3", 0.05, 0.15),
    ("attr6", 0.0, 0.2),
    ("attr7", 0.04, 0.1),
    ("attr9", 1.0, 0.35),
];
const N_ATTRS: usize = 64;
const BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSize {
    pub negatives: usize,
    pub positives: usize,
}

pub const TRAIN_SIZE: SplitSize = SplitSize {
    negatives: 5487,
    positives: 113,
};
pub const TEST_SIZE: SplitSize = SplitSize {
    negatives: 2105,
    positives: 47,
};

#[derive(Debug, Clone)]
pub struct Surrogate {
    pub train: RawTable,
    pub test: RawTable,
}

impl Surrogate {
    pub fn train_arff(&self) -> String {
        write_arff(&self.train, RELATION, Some(CLASS_COLUMN))
    }

    pub fn test_arff(&self) -> String {
        write_arff(&self.test, RELATION, Some(CLASS_COLUMN))
    }
}

/// Generating coefficients on the latent scale.
pub fn generating_coefficients() -> [f64; 12] {
    MODEL2_MEDIANS.map(|b| b * COEF_INFLATION)
}

/// Correlation matrix `R` of the latent model2 ratios with
/// `sqrt(gamma' R gamma) = risk_sd`.
///
/// `R` is `I - c u u'` rescaled to unit diagonal, where `u` is the fixed point
/// of `u ~ D^{-1/2} gamma` so that `gamma` stays the near-null direction after
/// rescaling. `c` is found by bisection.
pub fn latent_correlation(gamma: &[f64], risk_sd: f64) -> DMatrix<f64> {
    let g = DVector::from_column_slice(gamma);
    let build = |c: f64| {
        let mut u = g.normalize();
        for _ in 0..200 {
            let w = DVector::from_iterator(
                u.len(),
                g.iter()
                    .zip(u.iter())
                    .map(|(gi, ui)| gi / (1.0 - c * ui * ui).sqrt()),
            );
            u = w.normalize();
        }
        let m = DMatrix::identity(u.len(), u.len()) - c * &u * u.transpose();
        let d = m.diagonal().map(f64::sqrt);
        DMatrix::from_fn(u.len(), u.len(), |i, j| m[(i, j)] / (d[i] * d[j]))
    };
    let score_sd = |r: &DMatrix<f64>| (g.transpose() * r * &g)[(0, 0)].sqrt();
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-9);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if score_sd(&build(mid)) > risk_sd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(0.5 * (lo + hi))
}

struct Layout {
    /// Raw location and scale of every attr column (index 0 = attr1).
    loc: Vec<f64>,
    scale: Vec<f64>,
    heavy_tailed: Vec<bool>,
    model2_cols: Vec<usize>,
    model1_cols: Vec<usize>,
    altman_cols: Vec<(usize, f64, f64)>,
    missing_share: Vec<f64>,
}

fn attr_index(id: &str) -> usize {
    id.trim_start_matches("attr")
        .parse::<usize>()
        .expect("attr id")
        - 1
}

impl Layout {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut loc = Vec::with_capacity(N_ATTRS);
        let mut scale = Vec::with_capacity(N_ATTRS);
        let mut heavy_tailed = Vec::with_capacity(N_ATTRS);
        for _ in 0..N_ATTRS {
            loc.push(rng.random_range(-1.0..2.0));
            scale.push(rng.random_range(-2.0f64..2.5).exp());
            heavy_tailed.push(rng.random_bool(0.3));
        }
        let model2_cols: Vec<usize> = MODEL2_FEATURES.iter().map(|id| attr_index(id)).collect();
        let model1_cols: Vec<usize> = MODEL1_FEATURES.iter().map(|id| attr_index(id)).collect();
        // attr8 enters the Altman score on its raw scale
        let a8 = attr_index("attr8");
        loc[a8] = 0.5;
        scale[a8] = 0.3;
        let altman_cols: Vec<(usize, f64, f64)> = ALTMAN_MARGINALS
            .iter()
            .map(|&(id, m, s)| (attr_index(id), m, s))
            .collect();

        let mut missing_share = vec![MISSING_SHARE; N_ATTRS];
        for &c in model2_cols.iter().chain(&model1_cols) {
            missing_share[c] = 0.0;
        }
        for &(c, _, _) in &altman_cols {
            missing_share[c] = 0.0;
        }
        for id in LOW_WEIGHT_COLUMNS {
            missing_share[attr_index(id)] = LOW_WEIGHT_MISSING_SHARE;
        }
        Self {
            loc,
            scale,
            heavy_tailed,
            model2_cols,
            model1_cols,
            altman_cols,
            missing_share,
        }
    }
}

struct Population {
    gamma: DVector<f64>,
    chol_l: DMatrix<f64>,
    /// Shift direction of outliers: raises the score by one unit per unit step.
    outlier_dir: DVector<f64>,
}

impl Population {
    fn new() -> Self {
        let gamma = DVector::from_column_slice(&generating_coefficients());
        let r = latent_correlation(gamma.as_slice(), RISK_SD);
        let rg = &r * &gamma;
        let outlier_dir = &rg / gamma.dot(&rg);
        let chol_l = r
            .cholesky()
            .expect("latent correlation is positive definite")
            .l();
        Self {
            gamma,
            chol_l,
            outlier_dir,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn generate_split(
    pop: &Population,
    layout: &Layout,
    size: SplitSize,
    outlier_share: f64,
    rng: &mut ChaCha8Rng,
) -> Result<RawTable> {
    let p = pop.gamma.len();
    let heavy = StudentT::new(4.0).expect("valid df");
    let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(size.negatives + size.positives);
    let (mut neg, mut pos) = (0, 0);
    while neg < size.negatives || pos < size.positives {
        for _ in 0..BATCH {
            let e = DVector::from_fn(p, |_, _| normal(rng));
            let mut z = &pop.chol_l * e;
            if rng.random_bool(outlier_share) {
                let target = rng.random_range(OUTLIER_SCORE.0..OUTLIER_SCORE.1);
                let shift = target - pop.gamma.dot(&z);
                z += shift * &pop.outlier_dir;
            }
            let score = pop.gamma.dot(&z);
            let capped = score.min(RISK_CAP);
            let y = u8::from(rng.random::<f64>() < sigmoid(INTERCEPT + capped));

            let mut row: Vec<Cell> = vec![None; N_ATTRS + 1];
            for j in 0..N_ATTRS {
                let noise = if layout.heavy_tailed[j] {
                    heavy.sample(rng) / 2f64.sqrt()
                } else {
                    normal(rng)
                };
                row[j] = Some(layout.loc[j] + layout.scale[j] * noise);
            }
            for (k, &c) in layout.model2_cols.iter().enumerate() {
                row[c] = Some(layout.loc[c] + layout.scale[c] * z[k]);
            }
            for (k, &c) in layout.model1_cols.iter().enumerate() {
                let m = MODEL1_SIGNS[k] * capped / RISK_SD + MODEL1_NOISE * normal(rng);
                row[c] = Some(layout.loc[c] + layout.scale[c] * m);
            }
            for &(c, mean, sd) in &layout.altman_cols {
                row[c] = Some(mean + sd * normal(rng));
            }
            for j in 0..N_ATTRS {
                if rng.random::<f64>() < layout.missing_share[j] {
                    row[j] = None;
                }
            }
            for cell in row.iter_mut().take(N_ATTRS).flatten() {
                *cell = (*cell * 1e6).round() / 1e6;
            }
            row[N_ATTRS] = Some(f64::from(y));

            if y == 1 && pos < size.positives {
                pos += 1;
                rows.push(row);
            } else if y == 0 && neg < size.negatives {
                neg += 1;
                rows.push(row);
            }
            if neg == size.negatives && pos == size.positives {
                break;
            }
        }
    }
    rows.shuffle(rng);
    let mut names: Vec<String> = (1..=N_ATTRS).map(|j| format!("attr{j}")).collect();
    names.push(CLASS_COLUMN.into());
    RawTable::new(names, rows)
}

/// Generates both splits with the published sizes. Everything is a pure
/// function of `seed`.
pub fn generate(seed: u64) -> Result<Surrogate> {
    generate_sized(seed, TRAIN_SIZE, TEST_SIZE)
}

pub fn generate_sized(seed: u64, train: SplitSize, test: SplitSize) -> Result<Surrogate> {
    let mut layout_rng = ChaCha8Rng::seed_from_u64(seed);
    layout_rng.set_stream(0);
    let layout = Layout::new(&mut layout_rng);
    let pop = Population::new();
    let mut train_rng = ChaCha8Rng::seed_from_u64(seed);
    train_rng.set_stream(1);
    let mut test_rng = ChaCha8Rng::seed_from_u64(seed);
    test_rng.set_stream(2);
    Ok(Surrogate {
        train: generate_split(&pop, &layout, train, 0.0, &mut train_rng)?,
        test: generate_split(&pop, &layout, test, OUTLIER_SHARE, &mut test_rng)?,
    })
}
