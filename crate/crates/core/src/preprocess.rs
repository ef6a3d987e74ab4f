//! Feature catalog, model presets, standard scaling and stratified folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RawTable;

const CATALOG_TSV: &str = include_str!("../data/catalog.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub id: String,
    pub description: String,
}

/// The 64 financial ratios of the Polish companies bankruptcy data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub entries: Vec<FeatureEntry>,
}

impl FeatureCatalog {
    pub fn builtin() -> Self {
        let entries = CATALOG_TSV
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let (id, desc) = l.split_once('\t').expect("catalog rows are tab separated");
                FeatureEntry {
                    id: id.to_string(),
                    description: desc.to_string(),
                }
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks up an id case-insensitively (`Attr33` and `attr33` are the same ratio).
    pub fn get(&self, id: &str) -> Option<&FeatureEntry> {
        self.entries.iter().find(|e| e.id.eq_ignore_ascii_case(id))
    }

    pub fn description(&self, id: &str) -> Option<&str> {
        self.get(id).map(|e| e.description.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Model1,
    Model2,
    Custom,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "model1" => Ok(Self::Model1),
            "model2" => Ok(Self::Model2),
            "custom" => Ok(Self::Custom),
            other => Err(format!(
                "unknown preset {other:?} (expected model1 or model2)"
            )),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Model1 => "model1",
            Self::Model2 => "model2",
            Self::Custom => "custom",
        })
    }
}

/// Ratios focused on total liabilities.
pub const MODEL1_FEATURES: [&str; 5] = ["attr5", "attr24", "attr25", "attr26", "attr34"];

/// Ratios focused mostly on short-term liabilities.
pub const MODEL2_FEATURES: [&str; 12] = [
    "attr8", "attr10", "attr12", "attr20", "attr33", "attr40", "attr42", "attr46", "attr49",
    "attr59", "attr63", "attr64",
];

/// A named, ordered choice of explanatory ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub feature_ids: Vec<String>,
    pub preset: Preset,
}

impl ModelSpec {
    pub fn preset(preset: Preset) -> Result<Self> {
        let (name, ids): (&str, &[&str]) = match preset {
            Preset::Model1 => ("model1", &MODEL1_FEATURES),
            Preset::Model2 => ("model2", &MODEL2_FEATURES),
            Preset::Custom => {
                return Err(Error::InvalidModelSpec(
                    "custom specs need an explicit feature list".into(),
                ))
            }
        };
        Ok(Self {
            name: name.into(),
            feature_ids: ids.iter().map(|s| s.to_string()).collect(),
            preset,
        })
    }

    pub fn custom(name: &str, feature_ids: &[&str], catalog: &FeatureCatalog) -> Result<Self> {
        if feature_ids.is_empty() {
            return Err(Error::InvalidModelSpec("empty feature list".into()));
        }
        let mut ids = Vec::with_capacity(feature_ids.len());
        for raw in feature_ids {
            let entry = catalog
                .get(raw.trim())
                .ok_or_else(|| Error::UnknownFeature(raw.to_string()))?;
            if ids.contains(&entry.id) {
                return Err(Error::InvalidModelSpec(format!(
                    "duplicate feature {}",
                    entry.id
                )));
            }
            ids.push(entry.id.clone());
        }
        Ok(Self {
            name: name.into(),
            feature_ids: ids,
            preset: Preset::Custom,
        })
    }

    /// Parameter names in layout order: intercept first.
    pub fn param_names(&self) -> Vec<String> {
        std::iter::once("(Intercept)".to_string())
            .chain(self.feature_ids.iter().cloned())
            .collect()
    }
}

/// Design matrix (row-major, no intercept column) with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub x: Vec<f64>,
    pub y: Vec<u8>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub feature_ids: Vec<String>,
}

impl LabeledMatrix {
    pub fn new(x: Vec<f64>, y: Vec<u8>, feature_ids: Vec<String>) -> Result<Self> {
        let n_cols = feature_ids.len();
        let n_rows = y.len();
        if x.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {n_rows} rows x {n_cols} columns",
                x.len()
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: k / n_cols.max(1),
                column: k % n_cols.max(1),
            });
        }
        if let Some(row) = y.iter().position(|&v| v > 1) {
            return Err(Error::InvalidLabel {
                row,
                value: f64::from(y[row]),
            });
        }
        Ok(Self {
            x,
            y,
            n_rows,
            n_cols,
            feature_ids,
        })
    }

    /// Extracts the spec's features and the label column from an imputed table.
    pub fn from_table(table: &RawTable, spec: &ModelSpec, label_column: &str) -> Result<Self> {
        let label_idx = table
            .column_index(label_column)
            .ok_or_else(|| Error::UnknownFeature(label_column.to_string()))?;
        let cols: Vec<usize> = spec
            .feature_ids
            .iter()
            .map(|id| {
                table
                    .column_index(id)
                    .ok_or_else(|| Error::UnknownFeature(id.clone()))
            })
            .collect::<Result<_>>()?;
        let mut x = Vec::with_capacity(table.n_rows() * cols.len());
        let mut y = Vec::with_capacity(table.n_rows());
        for (r, row) in table.rows().enumerate() {
            for &c in &cols {
                let v = row[c].ok_or(Error::NonFiniteValue { row: r, column: c })?;
                x.push(v);
            }
            y.push(match row[label_idx] {
                Some(v) if v == 0.0 => 0,
                Some(v) if v == 1.0 => 1,
                other => {
                    return Err(Error::InvalidLabel {
                        row: r,
                        value: other.unwrap_or(f64::NAN),
                    })
                }
            });
        }
        Self::new(x, y, spec.feature_ids.clone())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n_cols + j]
    }

    /// Rows selected by index, in the order given.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.n_cols);
        let mut y = Vec::with_capacity(idx.len());
        for &i in idx {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self {
            x,
            y,
            n_rows: idx.len(),
            n_cols: self.n_cols,
            feature_ids: self.feature_ids.clone(),
        }
    }

    pub fn count_positive(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }
}

/// Per-column standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_ids: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Column means and sample standard deviations (n - 1 denominator).
pub fn fit_scaler(train: &LabeledMatrix) -> Result<Scaler> {
    let n = train.n_rows;
    let p = train.n_cols;
    let mut means = vec![0.0; p];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(train.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut ss = vec![0.0; p];
    for i in 0..n {
        for ((s, v), m) in ss.iter_mut().zip(train.row(i)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let mut sds = Vec::with_capacity(p);
    for (j, s) in ss.into_iter().enumerate() {
        let sd = if n > 1 {
            (s / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::ZeroVarianceColumn(train.feature_ids[j].clone()));
        }
        sds.push(sd);
    }
    Ok(Scaler {
        feature_ids: train.feature_ids.clone(),
        means,
        sds,
    })
}

impl Scaler {
    pub fn apply(&self, data: &LabeledMatrix) -> Result<LabeledMatrix> {
        if data.n_cols != self.means.len() {
            return Err(Error::DimensionMismatch(format!(
                "scaler has {} columns, data has {}",
                self.means.len(),
                data.n_cols
            )));
        }
        let p = data.n_cols;
        let x = data
            .x
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.means[k % p]) / self.sds[k % p])
            .collect();
        Ok(LabeledMatrix {
            x,
            y: data.y.clone(),
            n_rows: data.n_rows,
            n_cols: p,
            feature_ids: data.feature_ids.clone(),
        })
    }

    /// Maps a raw feature row into scaled coordinates.
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, data: &LabeledMatrix) -> LabeledMatrix {
        let p = data.n_cols;
        let x = data
            .x
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.sds[k % p] + self.means[k % p])
            .collect();
        LabeledMatrix { x, ..data.clone() }
    }
}

pub fn apply_scaler(scaler: &Scaler, data: &LabeledMatrix) -> Result<LabeledMatrix> {
    scaler.apply(data)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub heldout: Vec<usize>,
}

/// Splits row indices into `k` folds, spreading each class as evenly as
/// possible. Deterministic for a fixed seed.
pub fn stratified_kfold(data: &LabeledMatrix, k: usize, seed: u64) -> Result<Vec<Fold>> {
    stratified_kfold_labels(&data.y, k, seed)
}

pub fn stratified_kfold_labels(y: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; y.len()];
    let mut next_fold = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.len() < k {
            return Err(Error::TooFewClassMembers {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (heldout, train): (Vec<usize>, Vec<usize>) =
                (0..y.len()).partition(|&i| assignment[i] == f);
            Fold { train, heldout }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[&[f64]], y: &[u8]) -> LabeledMatrix {
        let n = y.len();
        let p = cols.len();
        let mut x = vec![0.0; n * p];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                x[i * p + j] = c[i];
            }
        }
        let ids = (0..p).map(|j| format!("attr{}", j + 1)).collect();
        LabeledMatrix::new(x, y.to_vec(), ids).unwrap()
    }

    #[test]
    fn catalog_has_64_ordered_entries() {
        let cat = FeatureCatalog::builtin();
        assert_eq!(cat.len(), 64);
        for (i, e) in cat.entries.iter().enumerate() {
            assert_eq!(e.id, format!("attr{}", i + 1));
            assert!(!e.description.is_empty());
        }
        assert_eq!(
            cat.description("Attr33"),
            Some("operating expenses / short-term liabilities")
        );
    }

    #[test]
    fn presets_render_to_expected_descriptions() {
        let cat = FeatureCatalog::builtin();
        let m1 = ModelSpec::preset(Preset::Model1).unwrap();
        let d1: Vec<&str> = m1
            .feature_ids
            .iter()
            .map(|id| cat.description(id).unwrap())
            .collect();
        assert_eq!(
            d1,
            [
                "[(cash + short-term securities + receivables - short-term liabilities) / (operating expenses - depreciation)] * 365",
                "gross profit (in 3 years) / total assets",
                "(equity - share capital) / total assets",
                "(net profit + depreciation) / total liabilities",
                "operating expenses / total liabilities",
            ]
        );
        let m2 = ModelSpec::preset(Preset::Model2).unwrap();
        let d2: Vec<&str> = m2
            .feature_ids
            .iter()
            .map(|id| cat.description(id).unwrap())
            .collect();
        assert_eq!(
            d2,
            [
                "book value of equity / total liabilities",
                "equity / total assets",
                "gross profit / short-term liabilities",
                "(inventory * 365) / sales",
                "operating expenses / short-term liabilities",
                "(current assets - inventory - receivables) / short-term liabilities",
                "profit on operating activities / sales",
                "(current assets - inventory) / short-term liabilities",
                "EBITDA (profit on operating activities - depreciation) / sales",
                "long-term liabilities / equity",
                "sales / short-term liabilities",
                "sales / fixed assets",
            ]
        );
        assert_eq!(m2.param_names().len(), 13);
    }

    #[test]
    fn custom_spec_validation() {
        let cat = FeatureCatalog::builtin();
        assert!(ModelSpec::custom("c", &["Attr46", "attr5"], &cat).is_ok());
        assert!(matches!(
            ModelSpec::custom("c", &["attr65"], &cat),
            Err(Error::UnknownFeature(_))
        ));
        assert!(ModelSpec::custom("c", &[], &cat).is_err());
        assert!(ModelSpec::custom("c", &["attr1", "Attr1"], &cat).is_err());
    }

    #[test]
    fn scaler_simple_column() {
        let m = matrix(&[&[1.0, 2.0, 3.0]], &[0, 1, 0]);
        let s = fit_scaler(&m).unwrap();
        assert_eq!(s.means, vec![2.0]);
        assert_eq!(s.sds, vec![1.0]);
    }

    #[test]
    fn scaler_rejects_constant_column() {
        let m = matrix(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]], &[0, 1, 0]);
        assert_eq!(
            fit_scaler(&m),
            Err(Error::ZeroVarianceColumn("attr2".into()))
        );
    }

    #[test]
    fn apply_scaler_examples() {
        let one = matrix(&[&[2.0]], &[1]);
        let s = Scaler {
            feature_ids: vec!["attr1".into()],
            means: vec![2.0],
            sds: vec![1.0],
        };
        assert_eq!(s.apply(&one).unwrap().x, vec![0.0]);
        let four = matrix(&[&[4.0]], &[1]);
        let s = Scaler {
            feature_ids: vec!["attr1".into()],
            means: vec![0.0],
            sds: vec![2.0],
        };
        let scaled = s.apply(&four).unwrap();
        assert_eq!(scaled.x, vec![2.0]);
        assert_eq!(scaled.y, vec![1]);
        let two = matrix(&[&[1.0], &[2.0]], &[0]);
        assert!(matches!(s.apply(&two), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn kfold_forced_by_stratification() {
        let y = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let folds = stratified_kfold_labels(&y, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(f.heldout.len(), 2);
            let pos = f.heldout.iter().filter(|&&i| y[i] == 1).count();
            assert_eq!(pos, 1);
        }
        assert_eq!(folds, stratified_kfold_labels(&y, 5, 3).unwrap());
    }

    #[test]
    fn kfold_table1_training_split() {
        let mut y = vec![0u8; 5487];
        y.extend(std::iter::repeat_n(1u8, 113));
        let folds = stratified_kfold_labels(&y, 10, 20240601).unwrap();
        for f in &folds {
            let pos = f.heldout.iter().filter(|&&i| y[i] == 1).count();
            assert!(pos == 11 || pos == 12, "{pos}");
        }
    }

    #[test]
    fn kfold_errors() {
        let y = [0, 0, 0, 1];
        assert!(matches!(
            stratified_kfold_labels(&y, 2, 0),
            Err(Error::TooFewClassMembers {
                class: 1,
                count: 1,
                k: 2
            })
        ));
        assert!(stratified_kfold_labels(&y, 1, 0).is_err());
    }
}
