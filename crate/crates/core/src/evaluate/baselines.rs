use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{sigmoid, ParamVector};
use crate::ingest::RawTable;
use crate::preprocess::LabeledMatrix;

/// Ratio columns feeding the Z-score, in coefficient order.
pub const ALTMAN_COLUMNS: [&str; 5] = ["attr3", "attr6", "attr7", "attr8", "attr9"];
const ALTMAN_WEIGHTS: [f64; 5] = [1.2, 1.4, 3.3, 0.6, 1.0];
const DISTRESS_BELOW: f64 = 1.81;
const SAFE_FROM: f64 = 2.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AltmanZone {
    Distress,
    Grey,
    Safe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltmanScore {
    pub z: f64,
    pub zone: AltmanZone,
    /// 1 (bankrupt) inside the distress zone, 0 otherwise.
    pub class: u8,
}

/// Altman Z from the raw ratios `[attr3, attr6, attr7, attr8, attr9]`.
pub fn altman_zscore(ratios: [f64; 5]) -> AltmanScore {
    let z = ratios.iter().zip(ALTMAN_WEIGHTS).map(|(r, w)| r * w).sum();
    let zone = if z < DISTRESS_BELOW {
        AltmanZone::Distress
    } else if z < SAFE_FROM {
        AltmanZone::Grey
    } else {
        AltmanZone::Safe
    };
    AltmanScore {
        z,
        zone,
        class: u8::from(zone == AltmanZone::Distress),
    }
}

/// Scores every row of an unscaled table. All five ratio columns must be
/// present with finite values.
pub fn altman_scores(table: &RawTable) -> Result<Vec<AltmanScore>> {
    let cols = ALTMAN_COLUMNS
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| Error::MissingRatio(format!("column {name} not found")))
        })
        .collect::<Result<Vec<_>>>()?;
    (0..table.n_rows())
        .map(|i| {
            let mut ratios = [0.0; 5];
            for (k, &c) in cols.iter().enumerate() {
                ratios[k] = match table.get(i, c) {
                    Some(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::MissingRatio(format!(
                            "row {} has no finite {}",
                            i + 1,
                            ALTMAN_COLUMNS[k]
                        )))
                    }
                };
            }
            Ok(altman_zscore(ratios))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlsFit {
    pub beta: ParamVector,
    pub iterations: usize,
    pub converged: bool,
    /// Set when coefficients diverge, which indicates (quasi-)separation.
    pub separation: bool,
}

const SEPARATION_NORM: f64 = 1e3;
const DIVERGING_NORM: f64 = 20.0;

/// Unpenalized maximum likelihood logistic regression by iteratively
/// reweighted least squares. Stops when the largest coefficient change is
/// below `tol`.
pub fn irls_fit(data: &LabeledMatrix, max_iter: usize, tol: f64) -> Result<IrlsFit> {
    let (n, p) = (data.n_rows, data.n_cols + 1);
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { data.get(i, j - 1) });
    let y = DVector::from_iterator(n, data.y.iter().map(|&v| f64::from(v)));
    let mut beta = DVector::<f64>::zeros(p);

    let fit = |beta: &DVector<f64>, iterations, converged, separation| IrlsFit {
        beta: ParamVector(beta.iter().copied().collect()),
        iterations,
        converged,
        separation,
    };

    for iter in 1..=max_iter {
        let eta = &x * &beta;
        let mu = eta.map(sigmoid);
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-300));
        let mut xtwx = DMatrix::<f64>::zeros(p, p);
        for i in 0..n {
            let row = x.row(i);
            xtwx += w[i] * row.transpose() * row;
        }
        let score = x.transpose() * (&y - &mu);
        let delta = match xtwx.clone().cholesky() {
            Some(ch) => ch.solve(&score),
            None => match xtwx.lu().solve(&score) {
                Some(d) => d,
                None if beta.norm() > 1.0 => return Ok(fit(&beta, iter, false, true)),
                None => return Err(Error::SingularSystem),
            },
        };
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::SingularSystem);
        }
        beta += &delta;
        if beta.amax() > SEPARATION_NORM {
            return Ok(fit(&beta, iter, false, true));
        }
        if delta.amax() < tol {
            return Ok(fit(&beta, iter, true, false));
        }
    }
    // still moving after max_iter with large coefficients: diverging likelihood
    let diverging = beta.amax() > DIVERGING_NORM;
    Ok(fit(&beta, max_iter, false, diverging))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn altman_zones() {
        let s = altman_zscore([0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!((s.z, s.class, s.zone), (1.0, 1, AltmanZone::Distress));
        let s = altman_zscore([0.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!((s.class, s.zone), (0, AltmanZone::Safe));
        let s = altman_zscore([0.0, 0.0, 0.0, 0.0, 1.81]);
        assert_eq!((s.class, s.zone), (0, AltmanZone::Grey));
        let s = altman_zscore([1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!((s.z - 7.5).abs() < 1e-12);
    }

    #[test]
    fn altman_requires_all_ratios() {
        let names = ALTMAN_COLUMNS.iter().map(|s| s.to_string()).collect();
        let t = RawTable::new(
            names,
            vec![vec![Some(0.1), Some(0.1), None, Some(0.1), Some(1.0)]],
        )
        .unwrap();
        assert!(matches!(altman_scores(&t), Err(Error::MissingRatio(_))));
        let t = RawTable::new(vec!["attr3".into()], vec![vec![Some(0.1)]]).unwrap();
        assert!(matches!(altman_scores(&t), Err(Error::MissingRatio(_))));
    }

    #[test]
    fn symmetric_data_has_zero_intercept() {
        let x = vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let y = vec![1, 1, 0, 0, 0, 1];
        let m = LabeledMatrix::new(x, y, vec!["a".into()]).unwrap();
        let fit = irls_fit(&m, 100, 1e-8).unwrap();
        assert!(fit.converged && !fit.separation);
        assert!(fit.beta[0].abs() < 1e-8);
        assert!((fit.beta[1] - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn separable_data_is_flagged() {
        let m = LabeledMatrix::new(vec![1.0, -1.0], vec![1, 0], vec!["a".into()]).unwrap();
        let fit = irls_fit(&m, 100, 1e-8).unwrap();
        assert!(fit.separation);
        assert!(!fit.converged);
        assert!(fit.beta[0].abs() < 1e-8);
    }
}
