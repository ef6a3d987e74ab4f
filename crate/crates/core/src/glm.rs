//! Bernoulli-logit GLM with independent Student-t priors.
//!
//! Parameters are laid out `[intercept, coefficients in feature order]`. All
//! densities are unnormalized in the posterior sense: the evidence term is
//! never computed.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::preprocess::LabeledMatrix;

/// Logistic function, evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(t))` without cancellation for large `|t|`.
#[inline]
pub fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Bernoulli log mass of label `y` under linear predictor `eta`.
#[inline]
pub fn bernoulli_logit_lpmf(y: u8, eta: f64) -> f64 {
    if y == 1 {
        log_sigmoid(eta)
    } else {
        log_sigmoid(-eta)
    }
}

/// Location-scale Student-t prior for a single parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub df: f64,
    pub location: f64,
    pub scale: f64,
}

impl Default for Prior {
    fn default() -> Self {
        Self {
            df: 7.0,
            location: 0.0,
            scale: 2.5,
        }
    }
}

impl Prior {
    pub fn new(df: f64, location: f64, scale: f64) -> Result<Self> {
        let p = Self {
            df,
            location,
            scale,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.df > 0.0) || !(self.scale > 0.0) || !self.location.is_finite() {
            return Err(Error::InvalidPrior(format!(
                "df and scale must be positive, location finite (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Normalized log density at `beta`.
    pub fn ln_pdf(&self, beta: f64) -> f64 {
        let nu = self.df;
        let z = (beta - self.location) / self.scale;
        ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * (nu * std::f64::consts::PI).ln()
            - self.scale.ln()
            - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
    }

    /// Derivative of [`Prior::ln_pdf`] with respect to `beta`.
    pub fn d_ln_pdf(&self, beta: f64) -> f64 {
        let nu = self.df;
        let z = (beta - self.location) / self.scale;
        -(nu + 1.0) * z / (nu * self.scale * (1.0 + z * z / nu))
    }
}

/// One prior per parameter, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub priors: Vec<Prior>,
}

impl PriorSpec {
    /// Student-t(7, 0, 2.5) on the intercept and every coefficient.
    pub fn default_for(n_params: usize) -> Self {
        Self::uniform(n_params, Prior::default())
    }

    pub fn uniform(n_params: usize, prior: Prior) -> Self {
        Self {
            priors: vec![prior; n_params],
        }
    }

    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.priors.iter().try_for_each(Prior::validate)
    }
}

/// Parameter vector `[intercept, coefficients...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(n_params: usize) -> Self {
        Self(vec![0.0; n_params])
    }

    pub fn intercept(&self) -> f64 {
        self.0[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0[1..]
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
fn linear_predictor(beta: &[f64], row: &[f64]) -> f64 {
    beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>()
}

fn check_dims(beta: &[f64], data: &LabeledMatrix) -> Result<()> {
    if beta.len() != data.n_cols + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for {} features (+ intercept)",
            beta.len(),
            data.n_cols
        )));
    }
    Ok(())
}

pub fn log_likelihood(beta: &[f64], data: &LabeledMatrix) -> Result<f64> {
    check_dims(beta, data)?;
    Ok((0..data.n_rows)
        .map(|i| bernoulli_logit_lpmf(data.y[i], linear_predictor(beta, data.row(i))))
        .sum())
}

/// Per-row Bernoulli log densities at `beta`.
pub fn pointwise_log_lik(beta: &[f64], data: &LabeledMatrix) -> Result<Vec<f64>> {
    check_dims(beta, data)?;
    Ok((0..data.n_rows)
        .map(|i| bernoulli_logit_lpmf(data.y[i], linear_predictor(beta, data.row(i))))
        .collect())
}

pub fn log_prior(beta: &[f64], priors: &PriorSpec) -> Result<f64> {
    if beta.len() != priors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters, {} priors",
            beta.len(),
            priors.len()
        )));
    }
    Ok(beta
        .iter()
        .zip(&priors.priors)
        .map(|(b, p)| p.ln_pdf(*b))
        .sum())
}

/// Logistic regression posterior on standard-scaled data.
#[derive(Debug, Clone)]
pub struct GlmModel {
    data: LabeledMatrix,
    priors: PriorSpec,
}

impl GlmModel {
    pub fn new(data: LabeledMatrix, priors: PriorSpec) -> Result<Self> {
        priors.validate()?;
        if priors.len() != data.n_cols + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} priors for {} parameters",
                priors.len(),
                data.n_cols + 1
            )));
        }
        Ok(Self { data, priors })
    }

    /// Default Student-t(7, 0, 2.5) priors on every parameter.
    pub fn with_default_priors(data: LabeledMatrix) -> Self {
        let priors = PriorSpec::default_for(data.n_cols + 1);
        Self { data, priors }
    }

    pub fn data(&self) -> &LabeledMatrix {
        &self.data
    }

    pub fn priors(&self) -> &PriorSpec {
        &self.priors
    }

    pub fn n_params(&self) -> usize {
        self.data.n_cols + 1
    }

    pub fn log_likelihood(&self, beta: &[f64]) -> Result<f64> {
        log_likelihood(beta, &self.data)
    }

    pub fn log_posterior(&self, beta: &[f64]) -> Result<f64> {
        Ok(log_likelihood(beta, &self.data)? + log_prior(beta, &self.priors)?)
    }

    pub fn grad_log_posterior(&self, beta: &[f64]) -> Result<Vec<f64>> {
        check_dims(beta, &self.data)?;
        let mut grad = vec![0.0; beta.len()];
        self.logp_and_grad(beta, &mut grad);
        Ok(grad)
    }

    /// Log posterior and its gradient in one pass over the data. `beta` and
    /// `grad` must both have [`GlmModel::n_params`] entries.
    pub fn logp_and_grad(&self, beta: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(beta.len(), self.n_params());
        debug_assert_eq!(grad.len(), self.n_params());
        grad.fill(0.0);
        let mut lp = 0.0;
        for i in 0..self.data.n_rows {
            let row = self.data.row(i);
            let eta = linear_predictor(beta, row);
            // margin m = +-eta; shares one exp between the log mass and residual
            let sign = if self.data.y[i] == 1 { 1.0 } else { -1.0 };
            let m = sign * eta;
            let e = (-m.abs()).exp();
            let (log_mass, tail) = if m >= 0.0 {
                (-e.ln_1p(), e / (1.0 + e))
            } else {
                (m - e.ln_1p(), 1.0 / (1.0 + e))
            };
            lp += log_mass;
            let resid = sign * tail;
            grad[0] += resid;
            for (g, x) in grad[1..].iter_mut().zip(row) {
                *g += resid * x;
            }
        }
        for ((g, b), prior) in grad.iter_mut().zip(beta).zip(&self.priors.priors) {
            lp += prior.ln_pdf(*b);
            *g += prior.d_ln_pdf(*b);
        }
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(rows: &[&[f64]], y: &[u8]) -> LabeledMatrix {
        let p = rows[0].len();
        let x = rows.iter().flat_map(|r| r.iter().copied()).collect();
        LabeledMatrix::new(x, y.to_vec(), (1..=p).map(|j| format!("attr{j}")).collect()).unwrap()
    }

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        for t in [-700.0, -40.0, -3.2, 0.1, 5.0, 40.0, 1000.0] {
            assert!((sigmoid(t) + sigmoid(-t) - 1.0).abs() <= 1e-15);
        }
        assert!(sigmoid(-1000.0) >= 0.0 && sigmoid(1000.0) <= 1.0);
        assert!(sigmoid(-40.0) > 0.0);
        // log(sigmoid(-40)) = -40 - log1p(e^-40); high-precision value
        // -40.000000000000000004248354255291589.
        assert!((log_sigmoid(-40.0) - (-40.000_000_000_000_004)).abs() < 1e-12);
        assert!((log_sigmoid(40.0) + 4.248354255291589e-18).abs() < 1e-30);
    }

    #[test]
    fn log_likelihood_examples() {
        let d = data(&[&[1.0], &[2.0], &[-3.0]], &[1, 0, 1]);
        let ll = log_likelihood(&[0.0, 0.0], &d).unwrap();
        assert!((ll - 3.0 * 0.5f64.ln()).abs() < 1e-15);
        let single = data(&[&[1.0]], &[1]);
        let ll = log_likelihood(&[0.0, 2.0], &single).unwrap();
        assert!((ll - sigmoid(2.0).ln()).abs() < 1e-15);
        assert!(matches!(
            log_likelihood(&[0.0], &single),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn log_prior_at_mode_and_scale_identity() {
        let priors = PriorSpec::default_for(4);
        let lp = log_prior(&[0.0; 4], &priors).unwrap();
        let expected = 4.0
            * (ln_gamma(4.0)
                - ln_gamma(3.5)
                - 0.5 * (7.0 * std::f64::consts::PI).ln()
                - 2.5f64.ln());
        assert!((lp - expected).abs() < 1e-12);
        let doubled = PriorSpec::uniform(4, Prior::new(7.0, 0.0, 5.0).unwrap());
        let lp2 = log_prior(&[0.0; 4], &doubled).unwrap();
        assert!((lp - lp2 - 4.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gradient_symmetric_cancellation() {
        let d = data(&[&[1.0], &[-1.0]], &[1, 0]);
        let m = GlmModel::with_default_priors(d);
        let g = m.grad_log_posterior(&[0.0, 0.0]).unwrap();
        // intercept: residuals 0.5 and -0.5 cancel; coefficient: 0.5*1 + (-0.5)*(-1) = 1
        assert!(g[0].abs() < 1e-15);
        let prior_term = Prior::default().d_ln_pdf(0.0);
        assert_eq!(prior_term, 0.0);
    }

    #[test]
    fn log_posterior_decreases_along_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = GlmModel::with_default_priors(data(&refs, &y));
        let mode_region = [0.0; 4];
        for j in 0..4 {
            for sign in [-1.0, 1.0] {
                let mut prev = f64::INFINITY;
                for step in [20.0, 40.0, 80.0, 160.0, 320.0] {
                    let mut b = mode_region;
                    b[j] = sign * step;
                    let lp = m.log_posterior(&b).unwrap();
                    assert!(lp < prev, "coordinate {j}, sign {sign}, step {step}");
                    prev = lp;
                }
            }
        }
    }

    #[test]
    fn pointwise_matches_total() {
        let d = data(&[&[0.3, 1.0], &[2.0, -1.0], &[-0.7, 0.2]], &[1, 0, 0]);
        let beta = [0.1, -0.4, 0.9];
        let pw = pointwise_log_lik(&beta, &d).unwrap();
        let total = log_likelihood(&beta, &d).unwrap();
        assert!((pw.iter().sum::<f64>() - total).abs() < 1e-12);
        let zero = pointwise_log_lik(&[0.0; 3], &d).unwrap();
        assert!(zero.iter().all(|v| (v - 0.5f64.ln()).abs() < 1e-15));
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(0.0, 0.0, 1.0).is_err());
        assert!(Prior::new(3.0, 0.0, -1.0).is_err());
        let d = data(&[&[1.0]], &[1]);
        assert!(GlmModel::new(d, PriorSpec::default_for(3)).is_err());
    }

    proptest! {
        #[test]
        fn logit_inverts_sigmoid(t in -30.0f64..30.0) {
            // one ulp of sigmoid near 0 or 1 is amplified by about exp(|t|)
            let tol = 1e-9 + 1e-15 * t.abs().exp();
            prop_assert!((logit(sigmoid(t)) - t).abs() < tol);
        }

        #[test]
        fn sigmoid_monotone(a in -50.0f64..50.0, d in 1e-6f64..10.0) {
            prop_assert!(sigmoid(a + d) >= sigmoid(a));
        }

        #[test]
        fn log_likelihood_non_positive(b0 in -5.0f64..5.0, b1 in -5.0f64..5.0, x in proptest::collection::vec(-3.0f64..3.0, 1..20)) {
            let y: Vec<u8> = (0..x.len()).map(|i| (i % 2) as u8).collect();
            let d = LabeledMatrix::new(x, y, vec!["attr1".into()]).unwrap();
            prop_assert!(log_likelihood(&[b0, b1], &d).unwrap() <= 0.0);
        }
    }
}
