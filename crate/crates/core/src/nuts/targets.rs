//! Simple analytic targets used for sampler calibration and benchmarks.

use nalgebra::{DMatrix, DVector};

use super::LogDensity;

/// Independent Gaussians with per-coordinate means and standard deviations.
#[derive(Debug, Clone)]
pub struct IsoGaussian {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl IsoGaussian {
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            sd: vec![1.0; dim],
        }
    }
}

impl LogDensity for IsoGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn logp_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..q.len() {
            let z = (q[i] - self.mean[i]) / self.sd[i];
            lp -= 0.5 * z * z;
            grad[i] = -z / self.sd[i];
        }
        lp
    }
}

/// Multivariate normal with a dense covariance matrix.
#[derive(Debug, Clone)]
pub struct DenseGaussian {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
}

impl DenseGaussian {
    /// Returns `None` if `cov` is not symmetric positive definite.
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Option<Self> {
        let chol = cov.cholesky()?;
        Some(Self {
            mean: DVector::from_vec(mean),
            precision: chol.inverse(),
        })
    }
}

impl LogDensity for DenseGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn logp_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        let d = DVector::from_column_slice(q) - &self.mean;
        let g = -(&self.precision * &d);
        grad.copy_from_slice(g.as_slice());
        0.5 * d.dot(&g)
    }
}

/// Flat density: zero gradient everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField {
    pub dim: usize,
}

impl LogDensity for ZeroField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn logp_and_grad(&self, _q: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        0.0
    }
}
