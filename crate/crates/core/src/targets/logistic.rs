//! Bayesian logistic-regression posterior over `(intercept, weights)`.
//!
//! The likelihood is the usual Bernoulli-sigmoid model. Each weight carries a
//! Student-t prior, the marginal of a Gaussian with Gamma-distributed
//! precision: shape/rate `(a, b)` yields `t(2a, 0, b/a)` where `b/a` is the
//! squared scale. The intercept gets the same prior by default and can be
//! switched to an improper flat prior.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::TargetModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterceptPrior {
    #[default]
    StudentT,
    Flat,
}

#[derive(Debug, Clone)]
pub struct LogisticPosterior {
    features: Array2<f64>,
    labels: Vec<f64>,
    /// Degrees of freedom `2a` of the weight prior.
    dof: f64,
    /// Squared scale `b/a` of the weight prior.
    scale2: f64,
    prior_log_norm: f64,
    intercept_prior: InterceptPrior,
}

/// Build the posterior target for a feature matrix, binary labels, and
/// Gamma-prior hyperparameters `(a, b)`.
pub fn logistic_posterior_model(
    features: Array2<f64>,
    labels: &[u8],
    a: f64,
    b: f64,
) -> Result<LogisticPosterior> {
    LogisticPosterior::new(features, labels, a, b, InterceptPrior::StudentT)
}

impl LogisticPosterior {
    pub fn new(
        features: Array2<f64>,
        labels: &[u8],
        a: f64,
        b: f64,
        intercept_prior: InterceptPrior,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::InvalidSpec("empty dataset".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("features must be finite".into()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidSpec("labels must be 0 or 1".into()));
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidSpec("prior hyperparameters must be positive".into()));
        }
        let dof = 2.0 * a;
        let scale2 = b / a;
        let prior_log_norm = ln_gamma(0.5 * (dof + 1.0))
            - ln_gamma(0.5 * dof)
            - 0.5 * (dof * std::f64::consts::PI * scale2).ln();
        Ok(Self {
            features,
            labels: labels.iter().map(|&y| y as f64).collect(),
            dof,
            scale2,
            prior_log_norm,
            intercept_prior,
        })
    }

    pub fn with_intercept_prior(mut self, prior: InterceptPrior) -> Self {
        self.intercept_prior = prior;
        self
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    fn prior_log_density(&self, t: f64) -> f64 {
        self.prior_log_norm - 0.5 * (self.dof + 1.0) * (t * t / (self.dof * self.scale2)).ln_1p()
    }

    fn prior_score(&self, t: f64) -> f64 {
        -(self.dof + 1.0) * t / (self.dof * self.scale2 + t * t)
    }

    fn prior_hess(&self, t: f64) -> f64 {
        let den = self.dof * self.scale2 + t * t;
        -(self.dof + 1.0) * (self.dof * self.scale2 - t * t) / (den * den)
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

impl TargetModel for LogisticPosterior {
    fn dim(&self) -> usize {
        self.features.ncols() + 1
    }

    fn log_density_unnorm(&self, theta: ArrayView1<f64>) -> f64 {
        debug_assert_eq!(theta.len(), self.dim());
        let (b0, beta) = (theta[0], theta.slice(ndarray::s![1..]));
        let mut ll = 0.0;
        for (i, row) in self.features.rows().into_iter().enumerate() {
            let eta = b0 + row.dot(&beta);
            ll += self.labels[i] * eta - softplus(eta);
        }
        let mut prior = beta.iter().map(|&t| self.prior_log_density(t)).sum::<f64>();
        if self.intercept_prior == InterceptPrior::StudentT {
            prior += self.prior_log_density(b0);
        }
        ll + prior
    }

    fn score(&self, theta: ArrayView1<f64>) -> Array1<f64> {
        let (b0, beta) = (theta[0], theta.slice(ndarray::s![1..]));
        let mut g = Array1::zeros(self.dim());
        for (i, row) in self.features.rows().into_iter().enumerate() {
            let eta = b0 + row.dot(&beta);
            let resid = self.labels[i] - sigmoid(eta);
            g[0] += resid;
            for (j, &x) in row.iter().enumerate() {
                g[j + 1] += resid * x;
            }
        }
        for j in 1..self.dim() {
            g[j] += self.prior_score(theta[j]);
        }
        if self.intercept_prior == InterceptPrior::StudentT {
            g[0] += self.prior_score(b0);
        }
        g
    }

    fn hess_diag_log(&self, theta: ArrayView1<f64>) -> Array1<f64> {
        let (b0, beta) = (theta[0], theta.slice(ndarray::s![1..]));
        let mut h = Array1::zeros(self.dim());
        for row in self.features.rows() {
            let eta = b0 + row.dot(&beta);
            let s = sigmoid(eta);
            let w = s * (1.0 - s);
            h[0] -= w;
            for (j, &x) in row.iter().enumerate() {
                h[j + 1] -= w * x * x;
            }
        }
        for j in 1..self.dim() {
            h[j] += self.prior_hess(theta[j]);
        }
        if self.intercept_prior == InterceptPrior::StudentT {
            h[0] += self.prior_hess(b0);
        }
        h
    }
}
