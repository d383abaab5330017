//! Target distributions: unnormalized log density, score, and the diagonal of
//! the log-density Hessian, which feeds the truncated-Laplacian penalty.

mod banana;
mod gaussian;
mod logistic;

pub use banana::{BananaTMixture, BananaTMixtureSpec};
pub use gaussian::{ComponentVariance, GaussianMixture, GaussianMixtureSpec};
pub use logistic::{logistic_posterior_model, InterceptPrior, LogisticPosterior};

use ndarray::{Array1, ArrayView1};

/// A target density known up to a constant.
///
/// `score` must be the exact gradient of `log_density_unnorm` and
/// `hess_diag_log` its exact diagonal second derivative; both are finite-
/// difference checkable.
pub trait TargetModel: Sync {
    fn dim(&self) -> usize;
    /// `log p(x)` up to an unknown additive constant.
    fn log_density_unnorm(&self, x: ArrayView1<f64>) -> f64;
    /// `s_p(x) = grad log p(x)`.
    fn score(&self, x: ArrayView1<f64>) -> Array1<f64>;
    /// `d^2 log p / d x_j^2` for `j = 1..d`.
    fn hess_diag_log(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// Coordinatewise positive part of the log-density curvature, summed.
    fn laplacian_plus(&self, x: ArrayView1<f64>) -> f64 {
        self.hess_diag_log(x).iter().map(|h| h.max(0.0)).sum()
    }
}

/// Raw-density curvature for targets with tractable (normalized) densities.
///
/// Only needed by the second-order Stein operator kernel, which works on the
/// density scale rather than the log scale.
pub trait DensityCurvature: Sync {
    fn dim(&self) -> usize;
    fn density(&self, x: ArrayView1<f64>) -> f64;
    fn density_grad(&self, x: ArrayView1<f64>) -> Array1<f64>;
    fn density_hess_diag(&self, x: ArrayView1<f64>) -> Array1<f64>;
}

pub(crate) fn validate_weights(weights: &[f64]) -> crate::error::Result<()> {
    use crate::error::Error;
    if weights.is_empty() {
        return Err(Error::InvalidSpec("mixture needs at least one component".into()));
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::InvalidSpec("mixture weights must be nonnegative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "mixture weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// Numerically stable log-sum-exp over a slice that may contain `-inf`.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
