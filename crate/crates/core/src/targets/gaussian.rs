//! Gaussian mixture targets with per-component diagonal covariances.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{log_sum_exp, validate_weights, DensityCurvature, TargetModel};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Declarative mixture description.
///
/// `variances` holds one entry per component: either a single isotropic
/// variance or a full diagonal of length `d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<ComponentVariance>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentVariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
}

impl GaussianMixtureSpec {
    /// Isotropic components: one variance per component.
    pub fn isotropic(means: Vec<Vec<f64>>, variances: Vec<f64>, weights: Vec<f64>) -> Self {
        Self {
            means,
            variances: variances.into_iter().map(ComponentVariance::Isotropic).collect(),
            weights,
        }
    }

    /// Two components at `(-mu, 0, ..)` and `(mu, 0, ..)` with common
    /// variance `sigma2` and left-mode weight `w_left`.
    pub fn symmetric_pair(mu: f64, sigma2: f64, w_left: f64, dim: usize) -> Self {
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        left[0] = -mu;
        right[0] = mu;
        Self::isotropic(vec![left, right], vec![sigma2, sigma2], vec![w_left, 1.0 - w_left])
    }

    pub fn build(&self) -> Result<GaussianMixture> {
        GaussianMixture::new(self.clone())
    }
}

/// Validated Gaussian mixture with cached `K x d` mean and variance matrices.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    spec: GaussianMixtureSpec,
    means: Array2<f64>,
    vars: Array2<f64>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    /// Per-component Gaussian log-normalization constant.
    log_norm: Vec<f64>,
    dim: usize,
}

impl GaussianMixture {
    pub fn new(spec: GaussianMixtureSpec) -> Result<Self> {
        validate_weights(&spec.weights)?;
        let k = spec.means.len();
        if k == 0 {
            return Err(Error::InvalidSpec("mixture needs at least one component".into()));
        }
        if spec.weights.len() != k || spec.variances.len() != k {
            return Err(Error::InvalidSpec(
                "means, variances, and weights must have the same number of components".into(),
            ));
        }
        let dim = spec.means[0].len();
        if dim == 0 {
            return Err(Error::InvalidSpec("component means must be non-empty".into()));
        }
        let mut means = Array2::zeros((k, dim));
        let mut vars = Array2::zeros((k, dim));
        for (c, mean) in spec.means.iter().enumerate() {
            if mean.len() != dim {
                return Err(Error::InvalidSpec("component means must share one dimension".into()));
            }
            for (j, &m) in mean.iter().enumerate() {
                if !m.is_finite() {
                    return Err(Error::InvalidSpec("component means must be finite".into()));
                }
                means[(c, j)] = m;
            }
            let diag: Vec<f64> = match &spec.variances[c] {
                ComponentVariance::Isotropic(v) => vec![*v; dim],
                ComponentVariance::Diagonal(d) => d.clone(),
            };
            if diag.len() != dim {
                return Err(Error::InvalidSpec(
                    "diagonal covariance length must match the dimension".into(),
                ));
            }
            for (j, &v) in diag.iter().enumerate() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidSpec("variances must be positive".into()));
                }
                vars[(c, j)] = v;
            }
        }
        let log_weights = spec.weights.iter().map(|w| w.ln()).collect();
        let log_norm = (0..k)
            .map(|c| -0.5 * (0..dim).map(|j| LN_2PI + vars[(c, j)].ln()).sum::<f64>())
            .collect();
        Ok(Self {
            weights: spec.weights.clone(),
            spec,
            means,
            vars,
            log_weights,
            log_norm,
            dim,
        })
    }

    pub fn spec(&self) -> &GaussianMixtureSpec {
        &self.spec
    }

    pub fn n_components(&self) -> usize {
        self.means.nrows()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    /// Per-component joint log density `ln w_k + ln N_k(x)`.
    fn component_log_joint(&self, x: ArrayView1<f64>) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.n_components())
            .map(|c| {
                let mut q = 0.0;
                for j in 0..self.dim {
                    let t = x[j] - self.means[(c, j)];
                    q += t * t / self.vars[(c, j)];
                }
                self.log_weights[c] + self.log_norm[c] - 0.5 * q
            })
            .collect()
    }

    /// Posterior component responsibilities at `x`.
    fn responsibilities(&self, log_joint: &[f64]) -> Vec<f64> {
        let lse = log_sum_exp(log_joint);
        log_joint.iter().map(|l| (l - lse).exp()).collect()
    }

    /// Draw one point: component index by weight, then a diagonal Gaussian.
    pub(crate) fn sample_point<R: rand::Rng>(&self, rng: &mut R) -> Array1<f64> {
        let c = sample_categorical(&self.weights, rng);
        let mut x = Array1::zeros(self.dim);
        for j in 0..self.dim {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            x[j] = self.means[(c, j)] + self.vars[(c, j)].sqrt() * z;
        }
        x
    }
}

pub(crate) fn sample_categorical<R: rand::Rng>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl TargetModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_unnorm(&self, x: ArrayView1<f64>) -> f64 {
        log_sum_exp(&self.component_log_joint(x))
    }

    fn score(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let lj = self.component_log_joint(x);
        let r = self.responsibilities(&lj);
        let mut s = Array1::zeros(self.dim);
        for c in 0..self.n_components() {
            if r[c] == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                s[j] += r[c] * (-(x[j] - self.means[(c, j)]) / self.vars[(c, j)]);
            }
        }
        s
    }

    fn hess_diag_log(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let lj = self.component_log_joint(x);
        let r = self.responsibilities(&lj);
        let mut h = Array1::zeros(self.dim);
        for j in 0..self.dim {
            let mut mean_a = 0.0;
            let mut mean_a2_plus_b = 0.0;
            for c in 0..self.n_components() {
                if r[c] == 0.0 {
                    continue;
                }
                let a = -(x[j] - self.means[(c, j)]) / self.vars[(c, j)];
                let b = -1.0 / self.vars[(c, j)];
                mean_a += r[c] * a;
                mean_a2_plus_b += r[c] * (a * a + b);
            }
            h[j] = mean_a2_plus_b - mean_a * mean_a;
        }
        h
    }
}

impl DensityCurvature for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn density(&self, x: ArrayView1<f64>) -> f64 {
        self.log_density_unnorm(x).exp()
    }

    fn density_grad(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let lj = self.component_log_joint(x);
        let mut g = Array1::zeros(self.dim);
        for (c, &l) in lj.iter().enumerate() {
            let dens = l.exp();
            if dens == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                g[j] += dens * (-(x[j] - self.means[(c, j)]) / self.vars[(c, j)]);
            }
        }
        g
    }

    fn density_hess_diag(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let lj = self.component_log_joint(x);
        let mut h = Array1::zeros(self.dim);
        for (c, &l) in lj.iter().enumerate() {
            let dens = l.exp();
            if dens == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                let a = -(x[j] - self.means[(c, j)]) / self.vars[(c, j)];
                h[j] += dens * (a * a - 1.0 / self.vars[(c, j)]);
            }
        }
        h
    }
}
