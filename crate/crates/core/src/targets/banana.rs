//! Banana-shaped mixtures with Student-t tails.
//!
//! Each component is a standard multivariate t variable pushed through the
//! shear `phi(z)_2 = z_2 + b z_1^2 - 100 b` (identity elsewhere) and shifted
//! by a center. The shear has unit Jacobian determinant, so component
//! densities are plain pullbacks with no log-det term.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{log_sum_exp, validate_weights, TargetModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BananaTMixtureSpec {
    pub dim: usize,
    /// Shear curvature `b`.
    pub curvature: f64,
    /// Student-t degrees of freedom (> 2).
    pub dof: f64,
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl BananaTMixtureSpec {
    pub fn build(&self) -> Result<BananaTMixture> {
        BananaTMixture::new(self.clone())
    }
}

#[derive(Debug, Clone)]
pub struct BananaTMixture {
    spec: BananaTMixtureSpec,
    log_weights: Vec<f64>,
    /// Log-normalization constant of the standard d-dimensional t density.
    log_norm: f64,
    dim: usize,
}

impl BananaTMixture {
    pub fn new(spec: BananaTMixtureSpec) -> Result<Self> {
        validate_weights(&spec.weights)?;
        if spec.dim < 2 {
            return Err(Error::InvalidSpec("banana mixture needs dimension >= 2".into()));
        }
        if !(spec.dof > 2.0) {
            return Err(Error::InvalidSpec("t degrees of freedom must exceed 2".into()));
        }
        if !spec.curvature.is_finite() {
            return Err(Error::InvalidSpec("curvature must be finite".into()));
        }
        if spec.centers.len() != spec.weights.len() {
            return Err(Error::InvalidSpec("one center per weight required".into()));
        }
        for c in &spec.centers {
            if c.len() != spec.dim {
                return Err(Error::InvalidSpec("center dimension mismatch".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec("centers must be finite".into()));
            }
        }
        let d = spec.dim as f64;
        let nu = spec.dof;
        let log_norm = ln_gamma(0.5 * (nu + d))
            - ln_gamma(0.5 * nu)
            - 0.5 * d * (nu * std::f64::consts::PI).ln();
        let log_weights = spec.weights.iter().map(|w| w.ln()).collect();
        let dim = spec.dim;
        Ok(Self {
            spec,
            log_weights,
            log_norm,
            dim,
        })
    }

    pub fn spec(&self) -> &BananaTMixtureSpec {
        &self.spec
    }

    /// `z = phi^{-1}(x - center)` for component `c`.
    fn pullback(&self, x: ArrayView1<f64>, c: usize) -> Array1<f64> {
        let b = self.spec.curvature;
        let center = &self.spec.centers[c];
        let mut z: Array1<f64> = x
            .iter()
            .zip(center.iter())
            .map(|(xi, mi)| xi - mi)
            .collect();
        let y1 = z[0];
        z[1] = z[1] - b * y1 * y1 + 100.0 * b;
        z
    }

    /// Log density of the standard t at `z`.
    fn t_log_density(&self, z: &Array1<f64>) -> f64 {
        let nu = self.spec.dof;
        let d = self.dim as f64;
        let q = z.dot(z);
        self.log_norm - 0.5 * (nu + d) * (q / nu).ln_1p()
    }

    fn component_log_joint(&self, x: ArrayView1<f64>) -> Vec<f64> {
        (0..self.spec.centers.len())
            .map(|c| {
                let z = self.pullback(x, c);
                self.log_weights[c] + self.t_log_density(&z)
            })
            .collect()
    }

    /// Draw one point: component by weight, scale-mixture t draw, then shear.
    pub(crate) fn sample_point<R: rand::Rng>(&self, rng: &mut R) -> Array1<f64> {
        use rand_distr::Distribution;
        let c = super::gaussian::sample_categorical(&self.spec.weights, rng);
        let nu = self.spec.dof;
        let chi2 = rand_distr::ChiSquared::new(nu).expect("valid dof");
        let w: f64 = chi2.sample(rng);
        let scale = (nu / w).sqrt();
        let mut z = Array1::zeros(self.dim);
        for j in 0..self.dim {
            let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            z[j] = g * scale;
        }
        let b = self.spec.curvature;
        let mut x = z.clone();
        x[1] = z[1] + b * z[0] * z[0] - 100.0 * b;
        for j in 0..self.dim {
            x[j] += self.spec.centers[c][j];
        }
        x
    }
}

impl TargetModel for BananaTMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_unnorm(&self, x: ArrayView1<f64>) -> f64 {
        log_sum_exp(&self.component_log_joint(x))
    }

    fn score(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let lj = self.component_log_joint(x);
        let lse = log_sum_exp(&lj);
        let nu = self.spec.dof;
        let d = self.dim as f64;
        let b = self.spec.curvature;
        let mut s = Array1::zeros(self.dim);
        for (c, &l) in lj.iter().enumerate() {
            let r = (l - lse).exp();
            if r == 0.0 {
                continue;
            }
            let z = self.pullback(x, c);
            let q = z.dot(&z);
            // grad_z log t = -(nu + d) z / (nu + ||z||^2), pulled back through
            // the shear: the first coordinate picks up -2 b y_1 times the
            // second component.
            let coeff = -(nu + d) / (nu + q);
            let g2 = coeff * z[1];
            let y1 = x[0] - self.spec.centers[c][0];
            for j in 0..self.dim {
                let mut gj = coeff * z[j];
                if j == 0 {
                    gj += -2.0 * b * y1 * g2;
                }
                s[j] += r * gj;
            }
        }
        s
    }

    fn hess_diag_log(&self, x: ArrayView1<f64>) -> Array1<f64> {
        // Central finite differences of the analytic score.
        let mut h = Array1::zeros(self.dim);
        let mut hi = x.to_owned();
        let mut lo = x.to_owned();
        for j in 0..self.dim {
            let step = 1e-4 * x[j].abs().max(1.0);
            hi[j] = x[j] + step;
            lo[j] = x[j] - step;
            let sh = self.score(hi.view());
            let sl = self.score(lo.view());
            h[j] = (sh[j] - sl[j]) / (2.0 * step);
            hi[j] = x[j];
            lo[j] = x[j];
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_mode(dim: usize, b: f64) -> BananaTMixture {
        let c1 = vec![0.0; dim];
        let mut c2 = vec![0.0; dim];
        c2[1] = 8.0;
        BananaTMixtureSpec {
            dim,
            curvature: b,
            dof: 7.0,
            centers: vec![c1, c2],
            weights: vec![0.25, 0.75],
        }
        .build()
        .unwrap()
    }

    #[test]
    fn first_score_component_vanishes_on_symmetry_axis() {
        let m = two_mode(3, 0.4);
        // Both centers have first coordinate 0 and the shear is even in y1,
        // so the density is symmetric in x1.
        let s = m.score(arr1(&[0.0, 3.0, -1.0]).view());
        assert!(s[0].abs() < 1e-12);
    }

    #[test]
    fn score_matches_finite_differences() {
        let m = two_mode(3, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = arr1(&[
                rng.random::<f64>() * 8.0 - 4.0,
                rng.random::<f64>() * 12.0 - 2.0,
                rng.random::<f64>() * 6.0 - 3.0,
            ]);
            let s = m.score(x.view());
            for j in 0..3 {
                let step = 1e-5 * x[j].abs().max(1.0);
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[j] += step;
                lo[j] -= step;
                let fd = (m.log_density_unnorm(hi.view()) - m.log_density_unnorm(lo.view()))
                    / (2.0 * step);
                assert_relative_eq!(s[j], fd, max_relative = 1e-4, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn hess_diag_consistent_with_score_differences() {
        let m = two_mode(2, 0.5);
        let x = arr1(&[1.2, -0.7]);
        let h = m.hess_diag_log(x.view());
        for j in 0..2 {
            let step = 1e-4 * x[j].abs().max(1.0);
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[j] += step;
            lo[j] -= step;
            let fd = (m.score(hi.view())[j] - m.score(lo.view())[j]) / (2.0 * step);
            assert_relative_eq!(h[j], fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_curvature_is_plain_t_mixture() {
        let m = two_mode(2, 0.0);
        let x = arr1(&[0.9, 2.3]);
        // Independent t-mixture formula.
        let nu = 7.0;
        let d = 2.0;
        let log_norm = ln_gamma(0.5 * (nu + d))
            - ln_gamma(0.5 * nu)
            - 0.5 * d * (nu * std::f64::consts::PI).ln();
        let comp = |center: [f64; 2], w: f64| {
            let dz = [x[0] - center[0], x[1] - center[1]];
            let q = dz[0] * dz[0] + dz[1] * dz[1];
            w.ln() + log_norm - 0.5 * (nu + d) * (1.0 + q / nu).ln()
        };
        let expected = {
            let a = comp([0.0, 0.0], 0.25);
            let b = comp([0.0, 8.0], 0.75);
            let mx = a.max(b);
            mx + ((a - mx).exp() + (b - mx).exp()).ln()
        };
        assert_relative_eq!(m.log_density_unnorm(x.view()), expected, max_relative = 1e-12);
    }

    #[test]
    fn density_normalizes_by_monte_carlo() {
        // Uniform-box Monte Carlo integral of exp(log_density) close to 1.
        let m = two_mode(2, 0.3);
        let (x_lo, x_hi) = (-25.0, 25.0);
        let (y_lo, y_hi) = (-45.0, 45.0);
        let area = (x_hi - x_lo) * (y_hi - y_lo);
        let n = 400_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = arr1(&[
                x_lo + (x_hi - x_lo) * rng.random::<f64>(),
                y_lo + (y_hi - y_lo) * rng.random::<f64>(),
            ]);
            let v = m.log_density_unnorm(x.view()).exp() * area;
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * se + 0.01,
            "integral {mean} not within 3 SE ({se}) of 1"
        );
    }

    #[test]
    fn rejects_bad_specs() {
        let bad_dof = BananaTMixtureSpec {
            dim: 2,
            curvature: 0.1,
            dof: 2.0,
            centers: vec![vec![0.0, 0.0]],
            weights: vec![1.0],
        };
        assert!(bad_dof.build().is_err());
        let bad_dim = BananaTMixtureSpec {
            dim: 1,
            curvature: 0.1,
            dof: 7.0,
            centers: vec![vec![0.0]],
            weights: vec![1.0],
        };
        assert!(bad_dim.build().is_err());
    }
}
