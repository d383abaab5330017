//! Experimental Stein kernel built from the second-order operator
//! `g -> Laplacian(p g) / p`.
//!
//! Unlike the Langevin Stein kernel this one needs the raw density, its
//! gradient, and its diagonal curvature, so it is restricted to targets
//! implementing [`DensityCurvature`] (Gaussian mixtures). It is exposed only
//! through the pathology-exploration CLI path.

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::kernel::SteinKernelParams;
use crate::targets::DensityCurvature;

/// Stein kernel for the density-scale Laplacian operator with the IMQ base
/// kernel fixed at `beta = 1/2`, `c = 1`.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianSteinKernel {
    ell2: f64,
}

impl LaplacianSteinKernel {
    pub fn new(params: &SteinKernelParams) -> Result<Self> {
        params.validate()?;
        if params.c != 1.0 {
            return Err(Error::UnsupportedC(params.c));
        }
        if params.beta != 0.5 {
            return Err(Error::InvalidKernelParams(
                "the second-order Stein kernel is derived for beta = 1/2".into(),
            ));
        }
        Ok(Self {
            ell2: params.ell * params.ell,
        })
    }

    /// Kernel derivative stack for `k(x,y) = (1 + ||x-y||^2/ell^2)^(-1/2)`:
    /// value, d/dy_j, d^2/dy_j^2 (= d^2/dx_j^2), d^2/dx_j dy_j,
    /// d^3/dx_j^2 dy_j, and d^4/dx_j^2 dy_j^2, as functions of the
    /// coordinate difference.
    #[inline]
    fn stack(&self, k: f64, dj: f64) -> KernelStack {
        let l2 = self.ell2;
        let l4 = l2 * l2;
        let l6 = l4 * l2;
        let l8 = l4 * l4;
        let k2 = k * k;
        let k3 = k2 * k;
        let k5 = k3 * k2;
        let k7 = k5 * k2;
        let k9 = k7 * k2;
        let dj2 = dj * dj;
        let dy = k3 * dj / l2;
        let dyy = -k3 / l2 + 3.0 * k5 * dj2 / l4;
        let dxy = k3 / l2 - 3.0 * k5 * dj2 / l4;
        let dxxy = -9.0 * k5 * dj / l4 + 15.0 * k7 * dj2 * dj / l6;
        let dxxyy = 9.0 * k5 / l4 - 90.0 * k7 * dj2 / l6 + 105.0 * k9 * dj2 * dj2 / l8;
        KernelStack {
            value: k,
            dy,
            dx: -dy,
            dyy,
            dxx: dyy,
            dxy,
            dxxy,
            dxyy: -dxxy,
            dxxyy,
        }
    }

    /// Evaluate the Stein kernel at `(x, y)` under `model`.
    pub fn eval<M: DensityCurvature>(
        &self,
        model: &M,
        x: ArrayView1<f64>,
        y: ArrayView1<f64>,
    ) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: x.len(),
            });
        }
        let px = model.density(x);
        let py = model.density(y);
        if px == 0.0 || py == 0.0 {
            return Err(Error::SingularDensity);
        }
        let gx = model.density_grad(x);
        let gy = model.density_grad(y);
        let hx = model.density_hess_diag(x);
        let hy = model.density_hess_diag(y);

        let r2: f64 = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let k = 1.0 / (1.0 + r2 / self.ell2).sqrt();

        let mut total = 0.0;
        for j in 0..x.len() {
            let s = self.stack(k, x[j] - y[j]);
            let num = hx[j] * hy[j] * s.value
                + 2.0 * hx[j] * gy[j] * s.dy
                + py * hx[j] * s.dyy
                + 2.0 * gx[j] * hy[j] * s.dx
                + 4.0 * gx[j] * gy[j] * s.dxy
                + 2.0 * py * gx[j] * s.dxyy
                + px * hy[j] * s.dxx
                + 2.0 * px * gy[j] * s.dxxy
                + px * py * s.dxxyy;
            total += num;
        }
        Ok(total / (px * py))
    }
}

struct KernelStack {
    value: f64,
    dy: f64,
    dx: f64,
    dyy: f64,
    dxx: f64,
    dxy: f64,
    dxxy: f64,
    dxyy: f64,
    dxxyy: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::exact_mixture_sample;
    use crate::targets::{GaussianMixture, GaussianMixtureSpec};
    use approx::assert_relative_eq;
    use ndarray::arr1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(ell: f64) -> LaplacianSteinKernel {
        LaplacianSteinKernel::new(&SteinKernelParams::new(ell, 0.5).unwrap()).unwrap()
    }

    fn gm_pair() -> GaussianMixture {
        GaussianMixtureSpec::symmetric_pair(2.0, 1.0, 0.5, 2).build().unwrap()
    }

    #[test]
    fn rejects_non_half_beta() {
        let params = SteinKernelParams::new(1.0, 0.4).unwrap();
        assert!(LaplacianSteinKernel::new(&params).is_err());
    }

    #[test]
    fn symmetric_on_random_inputs() {
        let gm = gm_pair();
        let k = kernel(1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = arr1(&[rng.random::<f64>() * 6.0 - 3.0, rng.random::<f64>() * 4.0 - 2.0]);
            let y = arr1(&[rng.random::<f64>() * 6.0 - 3.0, rng.random::<f64>() * 4.0 - 2.0]);
            let ab = k.eval(&gm, x.view(), y.view()).unwrap();
            let ba = k.eval(&gm, y.view(), x.view()).unwrap();
            assert_relative_eq!(ab, ba, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_stack_matches_finite_differences() {
        // 1-d check of every entry of the derivative stack: each level is
        // differentiated numerically from the (already validated) level below.
        let ell = 1.4;
        let k = kernel(ell);
        let base = |x: f64, y: f64| {
            let d = x - y;
            1.0 / (1.0 + d * d / (ell * ell)).sqrt()
        };
        let stack_at = |x: f64, y: f64| {
            let v = base(x, y);
            k.stack(v, x - y)
        };
        let h = 1e-5;
        let (x, y) = (0.4, -0.3);
        let s = stack_at(x, y);
        let fd_dy = (base(x, y + h) - base(x, y - h)) / (2.0 * h);
        assert_relative_eq!(s.dy, fd_dy, max_relative = 1e-5);
        assert_relative_eq!(s.dx, -fd_dy, max_relative = 1e-5);
        let fd_dyy = (base(x, y + h) - 2.0 * base(x, y) + base(x, y - h)) / (h * h);
        assert_relative_eq!(s.dyy, fd_dyy, max_relative = 1e-4);
        let fd_dxy = (stack_at(x + h, y).dy - stack_at(x - h, y).dy) / (2.0 * h);
        assert_relative_eq!(s.dxy, fd_dxy, max_relative = 1e-5);
        let fd_dxxy = (stack_at(x + h, y).dxy - stack_at(x - h, y).dxy) / (2.0 * h);
        assert_relative_eq!(s.dxxy, fd_dxxy, max_relative = 1e-5);
        let fd_dxyy = (stack_at(x, y + h).dxy - stack_at(x, y - h).dxy) / (2.0 * h);
        assert_relative_eq!(s.dxyy, fd_dxyy, max_relative = 1e-5);
        let fd_dxxyy = (stack_at(x, y + h).dxxy - stack_at(x, y - h).dxxy) / (2.0 * h);
        assert_relative_eq!(s.dxxyy, fd_dxxyy, max_relative = 1e-5);
    }

    #[test]
    fn assembled_kernel_matches_finite_difference_operator() {
        // Independent oracle built on the identity
        //   p(x) p(y) k_p(x, y) = d^2/dx^2 d^2/dy^2 [p(x) p(y) k(x, y)]
        // in one dimension: a 9-point mixed stencil on plain products, no
        // analytic derivatives involved.
        let gm = GaussianMixtureSpec::isotropic(vec![vec![0.0]], vec![1.0], vec![1.0])
            .build()
            .unwrap();
        let ell = 1.0;
        let k = kernel(ell);
        let p = |x: f64| crate::targets::DensityCurvature::density(&gm, arr1(&[x]).view());
        let g = |x: f64, y: f64| {
            let d = x - y;
            p(x) * p(y) / (1.0 + d * d / (ell * ell)).sqrt()
        };
        let h = 2e-3;
        let w = [1.0, -2.0, 1.0];
        for (x, y) in [(0.2, -0.4), (1.0, 0.5), (-0.8, 0.9)] {
            let mut stencil = 0.0;
            for (a, wa) in [-1.0, 0.0, 1.0].iter().zip(w.iter()) {
                for (b, wb) in [-1.0, 0.0, 1.0].iter().zip(w.iter()) {
                    stencil += wa * wb * g(x + a * h, y + b * h);
                }
            }
            let fd = stencil / (h * h * h * h) / (p(x) * p(y));
            let got = k.eval(&gm, arr1(&[x]).view(), arr1(&[y]).view()).unwrap();
            assert_relative_eq!(got, fd, max_relative = 1e-3, epsilon = 1e-5);
        }
    }

    #[test]
    fn monte_carlo_stein_identity() {
        let gm = gm_pair();
        let k = kernel(1.0);
        let y0 = arr1(&[0.5, -0.3]);
        let n = 100_000;
        let draws = exact_mixture_sample(&gm, n, 31);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for row in draws.points.rows() {
            let v = k.eval(&gm, row, y0.view()).unwrap();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            mean.abs() < 4.0 * se,
            "Stein identity violated: mean {mean}, se {se}"
        );
    }

    #[test]
    fn singular_density_is_an_error() {
        let gm = gm_pair();
        let k = kernel(1.0);
        let far = arr1(&[1e6, 0.0]);
        let near = arr1(&[0.0, 0.0]);
        assert!(matches!(
            k.eval(&gm, far.view(), near.view()),
            Err(Error::SingularDensity)
        ));
    }
}
