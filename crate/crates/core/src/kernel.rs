//! Score-based kernels.
//!
//! The base kernel is the inverse multi-quadratic (IMQ) kernel
//! `k(x, y) = (c + ||x - y||^2 / ell^2)^(-beta)`. Combining it with the score
//! `s_p = grad log p` through the Langevin operator yields the Stein kernel
//! `k_p`, which has a closed form for the IMQ base and only requires the
//! target density up to its normalization constant.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed seed for the median-heuristic subsample so bandwidths are
/// reproducible across runs.
const MEDIAN_SUBSAMPLE_SEED: u64 = 0x51ab_3e6d_9c01_77f4;

/// IMQ kernel parameters.
///
/// `c` is fixed to 1 by [`SteinKernelParams::new`]; every closed-form Stein
/// kernel path requires `c = 1`. A general `c` is only meaningful for plain
/// base-kernel evaluation and can be set with [`SteinKernelParams::with_c`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinKernelParams {
    /// Bandwidth `ell > 0`.
    pub ell: f64,
    /// Exponent `beta` in (0, 1).
    pub beta: f64,
    /// Offset `c > 0`; 1 on all closed-form paths.
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_c() -> f64 {
    1.0
}

impl SteinKernelParams {
    pub fn new(ell: f64, beta: f64) -> Result<Self> {
        Self::with_c(ell, beta, 1.0)
    }

    pub fn with_c(ell: f64, beta: f64, c: f64) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::InvalidKernelParams(format!(
                "bandwidth must be positive and finite, got {ell}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidKernelParams(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidKernelParams(format!(
                "c must be positive and finite, got {c}"
            )));
        }
        Ok(Self { ell, beta, c })
    }

    pub fn validate(&self) -> Result<()> {
        Self::with_c(self.ell, self.beta, self.c).map(|_| ())
    }
}

/// Value and first derivatives of a base-kernel evaluation.
#[derive(Debug, Clone)]
pub struct KernelEval {
    pub value: f64,
    /// Gradient with respect to the first argument.
    pub grad_x: Array1<f64>,
    /// Gradient with respect to the second argument (`-grad_x` for radial kernels).
    pub grad_y: Array1<f64>,
    /// Cross divergence `<grad_x, grad_y> k(x, y)`.
    pub cross_div: f64,
}

fn check_same_dim(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

fn sq_dist(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| {
            let t = a - b;
            t * t
        })
        .sum()
}

/// Evaluate the IMQ kernel together with its gradients and cross divergence.
pub fn imq_eval(
    x: ArrayView1<f64>,
    y: ArrayView1<f64>,
    params: &SteinKernelParams,
) -> Result<KernelEval> {
    check_same_dim(x, y)?;
    params.validate()?;
    if x.is_empty() {
        return Err(Error::InvalidInput("points must have dimension >= 1".into()));
    }
    let d = x.len() as f64;
    let ell2 = params.ell * params.ell;
    let beta = params.beta;
    let r2 = sq_dist(x, y);
    let u = params.c + r2 / ell2;
    let value = u.powf(-beta);
    let p1 = value / u; // u^(-beta-1)
    let p2 = p1 / u; // u^(-beta-2)
    let coeff = 2.0 * beta / ell2;
    // grad_y k = (2 beta / ell^2) (x - y) u^(-beta-1); grad_x = -grad_y.
    let grad_y: Array1<f64> = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| coeff * (a - b) * p1)
        .collect();
    let grad_x = grad_y.mapv(|v| -v);
    let cross_div = coeff * (d * p1 - 2.0 * (beta + 1.0) / ell2 * r2 * p2);
    Ok(KernelEval {
        value,
        grad_x,
        grad_y,
        cross_div,
    })
}

/// Langevin Stein kernel for the IMQ base kernel with `c = 1`.
///
/// Evaluation takes the scores of both arguments from the caller, so the
/// kernel itself is model agnostic. Construction validates the parameters
/// once; evaluation is infallible apart from dimension checks left to
/// `debug_assert`.
#[derive(Debug, Clone, Copy)]
pub struct LangevinSteinKernel {
    params: SteinKernelParams,
    inv_ell2: f64,
    two_beta_over_ell2: f64,
    four_bb1_over_ell4: f64,
    half_beta: bool,
}

impl LangevinSteinKernel {
    pub fn new(params: SteinKernelParams) -> Result<Self> {
        params.validate()?;
        if params.c != 1.0 {
            return Err(Error::UnsupportedC(params.c));
        }
        let ell2 = params.ell * params.ell;
        Ok(Self {
            params,
            inv_ell2: 1.0 / ell2,
            two_beta_over_ell2: 2.0 * params.beta / ell2,
            four_bb1_over_ell4: 4.0 * params.beta * (params.beta + 1.0) / (ell2 * ell2),
            half_beta: params.beta == 0.5,
        })
    }

    pub fn params(&self) -> &SteinKernelParams {
        &self.params
    }

    /// `u^(-beta)`, `u^(-beta-1)`, `u^(-beta-2)` with a sqrt fast path for
    /// the ubiquitous `beta = 1/2`.
    #[inline]
    fn powers(&self, u: f64) -> (f64, f64, f64) {
        if self.half_beta {
            let p0 = 1.0 / u.sqrt();
            let p1 = p0 / u;
            (p0, p1, p1 / u)
        } else {
            let p0 = u.powf(-self.params.beta);
            let p1 = p0 / u;
            (p0, p1, p1 / u)
        }
    }

    /// `k_p(x, y)` given the scores `sx = s_p(x)` and `sy = s_p(y)`.
    #[inline]
    pub fn eval(
        &self,
        x: ArrayView1<f64>,
        sx: ArrayView1<f64>,
        y: ArrayView1<f64>,
        sy: ArrayView1<f64>,
    ) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        debug_assert_eq!(x.len(), sx.len());
        debug_assert_eq!(y.len(), sy.len());
        let d = x.len() as f64;
        let mut r2 = 0.0;
        let mut score_cross = 0.0; // (sx - sy) . (x - y)
        let mut score_dot = 0.0; // sx . sy
        for i in 0..x.len() {
            let dx = x[i] - y[i];
            r2 += dx * dx;
            score_cross += (sx[i] - sy[i]) * dx;
            score_dot += sx[i] * sy[i];
        }
        let u = 1.0 + r2 * self.inv_ell2;
        let (p0, p1, p2) = self.powers(u);
        self.two_beta_over_ell2 * (d + score_cross) * p1 - self.four_bb1_over_ell4 * r2 * p2
            + score_dot * p0
    }

    /// Checked variant of [`eval`](Self::eval) for callers with untrusted shapes.
    pub fn eval_checked(
        &self,
        x: ArrayView1<f64>,
        sx: ArrayView1<f64>,
        y: ArrayView1<f64>,
        sy: ArrayView1<f64>,
    ) -> Result<f64> {
        check_same_dim(x, y)?;
        check_same_dim(x, sx)?;
        check_same_dim(y, sy)?;
        Ok(self.eval(x, sx, y, sy))
    }

    /// `k_p(x, x) = 2 beta d / ell^2 + ||s_p(x)||^2`.
    #[inline]
    pub fn diag(&self, sx: ArrayView1<f64>) -> f64 {
        let d = sx.len() as f64;
        let norm2: f64 = sx.iter().map(|v| v * v).sum();
        self.two_beta_over_ell2 * d + norm2
    }

    /// Upper bound on `k_p(x, y)` when both score norms are at most `s0`.
    pub fn low_score_bound(&self, dim: usize, s0: f64) -> f64 {
        let d = dim as f64;
        self.two_beta_over_ell2 * d + 2.0 * self.params.beta * s0 / self.params.ell + s0 * s0
    }
}

/// Stein kernel diagonal `2 beta d / ell^2 + ||sx||^2` (requires `c = 1`).
pub fn stein_kernel_diag(sx: ArrayView1<f64>, params: &SteinKernelParams) -> Result<f64> {
    let kernel = LangevinSteinKernel::new(*params)?;
    Ok(kernel.diag(sx))
}

/// Langevin Stein kernel evaluation as a free function (requires `c = 1`).
pub fn langevin_stein_kernel(
    x: ArrayView1<f64>,
    sx: ArrayView1<f64>,
    y: ArrayView1<f64>,
    sy: ArrayView1<f64>,
    params: &SteinKernelParams,
) -> Result<f64> {
    let kernel = LangevinSteinKernel::new(*params)?;
    kernel.eval_checked(x, sx, y, sy)
}

/// Median of the pairwise Euclidean distances of `points`.
///
/// Distances are raw (not squared). For more than `cap` points a uniform
/// subsample of `cap` points is drawn with a fixed internal seed, keeping the
/// cost at `O(cap^2)` and the result deterministic. When every pairwise
/// distance is zero the heuristic is undefined; a fallback bandwidth of 1 is
/// returned and a warning is logged so degenerate chains still run.
pub fn median_heuristic(points: ArrayView2<f64>, cap: usize) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(
            "median heuristic needs at least 2 points".into(),
        ));
    }
    if cap < 2 {
        return Err(Error::InvalidInput(
            "median heuristic subsample cap must be at least 2".into(),
        ));
    }
    let indices: Vec<usize> = if n > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(MEDIAN_SUBSAMPLE_SEED);
        rand::seq::index::sample(&mut rng, n, cap).into_vec()
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(indices.len() * (indices.len() - 1) / 2);
    for (a, &i) in indices.iter().enumerate() {
        for &j in indices.iter().skip(a + 1) {
            dists.push(sq_dist(points.row(i), points.row(j)).sqrt());
        }
    }
    if dists.iter().all(|&d| d == 0.0) {
        log::warn!("median heuristic: all pairwise distances are zero, falling back to ell = 1");
        return Ok(1.0);
    }
    dists.sort_unstable_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    Ok(median)
}
