//! Declarative experiment configuration (TOML). Unknown keys are rejected.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use steinthin::targets::ComponentVariance;
use steinthin::{
    BananaTMixture, BananaTMixtureSpec, GaussianMixture, GaussianMixtureSpec, SteinKernelParams,
};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinning: Option<ThinningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_sweep: Option<WeightSweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logistic: Option<LogisticConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serialize resolved config")
    }

    fn validate(&self) -> Result<()> {
        match self.experiment.kind {
            ExperimentKind::ThinEval => {
                if self.target.is_none() || self.sampler.is_none() || self.thinning.is_none() {
                    bail!("thin_eval experiments need [target], [sampler], and [thinning]");
                }
            }
            ExperimentKind::WeightSweep => {
                if self.target.is_none() || self.weight_sweep.is_none() {
                    bail!("weight_sweep experiments need [target] and [weight_sweep]");
                }
            }
            ExperimentKind::Logistic => {
                if self.logistic.is_none() {
                    bail!("logistic experiments need [logistic]");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentMeta {
    pub name: String,
    #[serde(default)]
    pub kind: ExperimentKind,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_repeats() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    ThinEval,
    WeightSweep,
    Logistic,
}

/// Target distribution. `kind` selects which of the optional field groups is
/// required.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    // Gaussian mixture fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variances: Option<Vec<ComponentVariance>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    // Banana mixture fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dof: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    GaussianMixture,
    BananaMixture,
}

/// A built target, either flavor.
pub enum BuiltTarget {
    Gaussian(GaussianMixture),
    Banana(BananaTMixture),
}

impl BuiltTarget {
    pub fn model(&self) -> &dyn steinthin::TargetModel {
        match self {
            BuiltTarget::Gaussian(g) => g,
            BuiltTarget::Banana(b) => b,
        }
    }

    pub fn dim(&self) -> usize {
        self.model().dim()
    }
}

impl TargetConfig {
    pub fn build(&self) -> Result<BuiltTarget> {
        match self.kind {
            TargetKind::GaussianMixture => {
                let spec = GaussianMixtureSpec {
                    means: self
                        .means
                        .clone()
                        .context("gaussian_mixture target needs `means`")?,
                    variances: self
                        .variances
                        .clone()
                        .context("gaussian_mixture target needs `variances`")?,
                    weights: self
                        .weights
                        .clone()
                        .context("gaussian_mixture target needs `weights`")?,
                };
                Ok(BuiltTarget::Gaussian(spec.build()?))
            }
            TargetKind::BananaMixture => {
                let spec = BananaTMixtureSpec {
                    dim: self.dim.context("banana_mixture target needs `dim`")?,
                    curvature: self
                        .curvature
                        .context("banana_mixture target needs `curvature`")?,
                    dof: self.dof.unwrap_or(7.0),
                    centers: self
                        .centers
                        .clone()
                        .context("banana_mixture target needs `centers`")?,
                    weights: self
                        .weights
                        .clone()
                        .context("banana_mixture target needs `weights`")?,
                };
                Ok(BuiltTarget::Banana(spec.build()?))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Sample size for exact sampling; chain length for MALA.
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(default = "default_one")]
    pub n_chains: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exact,
    Mala,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinningConfig {
    /// Methods run by `experiment`; `thin` uses the first entry unless
    /// `--method` overrides it.
    #[serde(default = "default_methods")]
    pub methods: Vec<ThinningMethod>,
    pub m: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub bandwidth: BandwidthSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
    /// Median-heuristic subsample cap.
    #[serde(default = "default_cap")]
    pub median_cap: usize,
}

fn default_methods() -> Vec<ThinningMethod> {
    vec![ThinningMethod::St, ThinningMethod::Rst]
}

fn default_beta() -> f64 {
    0.5
}

fn default_cap() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinningMethod {
    St,
    Rst,
}

impl ThinningMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ThinningMethod::St => "st",
            ThinningMethod::Rst => "rst",
        }
    }
}

impl std::str::FromStr for ThinningMethod {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "st" => Ok(ThinningMethod::St),
            "rst" => Ok(ThinningMethod::Rst),
            other => bail!("unknown thinning method {other:?} (expected st or rst)"),
        }
    }
}

/// Bandwidth: the string "median" or a fixed positive number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSpec {
    Named(String),
    Fixed(f64),
}

impl Default for BandwidthSpec {
    fn default() -> Self {
        BandwidthSpec::Named("median".into())
    }
}

impl BandwidthSpec {
    pub fn resolve(&self, points: ndarray::ArrayView2<f64>, cap: usize) -> Result<f64> {
        match self {
            BandwidthSpec::Fixed(v) if *v > 0.0 => Ok(*v),
            BandwidthSpec::Fixed(v) => bail!("bandwidth must be positive, got {v}"),
            BandwidthSpec::Named(s) if s == "median" => {
                Ok(steinthin::median_heuristic(points, cap)?)
            }
            BandwidthSpec::Named(s) => bail!("unknown bandwidth mode {s:?} (expected \"median\")"),
        }
    }
}

/// Entropic strength: one of the rate strings "1/m", "1/m^2", "1/log m",
/// or a fixed nonnegative number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Rate(String),
    Fixed(f64),
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Rate("1/m".into())
    }
}

impl LambdaSpec {
    pub fn resolve(&self, m: usize) -> Result<f64> {
        let m = m as f64;
        match self {
            LambdaSpec::Fixed(v) if *v >= 0.0 => Ok(*v),
            LambdaSpec::Fixed(v) => bail!("lambda must be nonnegative, got {v}"),
            LambdaSpec::Rate(s) => match s.as_str() {
                "1/m" => Ok(1.0 / m),
                "1/m^2" => Ok(1.0 / (m * m)),
                "1/log m" | "1/log(m)" => {
                    if m <= 1.0 {
                        bail!("1/log m needs m > 1");
                    }
                    Ok(1.0 / m.ln())
                }
                other => bail!(
                    "unknown lambda rate {other:?} (expected \"1/m\", \"1/m^2\", or \"1/log m\")"
                ),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            LambdaSpec::Rate(s) => s.clone(),
            LambdaSpec::Fixed(v) => format!("{v}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_centers: Option<Vec<Vec<f64>>>,
    /// Exact draws for the MMD reference sample; 0 disables the MMD metric.
    #[serde(default)]
    pub mmd_reference_n: usize,
    #[serde(default)]
    pub mmd_unbiased: bool,
    /// Count selected particles inside the saddle band `|x1| < z_max`
    /// (symmetric two-component Gaussian targets only).
    #[serde(default)]
    pub saddle_band: bool,
}

impl EvaluationConfig {
    pub fn centers_matrix(&self) -> Option<Array2<f64>> {
        self.mode_centers.as_ref().map(|c| {
            let k = c.len();
            let d = c.first().map_or(0, |r| r.len());
            let flat: Vec<f64> = c.iter().flatten().copied().collect();
            Array2::from_shape_vec((k, d), flat).expect("rectangular centers")
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSweepConfig {
    #[serde(default = "default_grid_start")]
    pub grid_start: f64,
    #[serde(default = "default_grid_end")]
    pub grid_end: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Total cluster points per repeat (split evenly between modes).
    pub n: usize,
    /// Per-mode truncation radius in units of the mode standard deviation.
    #[serde(default = "default_trunc")]
    pub truncation_radius_sds: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Explicit strength grid for the lambda search; when absent a log grid
    /// over `[lambda_grid_start, lambda_grid_end]` is generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default = "default_lambda_start")]
    pub lambda_grid_start: f64,
    #[serde(default = "default_lambda_end")]
    pub lambda_grid_end: f64,
    #[serde(default = "default_lambda_points")]
    pub lambda_grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_w: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub bandwidth: BandwidthSpec,
}

fn default_grid_start() -> f64 {
    0.1
}

fn default_grid_end() -> f64 {
    0.9
}

fn default_grid_step() -> f64 {
    0.05
}

fn default_trunc() -> f64 {
    2.0
}

fn default_lambda_start() -> f64 {
    1e-4
}

fn default_lambda_end() -> f64 {
    10.0
}

fn default_lambda_points() -> usize {
    121
}

impl WeightSweepConfig {
    /// Strength grid for the lambda search.
    pub fn lambdas(&self) -> Vec<f64> {
        if let Some(explicit) = &self.lambda_grid {
            return explicit.clone();
        }
        let k = self.lambda_grid_points.max(2);
        let (lo, hi) = (self.lambda_grid_start.ln(), self.lambda_grid_end.ln());
        (0..k)
            .map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp())
            .collect()
    }

    pub fn grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut w = self.grid_start;
        while w <= self.grid_end + 1e-12 {
            grid.push((w * 1e9).round() / 1e9);
            w += self.grid_step;
        }
        grid
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticConfig {
    pub dataset: String,
    pub label_column: String,
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_one")]
    pub n_repeats: usize,
    #[serde(default = "default_step_sizes")]
    pub step_sizes: Vec<f64>,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    pub m: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_one_f")]
    pub prior_a: f64,
    #[serde(default = "default_one_f")]
    pub prior_b: f64,
}

fn default_folds() -> usize {
    10
}

fn default_step_sizes() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 0.5]
}

fn default_steps() -> usize {
    10_000
}

fn default_chains() -> usize {
    4
}

fn default_true() -> bool {
    true
}

fn default_one_f() -> f64 {
    1.0
}

/// Kernel parameters for a resolved bandwidth.
pub fn kernel_params(ell: f64, beta: f64) -> Result<SteinKernelParams> {
    Ok(SteinKernelParams::new(ell, beta)?)
}
