//! Post-processing of MCMC outputs by greedy minimization of the kernelized
//! Stein discrepancy (KSD).
//!
//! The library provides:
//!
//! - [`kernel`]: the IMQ base kernel, the closed-form Langevin Stein kernel,
//!   and the median-heuristic bandwidth;
//! - [`targets`]: Gaussian mixtures, t-tailed banana mixtures, and Bayesian
//!   logistic posteriors exposing log density, score, and curvature;
//! - [`thinning`]: KSD / entropic-KSD / Laplacian-corrected KSD estimators,
//!   greedy Stein thinning, and its regularized variant (entropic penalty
//!   plus truncated-Laplacian correction);
//! - [`samplers`]: exact mixture sampling and MALA chains;
//! - [`diagnostics`]: energy-distance MMD, mode proportions, spurious-minimum
//!   threshold calculators, and the two-cluster weight sweep;
//! - [`logistic`]: dataset ingestion, stratified cross-validation, posterior
//!   predictive scoring, and AUC for the logistic-regression experiment;
//! - [`laplacian`]: an experimental Stein kernel built from a second-order
//!   operator on the raw density scale;
//! - [`io`]: plain-CSV serialization of samples, selections, and traces.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernel;
pub mod laplacian;
pub mod logistic;
pub mod samplers;
pub mod targets;
pub mod thinning;

pub use diagnostics::{
    energy_mmd, energy_mmd_unbiased, lambda_search, mode_proportions, pathology_bounds,
    weight_sweep, MetricReport, PathologyBounds, WeightSweepResult,
};
pub use error::{Error, Result};
pub use laplacian::LaplacianSteinKernel;
pub use logistic::{
    auc, load_csv_dataset, posterior_predictive, run_logistic_experiment, BandwidthMode, CvPlan,
    Dataset, LogisticRunConfig, Standardizer,
};
pub use kernel::{
    imq_eval, langevin_stein_kernel, median_heuristic, stein_kernel_diag, KernelEval,
    LangevinSteinKernel, SteinKernelParams,
};
pub use samplers::{exact_mixture_sample, mala_chains, mala_sample, ChainConfig, SampleMeta, SampleSet};
pub use targets::{
    logistic_posterior_model, BananaTMixture, BananaTMixtureSpec, GaussianMixture,
    GaussianMixtureSpec, InterceptPrior, LogisticPosterior, TargetModel,
};
pub use thinning::{
    entropic_ksd_squared, greedy_bound_check, ksd_squared, ksd_squared_weighted, l_ksd_squared,
    regularized_stein_thin, stein_thin, CandidatePool, GreedyBoundCheck, ThinningResult,
};
