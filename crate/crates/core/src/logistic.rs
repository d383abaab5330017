//! Bayesian logistic-regression experiment: dataset ingestion, stratified
//! cross-validation, posterior sampling, thinning, predictive scoring, and
//! AUC.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::diagnostics::MetricReport;
use crate::error::{Error, Result};
use crate::kernel::{median_heuristic, SteinKernelParams};
use crate::samplers::{mala_chains, ChainConfig};
use crate::targets::{LogisticPosterior, TargetModel};
use crate::thinning::{regularized_stein_thin, stein_thin, CandidatePool};

/// A binary-classification dataset with numeric features.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub name: String,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Load a CSV dataset.
///
/// `label_column` is either a header name (the file must then start with a
/// header row) or a 0-based column index for headerless files. Labels may be
/// any two distinct values; the lower one (numeric, falling back to
/// lexicographic order) maps to 0. With `standardize` the full feature matrix
/// is standardized per column at load time; cross-validation runs use
/// per-fold standardization instead, fitted on each training fold.
pub fn load_csv_dataset(path: &Path, label_column: &str, standardize: bool) -> Result<Dataset> {
    let by_index = label_column.parse::<usize>().ok();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(by_index.is_none())
        .flexible(false)
        .from_path(path)?;

    let label_idx = match by_index {
        Some(i) => i,
        None => reader
            .headers()?
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| Error::Dataset(format!("label column {label_column:?} not found")))?,
    };

    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if label_idx >= record.len() {
            return Err(Error::Dataset(format!(
                "label column index {label_idx} out of range on row {}",
                i + 1
            )));
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.trim().to_string());
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::Dataset(format!("non-numeric cell {:?} on row {}", cell, i + 1))
                })?;
                if !v.is_finite() {
                    return Err(Error::Dataset(format!("non-finite cell on row {}", i + 1)));
                }
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dataset("ragged feature rows".into()));
    }

    let mut distinct: Vec<String> = raw_labels.clone();
    distinct.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    });
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::Dataset(format!(
            "labels must take exactly two distinct values, found {}",
            distinct.len()
        )));
    }
    let labels: Vec<u8> = raw_labels
        .iter()
        .map(|l| if *l == distinct[0] { 0 } else { 1 })
        .collect();

    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let mut features = Array2::from_shape_vec((labels.len(), d), flat)
        .map_err(|e| Error::Dataset(e.to_string()))?;
    if standardize {
        let all: Vec<usize> = (0..features.nrows()).collect();
        let scaler = Standardizer::fit(features.view(), &all);
        features = scaler.transform_matrix(features.view());
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(Dataset {
        features,
        labels,
        name,
    })
}

/// Per-column standardization fitted on a set of training rows. Columns with
/// zero variance are centered only.
#[derive(Debug, Clone)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    pub fn fit(features: ArrayView2<f64>, rows: &[usize]) -> Self {
        let d = features.ncols();
        let n = rows.len().max(1) as f64;
        let mut mean = Array1::zeros(d);
        for &i in rows {
            mean = mean + features.row(i);
        }
        mean.mapv_inplace(|v| v / n);
        let mut var = Array1::zeros(d);
        for &i in rows {
            for j in 0..d {
                let t = features[(i, j)] - mean[j];
                var[j] += t * t;
            }
        }
        let std = var.mapv(|v: f64| {
            let s = (v / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        });
        Self { mean, std }
    }

    pub fn transform_rows(&self, features: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
        let d = features.ncols();
        let mut out = Array2::zeros((rows.len(), d));
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..d {
                out[(r, j)] = (features[(i, j)] - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn transform_matrix(&self, features: ArrayView2<f64>) -> Array2<f64> {
        let all: Vec<usize> = (0..features.nrows()).collect();
        self.transform_rows(features, &all)
    }
}

/// Stratified k-fold plan with repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self {
            n_folds: 10,
            n_repeats: 10,
            seed: 0,
        }
    }
}

impl CvPlan {
    /// Fold index sets for one repeat: a partition of `0..labels.len()`,
    /// stratified so per-fold class ratios stay within one sample of global.
    pub fn folds(&self, labels: &[u8], repeat: usize) -> Result<Vec<Vec<usize>>> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        if self.n_folds < 2 {
            return Err(Error::InvalidInput("need at least two folds".into()));
        }
        if labels.len() < self.n_folds {
            return Err(Error::InvalidInput("more folds than samples".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
            self.seed.wrapping_add(repeat as u64),
        );
        let mut folds = vec![Vec::new(); self.n_folds];
        for class in [0u8, 1] {
            let mut idx: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == class)
                .map(|(i, _)| i)
                .collect();
            idx.shuffle(&mut rng);
            for (pos, i) in idx.into_iter().enumerate() {
                folds[pos % self.n_folds].push(i);
            }
        }
        Ok(folds)
    }
}

/// Posterior-predictive probability `p(y = 1 | x*)` averaged over sampled
/// parameter vectors `(b0, beta)`.
pub fn posterior_predictive(thetas: ArrayView2<f64>, x_star: ArrayView1<f64>) -> Result<f64> {
    if thetas.nrows() == 0 {
        return Err(Error::EmptySelection);
    }
    if thetas.ncols() != x_star.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: x_star.len() + 1,
            got: thetas.ncols(),
        });
    }
    let mut sum = 0.0;
    for theta in thetas.rows() {
        let eta = theta[0]
            + theta
                .iter()
                .skip(1)
                .zip(x_star.iter())
                .map(|(b, x)| b * x)
                .sum::<f64>();
        sum += sigmoid(eta);
    }
    Ok(sum / thetas.nrows() as f64)
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Area under the ROC curve via the Mann-Whitney rank statistic; tied scores
/// contribute 1/2.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("scores must not be NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Dataset("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mid-ranks over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += mid_rank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// How the kernel bandwidth is chosen per thinning run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    Median,
    Fixed(f64),
}

/// Configuration of the full logistic-regression pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticRunConfig {
    pub prior_a: f64,
    pub prior_b: f64,
    /// MALA step sizes to sweep; the best AUC per method is reported.
    pub step_sizes: Vec<f64>,
    pub n_steps: usize,
    pub n_chains: usize,
    /// Thinning size.
    pub m: usize,
    pub beta: f64,
    pub bandwidth: BandwidthMode,
    /// Entropic strength for the regularized run; defaults to `1/m`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl Default for LogisticRunConfig {
    fn default() -> Self {
        Self {
            prior_a: 1.0,
            prior_b: 1.0,
            step_sizes: vec![0.01, 0.05, 0.1, 0.5],
            n_steps: 10_000,
            n_chains: 4,
            m: 300,
            beta: 0.5,
            bandwidth: BandwidthMode::Median,
            lambda: None,
            standardize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct FoldKey {
    repeat: usize,
    fold: usize,
    eps_idx: usize,
}

/// Cross-validated AUC comparison of plain and regularized thinning.
///
/// Per fold and step size: sample the train-fold posterior with independent
/// MALA chains, thin the pooled states both ways, score the test fold with
/// the posterior predictive, and compute AUC. Means and standard deviations
/// aggregate over folds and repeats; the reported headline numbers take the
/// best step size per method.
pub fn run_logistic_experiment(
    dataset: &Dataset,
    cv: &CvPlan,
    cfg: &LogisticRunConfig,
) -> Result<MetricReport> {
    if dataset.n() == 0 {
        return Err(Error::Dataset("empty dataset".into()));
    }
    if cfg.step_sizes.is_empty() {
        return Err(Error::InvalidInput("need at least one step size".into()));
    }
    let lambda = cfg.lambda.unwrap_or(1.0 / cfg.m as f64);

    // Enumerate work items so folds and repeats fan out over the pool.
    let mut items: Vec<FoldKey> = Vec::new();
    for repeat in 0..cv.n_repeats {
        for fold in 0..cv.n_folds {
            for eps_idx in 0..cfg.step_sizes.len() {
                items.push(FoldKey {
                    repeat,
                    fold,
                    eps_idx,
                });
            }
        }
    }

    let fold_sets: Vec<Vec<Vec<usize>>> = (0..cv.n_repeats)
        .map(|r| cv.folds(&dataset.labels, r))
        .collect::<Result<_>>()?;

    let results: Vec<Result<(FoldKey, f64, f64)>> = items
        .par_iter()
        .map(|key| {
            let (st_auc, rst_auc) = run_fold(dataset, cfg, &fold_sets[key.repeat], key, lambda)?;
            Ok((*key, st_auc, rst_auc))
        })
        .collect();

    let mut per_eps_st: Vec<Vec<f64>> = vec![Vec::new(); cfg.step_sizes.len()];
    let mut per_eps_rst: Vec<Vec<f64>> = vec![Vec::new(); cfg.step_sizes.len()];
    for r in results {
        let (key, st, rst) = r?;
        per_eps_st[key.eps_idx].push(st);
        per_eps_rst[key.eps_idx].push(rst);
    }

    let mut report = MetricReport::new(format!("logistic-{}", dataset.name));
    let mut best_st = (f64::NEG_INFINITY, 0usize);
    let mut best_rst = (f64::NEG_INFINITY, 0usize);
    for (i, eps) in cfg.step_sizes.iter().enumerate() {
        let (m_st, s_st) = mean_sd(&per_eps_st[i]);
        let (m_rst, s_rst) = mean_sd(&per_eps_rst[i]);
        report.insert(format!("st_auc_mean_eps{eps}"), m_st);
        report.insert(format!("st_auc_sd_eps{eps}"), s_st);
        report.insert(format!("rst_auc_mean_eps{eps}"), m_rst);
        report.insert(format!("rst_auc_sd_eps{eps}"), s_rst);
        if m_st > best_st.0 {
            best_st = (m_st, i);
        }
        if m_rst > best_rst.0 {
            best_rst = (m_rst, i);
        }
    }
    report.insert("st_auc_mean", best_st.0);
    report.insert("st_auc_sd", mean_sd(&per_eps_st[best_st.1]).1);
    report.insert("rst_auc_mean", best_rst.0);
    report.insert("rst_auc_sd", mean_sd(&per_eps_rst[best_rst.1]).1);
    report.insert("st_best_step_size", cfg.step_sizes[best_st.1]);
    report.insert("rst_best_step_size", cfg.step_sizes[best_rst.1]);
    report.insert("m", cfg.m as f64);
    report.note("dataset", dataset.name.clone());
    report.note("lambda", format!("{lambda}"));
    if cfg.m > cfg.n_chains * cfg.n_steps {
        report.note(
            "m_exceeds_pool",
            "thinning size exceeds pooled chain length; repeated selections fill the quota",
        );
    }
    Ok(report)
}

fn run_fold(
    dataset: &Dataset,
    cfg: &LogisticRunConfig,
    folds: &[Vec<usize>],
    key: &FoldKey,
    lambda: f64,
) -> Result<(f64, f64)> {
    let test_idx = &folds[key.fold];
    let train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != key.fold)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();

    let (train_x, test_x) = if cfg.standardize {
        let scaler = Standardizer::fit(dataset.features.view(), &train_idx);
        (
            scaler.transform_rows(dataset.features.view(), &train_idx),
            scaler.transform_rows(dataset.features.view(), test_idx),
        )
    } else {
        (
            select_rows(dataset.features.view(), &train_idx),
            select_rows(dataset.features.view(), test_idx),
        )
    };
    let train_y: Vec<u8> = train_idx.iter().map(|&i| dataset.labels[i]).collect();
    let test_y: Vec<u8> = test_idx.iter().map(|&i| dataset.labels[i]).collect();

    let model = LogisticPosterior::new(
        train_x,
        &train_y,
        cfg.prior_a,
        cfg.prior_b,
        crate::targets::InterceptPrior::StudentT,
    )?;

    // Deterministic per-(repeat, fold, step size) seed stream.
    let chain_seed = cfg
        .seed
        .wrapping_add(key.repeat as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((key.fold * cfg.step_sizes.len() + key.eps_idx) as u64);
    let chain_cfg = ChainConfig {
        n_steps: cfg.n_steps,
        step_size: cfg.step_sizes[key.eps_idx],
        init: vec![0.0; model.dim()],
        seed: chain_seed,
    };
    let sample = mala_chains(&model, &chain_cfg, cfg.n_chains)?;

    let ell = match cfg.bandwidth {
        BandwidthMode::Fixed(v) => v,
        BandwidthMode::Median => median_heuristic(sample.points.view(), 1000)?,
    };
    let params = SteinKernelParams::new(ell, cfg.beta)?;
    let pool = CandidatePool::from_model(sample.points, &model, params)?;
    let st = stein_thin(&pool, cfg.m)?;
    let rst = regularized_stein_thin(&pool, cfg.m, lambda)?;

    let mut st_scores = Vec::with_capacity(test_y.len());
    let mut rst_scores = Vec::with_capacity(test_y.len());
    let st_thetas = select_rows(pool.points().view(), &st.indices);
    let rst_thetas = select_rows(pool.points().view(), &rst.indices);
    for x in test_x.rows() {
        st_scores.push(posterior_predictive(st_thetas.view(), x)?);
        rst_scores.push(posterior_predictive(rst_thetas.view(), x)?);
    }
    Ok((auc(&st_scores, &test_y)?, auc(&rst_scores, &test_y)?))
}

pub(crate) fn select_rows(matrix: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), matrix.ncols()));
    for (r, &i) in rows.iter().enumerate() {
        out.row_mut(r).assign(&matrix.row(i));
    }
    out
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
