//! Pipeline execution behind the CLI subcommands.

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use steinthin::diagnostics::{symmetric_pair_geometry, ClusterSummary, MetricReport};
use steinthin::io as sio;
use steinthin::{
    energy_mmd, energy_mmd_unbiased, exact_mixture_sample, mala_chains,
    mode_proportions, regularized_stein_thin, stein_thin, CandidatePool,
    ChainConfig, CvPlan, GaussianMixture, LogisticRunConfig, SampleSet, ThinningResult,
};

use crate::config::{
    BuiltTarget, ExperimentConfig, ExperimentKind, SamplerConfig, SamplerKind,
    ThinningConfig, ThinningMethod,
};
use crate::presets;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Common invocation context.
pub struct RunContext {
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub header: bool,
}

impl RunContext {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            seed_override: None,
            header: false,
        }
    }
}

/// Deletes everything registered but not committed, so failed runs leave no
/// partial artifacts behind.
struct OutputGuard {
    created: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    fn new() -> Self {
        Self {
            created: Vec::new(),
            committed: false,
        }
    }

    fn register(&mut self, path: &Path) -> PathBuf {
        self.created.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.created {
                let _ = fs::remove_file(p);
            }
        }
    }
}

pub fn load_config(path: Option<&Path>, preset: Option<&str>) -> Result<ExperimentConfig> {
    let text = match (path, preset) {
        (Some(p), None) => fs::read_to_string(p)
            .with_context(|| format!("reading config {}", p.display()))?,
        (None, Some(name)) => presets::preset_toml(name)
            .map(str::to_string)
            .with_context(|| {
                format!(
                    "unknown preset {name:?}; available: {}",
                    presets::preset_names().join(", ")
                )
            })?,
        (Some(_), Some(_)) => bail!("pass either --config or --preset, not both"),
        (None, None) => bail!("one of --config or --preset is required"),
    };
    ExperimentConfig::from_toml(&text)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn generate_sample(
    target: &BuiltTarget,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<SampleSet> {
    match sampler.kind {
        SamplerKind::Exact => Ok(match target {
            BuiltTarget::Gaussian(g) => exact_mixture_sample(g, sampler.n, seed),
            BuiltTarget::Banana(b) => exact_mixture_sample(b, sampler.n, seed),
        }),
        SamplerKind::Mala => {
            let step_size = sampler
                .step_size
                .context("mala sampler needs `step_size`")?;
            let init = sampler
                .init
                .clone()
                .unwrap_or_else(|| vec![0.0; target.dim()]);
            let cfg = ChainConfig {
                n_steps: sampler.n,
                step_size,
                init,
                seed,
            };
            Ok(mala_chains(target.model(), &cfg, sampler.n_chains.max(1))?)
        }
    }
}

fn build_pool(
    target: &BuiltTarget,
    points: Array2<f64>,
    thinning: &ThinningConfig,
) -> Result<CandidatePool> {
    let ell = thinning
        .bandwidth
        .resolve(points.view(), thinning.median_cap)?;
    let params = steinthin::SteinKernelParams::new(ell, thinning.beta)?;
    Ok(CandidatePool::from_model(points, target.model(), params)?)
}

fn run_method(
    pool: &CandidatePool,
    thinning: &ThinningConfig,
    method: ThinningMethod,
) -> Result<ThinningResult> {
    Ok(match method {
        ThinningMethod::St => stein_thin(pool, thinning.m)?,
        ThinningMethod::Rst => {
            let lambda = thinning.lambda.resolve(thinning.m)?;
            regularized_stein_thin(pool, thinning.m, lambda)?
        }
    })
}

fn embed_provenance(report: &mut MetricReport, cfg: &ExperimentConfig) -> Result<()> {
    report.note("version", VERSION);
    report.note("config", cfg.to_toml()?);
    Ok(())
}

fn write_report(path: &Path, report: &MetricReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// `sample`: draw from the configured target and write the CSV plus its
/// metadata sidecar.
pub fn cmd_sample(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<PathBuf> {
    let target = cfg
        .target
        .as_ref()
        .context("sample needs a [target] section")?
        .build()?;
    let mut sampler = cfg
        .sampler
        .as_ref()
        .context("sample needs a [sampler] section")?
        .clone();
    if let Some(seed) = ctx.seed_override {
        sampler.seed = seed;
    }
    ensure_out_dir(&ctx.out_dir)?;
    let mut guard = OutputGuard::new();
    let csv_path = guard.register(&ctx.out_dir.join("sample.csv"));
    guard.register(&sio::meta_path(&csv_path));

    let sample = generate_sample(&target, &sampler, sampler.seed)?;
    sio::write_sample_csv(&csv_path, &sample, ctx.header)?;
    sio::write_sample_meta(&csv_path, &sample.meta)?;
    guard.commit();
    Ok(csv_path)
}

/// `thin`: select `m` particles from a sample CSV and write the 0-based
/// index sequence plus the objective/KSD trace.
pub fn cmd_thin(
    cfg: &ExperimentConfig,
    sample_path: &Path,
    method_override: Option<ThinningMethod>,
    ctx: &RunContext,
) -> Result<()> {
    let target = cfg
        .target
        .as_ref()
        .context("thin needs a [target] section")?
        .build()?;
    let thinning = cfg
        .thinning
        .as_ref()
        .context("thin needs a [thinning] section")?;
    let method = method_override
        .or_else(|| thinning.methods.first().copied())
        .context("no thinning method configured")?;

    let points = sio::read_sample_csv(sample_path, ctx.header)?;
    if points.ncols() != target.dim() {
        bail!(
            "sample dimension {} does not match target dimension {}",
            points.ncols(),
            target.dim()
        );
    }
    ensure_out_dir(&ctx.out_dir)?;
    let mut guard = OutputGuard::new();
    let idx_path = guard.register(&ctx.out_dir.join("indices.csv"));
    let trace_path = guard.register(&ctx.out_dir.join("trace.csv"));

    let pool = build_pool(&target, points, thinning)?;
    let result = run_method(&pool, thinning, method)?;
    sio::write_indices_csv(&idx_path, &result.indices)?;
    sio::write_trace_csv(&trace_path, &result)?;
    guard.commit();
    Ok(())
}

/// `eval`: metrics for a sample (or a selection of it) against the target
/// and an optional reference sample.
pub fn cmd_eval(
    cfg: &ExperimentConfig,
    sample_path: &Path,
    indices_path: Option<&Path>,
    reference_path: Option<&Path>,
    ctx: &RunContext,
) -> Result<()> {
    let points = sio::read_sample_csv(sample_path, ctx.header)?;
    let evaluation = cfg.evaluation.clone().unwrap_or_default();
    let mut report = MetricReport::new("eval");

    let selection: Array2<f64> = match indices_path {
        Some(p) => {
            let indices = sio::read_indices_csv(p)?;
            let target = cfg
                .target
                .as_ref()
                .context("eval with --indices needs a [target] section for KSD")?
                .build()?;
            let thinning = cfg
                .thinning
                .as_ref()
                .context("eval with --indices needs a [thinning] section")?;
            let pool = build_pool(&target, points.clone(), thinning)?;
            report.insert("ksd2", steinthin::ksd_squared(&pool, &indices)?);
            report.insert("l_ksd2", steinthin::l_ksd_squared(&pool, &indices)?);
            let mut sel = Array2::zeros((indices.len(), points.ncols()));
            for (r, &i) in indices.iter().enumerate() {
                sel.row_mut(r).assign(&points.row(i));
            }
            sel
        }
        None => points,
    };

    if let Some(centers) = evaluation.centers_matrix() {
        let props = mode_proportions(selection.view(), centers.view())?;
        for (k, p) in props.iter().enumerate() {
            report.insert(format!("mode_prop_{k}"), *p);
        }
    }
    if let Some(ref_path) = reference_path {
        let reference = sio::read_sample_csv(ref_path, ctx.header)?;
        let mmd = if evaluation.mmd_unbiased {
            energy_mmd_unbiased(selection.view(), reference.view())?
        } else {
            energy_mmd(selection.view(), reference.view())?
        };
        report.insert("mmd", mmd);
    }

    embed_provenance(&mut report, cfg)?;
    ensure_out_dir(&ctx.out_dir)?;
    let mut guard = OutputGuard::new();
    let path = guard.register(&ctx.out_dir.join("metrics.json"));
    write_report(&path, &report)?;
    guard.commit();
    Ok(())
}

/// One long-format result row: `method,d,m,eps,seed,metric,value`.
#[derive(Debug, Clone)]
pub struct LongRow {
    pub method: String,
    pub d: usize,
    pub m: usize,
    pub eps: Option<f64>,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

fn write_long_csv(path: &Path, rows: &[LongRow]) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "method,d,m,eps,seed,metric,value")?;
    for r in rows {
        let eps = r.eps.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.method, r.d, r.m, eps, r.seed, r.metric, r.value
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `experiment`: run the configured pipeline across repeats and write the
/// aggregated JSON report plus the plot-ready long CSV.
pub fn cmd_experiment(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<MetricReport> {
    let mut cfg = cfg.clone();
    if let Some(seed) = ctx.seed_override {
        cfg.experiment.base_seed = seed;
    }
    let (mut report, rows) = match cfg.experiment.kind {
        ExperimentKind::ThinEval => run_thin_eval(&cfg)?,
        ExperimentKind::WeightSweep => run_weight_sweep(&cfg)?,
        ExperimentKind::Logistic => run_logistic(&cfg)?,
    };
    embed_provenance(&mut report, &cfg)?;

    ensure_out_dir(&ctx.out_dir)?;
    let mut guard = OutputGuard::new();
    let report_path = guard.register(&ctx.out_dir.join("report.json"));
    let csv_path = guard.register(&ctx.out_dir.join("results.csv"));
    write_report(&report_path, &report)?;
    write_long_csv(&csv_path, &rows)?;
    guard.commit();
    Ok(report)
}

/// `logistic`: shorthand for an experiment config of kind `logistic`.
pub fn cmd_logistic(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<MetricReport> {
    if cfg.experiment.kind != ExperimentKind::Logistic {
        bail!("the logistic subcommand needs an experiment of kind \"logistic\"");
    }
    cmd_experiment(cfg, ctx)
}

struct SeedOutcome {
    seed: u64,
    accept_rate: Option<f64>,
    per_method: Vec<(ThinningMethod, BTreeMap<String, f64>)>,
}

fn run_thin_eval(cfg: &ExperimentConfig) -> Result<(MetricReport, Vec<LongRow>)> {
    let target_cfg = cfg.target.as_ref().expect("validated");
    let sampler = cfg.sampler.as_ref().expect("validated");
    let thinning = cfg.thinning.as_ref().expect("validated");
    let evaluation = cfg.evaluation.clone().unwrap_or_default();
    let repeats = cfg.experiment.repeats.max(1);
    let base_seed = cfg.experiment.base_seed;

    // Ground-truth reference for the MMD metric, drawn once.
    let reference: Option<Array2<f64>> = if evaluation.mmd_reference_n > 0 {
        let target = target_cfg.build()?;
        let ref_seed = base_seed.wrapping_add(0xA5A5_5A5A);
        let s = match &target {
            BuiltTarget::Gaussian(g) => {
                exact_mixture_sample(g, evaluation.mmd_reference_n, ref_seed)
            }
            BuiltTarget::Banana(b) => {
                exact_mixture_sample(b, evaluation.mmd_reference_n, ref_seed)
            }
        };
        Some(s.points)
    } else {
        None
    };

    // Saddle-band half-width from the target geometry, when requested.
    let band_halfwidth: Option<f64> = if evaluation.saddle_band {
        let target = target_cfg.build()?;
        let BuiltTarget::Gaussian(g) = &target else {
            bail!("saddle_band metric needs a Gaussian target");
        };
        let (mu, var) = symmetric_pair_geometry(g)?;
        let sigma = var.sqrt();
        if mu / sigma <= 1.0 {
            bail!("saddle_band metric needs mu/sigma > 1");
        }
        Some(var / mu * (mu / sigma).acosh())
    } else {
        None
    };

    let centers = evaluation.centers_matrix();

    let outcomes: Vec<Result<SeedOutcome>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r as u64);
            let target = target_cfg.build()?;
            let mut sampler_cfg = sampler.clone();
            sampler_cfg.seed = seed;
            let sample = generate_sample(&target, &sampler_cfg, seed)?;
            let accept_rate = sample.meta.acceptance_rate;
            let pool = build_pool(&target, sample.points, thinning)?;

            let mut per_method = Vec::new();
            for &method in &thinning.methods {
                let result = run_method(&pool, thinning, method)?;
                let mut metrics = BTreeMap::new();
                metrics.insert(
                    "ksd2".to_string(),
                    *result.ksd_trace.last().expect("m >= 1"),
                );
                let mut sel = Array2::zeros((result.indices.len(), pool.dim()));
                for (row, &i) in result.indices.iter().enumerate() {
                    sel.row_mut(row).assign(&pool.points().row(i));
                }
                if let Some(c) = &centers {
                    let props = mode_proportions(sel.view(), c.view())?;
                    for (k, p) in props.iter().enumerate() {
                        metrics.insert(format!("mode_prop_{k}"), *p);
                    }
                    if c.nrows() == 2 {
                        metrics.insert("left_mode".to_string(), props[0]);
                    }
                }
                if let Some(reference) = &reference {
                    let mmd = if evaluation.mmd_unbiased {
                        energy_mmd_unbiased(sel.view(), reference.view())?
                    } else {
                        energy_mmd(sel.view(), reference.view())?
                    };
                    metrics.insert("mmd".to_string(), mmd);
                }
                if let Some(z) = band_halfwidth {
                    let count = sel
                        .rows()
                        .into_iter()
                        .filter(|row| row[0].abs() < z)
                        .count();
                    metrics.insert("band_count".to_string(), count as f64);
                }
                per_method.push((method, metrics));
            }
            Ok(SeedOutcome {
                seed,
                accept_rate,
                per_method,
            })
        })
        .collect();

    let mut rows: Vec<LongRow> = Vec::new();
    let mut collected: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let d = target_cfg.build()?.dim();
    let eps = sampler.step_size.filter(|_| sampler.kind == SamplerKind::Mala);
    let mut n_band_positive: BTreeMap<String, usize> = BTreeMap::new();

    for outcome in outcomes {
        let outcome = outcome?;
        if let Some(a) = outcome.accept_rate {
            rows.push(LongRow {
                method: "sampler".into(),
                d,
                m: thinning.m,
                eps,
                seed: outcome.seed,
                metric: "accept_rate".into(),
                value: a,
            });
            collected
                .entry(("sampler".into(), "accept_rate".into()))
                .or_default()
                .push(a);
        }
        for (method, metrics) in outcome.per_method {
            for (name, value) in metrics {
                rows.push(LongRow {
                    method: method.label().into(),
                    d,
                    m: thinning.m,
                    eps,
                    seed: outcome.seed,
                    metric: name.clone(),
                    value,
                });
                if name == "band_count" && value >= 1.0 {
                    *n_band_positive.entry(method.label().into()).or_default() += 1;
                }
                collected
                    .entry((method.label().into(), name))
                    .or_default()
                    .push(value);
            }
        }
    }

    let mut report = MetricReport::new(cfg.experiment.name.clone());
    report.insert("repeats", repeats as f64);
    for ((method, metric), values) in &collected {
        let (mean, sd) = mean_sd(values);
        report.insert(format!("{method}_{metric}_mean"), mean);
        report.insert(format!("{method}_{metric}_sd"), sd);
        report.insert(format!("{method}_{metric}_median"), median(values));
    }
    for (method, count) in n_band_positive {
        report.insert(format!("{method}_band_positive_seeds"), count as f64);
    }
    if let Some(z) = band_halfwidth {
        report.insert("band_halfwidth", z);
    }
    Ok((report, rows))
}

/// Truncated per-mode cluster draws for the weight sweep.
fn truncated_cluster(
    gm: &GaussianMixture,
    center_first: f64,
    sigma: f64,
    radius_sds: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let d = steinthin::TargetModel::dim(gm);
    let radius2 = (radius_sds * sigma) * (radius_sds * sigma);
    let mut out = Array2::zeros((n, d));
    let mut row = 0;
    while row < n {
        let mut norm2 = 0.0;
        let mut z = vec![0.0; d];
        for zj in z.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *zj = sigma * g;
            norm2 += *zj * *zj;
        }
        if norm2 <= radius2 {
            out[(row, 0)] = center_first + z[0];
            for j in 1..d {
                out[(row, j)] = z[j];
            }
            row += 1;
        }
    }
    out
}

fn run_weight_sweep(cfg: &ExperimentConfig) -> Result<(MetricReport, Vec<LongRow>)> {
    let target_cfg = cfg.target.as_ref().expect("validated");
    let sweep_cfg = cfg.weight_sweep.as_ref().expect("validated");
    let repeats = cfg.experiment.repeats.max(1);
    let base_seed = cfg.experiment.base_seed;

    let BuiltTarget::Gaussian(gm_probe) = target_cfg.build()? else {
        bail!("weight_sweep needs a Gaussian target");
    };
    let (mu, var) = symmetric_pair_geometry(&gm_probe)?;
    let sigma = var.sqrt();
    let grid = sweep_cfg.grid();
    if grid.is_empty() {
        bail!("empty weight grid");
    }
    let n_per_cluster = (sweep_cfg.n / 2).max(2);

    struct SweepOutcome {
        argmin: f64,
        values: Vec<f64>,
        search: Option<(f64, f64)>,
    }

    let outcomes: Vec<Result<SweepOutcome>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let BuiltTarget::Gaussian(gm) = target_cfg.build()? else {
                unreachable!("checked above");
            };
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(r as u64));
            let left_pts = truncated_cluster(
                &gm,
                -mu,
                sigma,
                sweep_cfg.truncation_radius_sds,
                n_per_cluster,
                &mut rng,
            );
            let right_pts = truncated_cluster(
                &gm,
                mu,
                sigma,
                sweep_cfg.truncation_radius_sds,
                n_per_cluster,
                &mut rng,
            );
            // Shared bandwidth from the union of both clusters.
            let mut union = Vec::with_capacity((left_pts.nrows() + right_pts.nrows()) * 2);
            union.extend(left_pts.iter().copied());
            union.extend(right_pts.iter().copied());
            let union = Array2::from_shape_vec(
                (left_pts.nrows() + right_pts.nrows(), left_pts.ncols()),
                union,
            )?;
            let ell = sweep_cfg.bandwidth.resolve(union.view(), 1000)?;
            let params = steinthin::SteinKernelParams::new(ell, sweep_cfg.beta)?;
            let left = CandidatePool::from_model(left_pts, &gm, params)?;
            let right = CandidatePool::from_model(right_pts, &gm, params)?;
            let summary = ClusterSummary::compute(&left, &right)?;
            let sweep = summary.sweep(&grid, sweep_cfg.lambda)?;
            let search = match sweep_cfg.target_w {
                Some(target_w) => {
                    let mut best: Option<(f64, f64, f64)> = None;
                    for lambda in sweep_cfg.lambdas() {
                        let s = summary.sweep(&grid, lambda)?;
                        let gap = (s.argmin_w - target_w).abs();
                        if best.is_none_or(|(g, _, _)| gap < g) {
                            best = Some((gap, lambda, s.argmin_w));
                        }
                    }
                    best.map(|(_, lambda, argmin)| (lambda, argmin))
                }
                None => None,
            };
            Ok(SweepOutcome {
                argmin: sweep.argmin_w,
                values: sweep.ksd_values,
                search,
            })
        })
        .collect();

    let mut argmins = Vec::with_capacity(repeats);
    let mut value_sums = vec![0.0f64; grid.len()];
    let mut search_gaps = Vec::new();
    let mut search_lambdas = Vec::new();
    let mut rows = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        argmins.push(o.argmin);
        for (i, v) in o.values.iter().enumerate() {
            value_sums[i] += v;
            rows.push(LongRow {
                method: "sweep".into(),
                d: gm_probe.means().ncols(),
                m: 0,
                eps: None,
                seed: base_seed.wrapping_add(r as u64),
                metric: format!("ksd2_w{}", grid[i]),
                value: *v,
            });
        }
        if let Some((lambda, argmin)) = o.search {
            if let Some(target_w) = sweep_cfg.target_w {
                search_gaps.push((argmin - target_w).abs());
            }
            search_lambdas.push(lambda);
        }
    }

    let mut report = MetricReport::new(cfg.experiment.name.clone());
    report.insert("repeats", repeats as f64);
    let (argmin_mean, argmin_sd) = mean_sd(&argmins);
    report.insert("argmin_w_mean", argmin_mean);
    report.insert("argmin_w_sd", argmin_sd);
    let mean_values: Vec<f64> = value_sums.iter().map(|v| v / repeats as f64).collect();
    let best = grid
        .iter()
        .zip(mean_values.iter())
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .map(|(w, _)| *w)
        .expect("nonempty grid");
    report.insert("argmin_w_of_mean_curve", best);
    if !search_gaps.is_empty() {
        let (gap_mean, _) = mean_sd(&search_gaps);
        report.insert("lambda_search_gap_mean", gap_mean);
        report.insert(
            "lambda_search_gap_max",
            search_gaps.iter().copied().fold(0.0, f64::max),
        );
        let (lambda_mean, _) = mean_sd(&search_lambdas);
        report.insert("lambda_search_lambda_mean", lambda_mean);
    }
    // Aggregated (w, ksd2) rows for the sweep CSV.
    for (i, &w) in grid.iter().enumerate() {
        rows.push(LongRow {
            method: "sweep_mean".into(),
            d: gm_probe.means().ncols(),
            m: 0,
            eps: None,
            seed: base_seed,
            metric: format!("w={w}"),
            value: mean_values[i],
        });
        report.insert(format!("ksd2_mean_w{w}"), mean_values[i]);
    }
    Ok((report, rows))
}

fn run_logistic(cfg: &ExperimentConfig) -> Result<(MetricReport, Vec<LongRow>)> {
    let lg = cfg.logistic.as_ref().expect("validated");
    let dataset =
        steinthin::load_csv_dataset(Path::new(&lg.dataset), &lg.label_column, false)?;
    let cv = CvPlan {
        n_folds: lg.n_folds,
        n_repeats: lg.n_repeats,
        seed: cfg.experiment.base_seed,
    };
    let run_cfg = LogisticRunConfig {
        prior_a: lg.prior_a,
        prior_b: lg.prior_b,
        step_sizes: lg.step_sizes.clone(),
        n_steps: lg.n_steps,
        n_chains: lg.n_chains,
        m: lg.m,
        beta: lg.beta,
        bandwidth: steinthin::BandwidthMode::Median,
        lambda: Some(lg.lambda.resolve(lg.m)?),
        standardize: lg.standardize,
        seed: cfg.experiment.base_seed,
    };
    let report = steinthin::run_logistic_experiment(&dataset, &cv, &run_cfg)?;
    let mut rows = Vec::new();
    for (metric, value) in &report.metrics {
        rows.push(LongRow {
            method: "logistic".into(),
            d: dataset.dim(),
            m: lg.m,
            eps: None,
            seed: cfg.experiment.base_seed,
            metric: metric.clone(),
            value: *value,
        });
    }
    let mut renamed = report;
    renamed.name = cfg.experiment.name.clone();
    Ok((renamed, rows))
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

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}
