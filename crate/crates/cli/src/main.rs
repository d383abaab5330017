use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use steinthin_cli::config::ThinningMethod;
use steinthin_cli::runner::{self, RunContext};

#[derive(Parser)]
#[command(name = "steinthin", version, about = "Stein thinning of MCMC outputs")]
struct Cli {
    /// Size of the worker pool for parallel repeats (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigSource {
    /// Path to an experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Name of a shipped preset.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct CommonOut {
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,

    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample from the configured target and write it as CSV.
    Sample {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        out: CommonOut,
        /// Write a header row (and expect one when reading).
        #[arg(long)]
        header: bool,
    },
    /// Thin a sample CSV; writes 0-based indices and the objective trace.
    Thin {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        out: CommonOut,
        /// Input sample CSV.
        #[arg(long)]
        sample: PathBuf,
        /// Thinning method override (st | rst).
        #[arg(long)]
        method: Option<ThinningMethod>,
        /// The input CSV has a header row.
        #[arg(long)]
        header: bool,
    },
    /// Compute metrics for a sample or a thinned selection.
    Eval {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        out: CommonOut,
        /// Input sample CSV.
        #[arg(long)]
        sample: PathBuf,
        /// Selection indices CSV (0-based) from `thin`.
        #[arg(long)]
        indices: Option<PathBuf>,
        /// Reference sample CSV for the MMD metric.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Input CSVs have header rows.
        #[arg(long)]
        header: bool,
    },
    /// Run a full experiment across repeats; writes report.json and results.csv.
    Experiment {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        out: CommonOut,
    },
    /// Run the cross-validated logistic-regression pipeline.
    Logistic {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        out: CommonOut,
    },
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match cli.command {
        Command::Sample {
            source,
            out,
            header,
        } => {
            let cfg = runner::load_config(source.config.as_deref(), source.preset.as_deref())?;
            let mut ctx = RunContext::new(out.out_dir);
            ctx.seed_override = out.seed;
            ctx.header = header;
            let path = runner::cmd_sample(&cfg, &ctx)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Thin {
            source,
            out,
            sample,
            method,
            header,
        } => {
            let cfg = runner::load_config(source.config.as_deref(), source.preset.as_deref())?;
            let mut ctx = RunContext::new(out.out_dir);
            ctx.seed_override = out.seed;
            ctx.header = header;
            runner::cmd_thin(&cfg, &sample, method, &ctx)?;
        }
        Command::Eval {
            source,
            out,
            sample,
            indices,
            reference,
            header,
        } => {
            let cfg = runner::load_config(source.config.as_deref(), source.preset.as_deref())?;
            let mut ctx = RunContext::new(out.out_dir);
            ctx.seed_override = out.seed;
            ctx.header = header;
            runner::cmd_eval(
                &cfg,
                &sample,
                indices.as_deref(),
                reference.as_deref(),
                &ctx,
            )?;
        }
        Command::Experiment { source, out } => {
            let cfg = runner::load_config(source.config.as_deref(), source.preset.as_deref())?;
            let mut ctx = RunContext::new(out.out_dir);
            ctx.seed_override = out.seed;
            let report = runner::cmd_experiment(&cfg, &ctx)?;
            eprintln!("experiment {} finished", report.name);
        }
        Command::Logistic { source, out } => {
            let cfg = runner::load_config(source.config.as_deref(), source.preset.as_deref())?;
            let mut ctx = RunContext::new(out.out_dir);
            ctx.seed_override = out.seed;
            let report = runner::cmd_logistic(&cfg, &ctx)?;
            eprintln!("logistic experiment {} finished", report.name);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
