//! `kews` — evaluate workload-simulation quality from KPI bundles.
//!
//! Exit codes: 0 success, 1 domain error (bad data, failed stage), 2 usage
//! error (unknown subcommand, flag or metric name).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kews_core::synth::SweepFactor;

#[derive(Parser)]
#[command(
    name = "kews",
    version,
    about = "KPI-based evaluation of workload simulation quality",
    long_about = "Compares KPI time series captured under an original and a simulated \
                  workload. Stages (synth, preprocess, filter, cluster, evaluate) read and \
                  write plain files; `pipeline` chains them from one JSON config."
)]
struct Cli {
    /// Cap worker parallelism (default: all cores). Results are identical
    /// for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic KPI bundle from a spec file.
    Synth {
        /// Bundle spec JSON (or a global config with a `synth` section).
        #[arg(long)]
        spec: PathBuf,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one generator factor and emit metric trends as CSV.
    Sweep {
        /// Factor to sweep: theta1, theta2 or theta3.
        #[arg(long)]
        factor: String,
        /// Comma-separated positive multipliers, e.g. 1,1.5,2,3.
        #[arg(long, value_delimiter = ',')]
        mults: Vec<f64>,
        /// Base generator spec JSON (defaults are used when omitted).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// ESBD intensity factor.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Preprocess a bundle (impute, difference, resample, denoise).
    Preprocess {
        /// Input bundle directory.
        #[arg(long)]
        bundle: PathBuf,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON file mirroring the preprocess config fields.
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute one similarity metric between two series CSV files.
    Metric {
        /// First series CSV.
        #[arg(long)]
        a: PathBuf,
        /// Second series CSV.
        #[arg(long)]
        b: PathBuf,
        /// Metric name: esbd, sbd or dtw.
        #[arg(long)]
        metric: String,
        /// ESBD intensity factor.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Sakoe-Chiba band radius for DTW (unconstrained when omitted).
        #[arg(long)]
        band: Option<usize>,
        /// Disable DTW upper-bound pruning.
        #[arg(long)]
        no_prune: bool,
        /// Sampling interval of the CSV files in seconds.
        #[arg(long, default_value_t = 60)]
        interval: u64,
    },
    /// Partition KPIs into strong/weak sets via domain and chaos filters.
    Filter {
        /// Bundle directory providing the catalog.
        #[arg(long)]
        bundle: PathBuf,
        /// Directory with preprocessed control_a/, control_b/, perturbed/ bundles.
        #[arg(long)]
        chaos_dir: PathBuf,
        /// Comma-separated strong-correlation domains, e.g. grpc,istio.
        #[arg(long, value_delimiter = ',')]
        strong_domains: Vec<String>,
        /// Classification slack above the unperturbed baseline.
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        /// ESBD intensity factor used inside the filter.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Peak prominence floor; set above the noise level to stabilise
        /// the intensity term.
        #[arg(long, default_value_t = 0.0)]
        peak_min_prominence: f64,
        /// Output partition JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster weak-correlation candidates and extract representatives.
    Cluster {
        /// Bundle directory, preprocessed with standardisation.
        #[arg(long)]
        bundle: PathBuf,
        /// Partition JSON from `kews filter`.
        #[arg(long)]
        partition: PathBuf,
        /// Upper bound of the density radius.
        #[arg(long, default_value_t = 1.0)]
        max_radius: f64,
        /// DBSCAN core threshold; also the KNN-curve k.
        #[arg(long, default_value_t = 4)]
        min_pts: usize,
        /// Sakoe-Chiba band radius for DTW.
        #[arg(long)]
        band: Option<usize>,
        /// Disable DTW upper-bound pruning.
        #[arg(long)]
        no_prune: bool,
        /// Output clusters JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a simulated bundle against the original one.
    Evaluate {
        /// Original bundle directory, preprocessed without standardisation.
        #[arg(long)]
        original: PathBuf,
        /// Simulated bundle directory, preprocessed without standardisation.
        #[arg(long)]
        simulated: PathBuf,
        /// Weak-set ids: JSON array or clusters.json from `kews cluster`.
        #[arg(long)]
        kw: PathBuf,
        /// Strong-set ids: JSON array or partition.json from `kews filter`.
        #[arg(long)]
        ks: PathBuf,
        /// Service call counts JSON for strong-score weights (uniform when omitted).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Similarity threshold for both weak and strong scores.
        #[arg(long, default_value_t = 0.2)]
        mu: f64,
        /// Weight of the strong score in the overall score.
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        /// ESBD intensity factor.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Peak prominence floor for the ESBD intensity term.
        #[arg(long, default_value_t = 0.0)]
        peak_min_prominence: f64,
        /// Output report JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run preprocess, filter, cluster and evaluate from one config.
    Pipeline {
        /// Global config JSON with a `pipeline` section.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error when a pool already exists (repeat invocations in
        // one process, e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Synth { spec, out } => commands::synth(&spec, &out)?,
        Command::Sweep {
            factor,
            mults,
            spec,
            alpha,
            out,
        } => {
            let factor: SweepFactor = match factor.parse() {
                Ok(f) => f,
                Err(msg) => return usage_error(&msg),
            };
            commands::sweep_cmd(factor, &mults, spec.as_deref(), alpha, &out)?;
        }
        Command::Preprocess { bundle, out, config } => {
            commands::preprocess(&bundle, &out, &config)?
        }
        Command::Metric {
            a,
            b,
            metric,
            alpha,
            band,
            no_prune,
            interval,
        } => {
            if !matches!(metric.as_str(), "esbd" | "sbd" | "dtw") {
                return usage_error(&format!("unknown metric `{metric}`; use esbd, sbd or dtw"));
            }
            let value = commands::metric(&a, &b, &metric, alpha, band, !no_prune, interval)?;
            println!("{value:.6}");
        }
        Command::Filter {
            bundle,
            chaos_dir,
            strong_domains,
            gamma,
            alpha,
            peak_min_prominence,
            out,
        } => commands::filter(
            &bundle,
            &chaos_dir,
            strong_domains,
            gamma,
            alpha,
            peak_min_prominence,
            &out,
        )?,
        Command::Cluster {
            bundle,
            partition,
            max_radius,
            min_pts,
            band,
            no_prune,
            out,
        } => commands::cluster(&bundle, &partition, max_radius, min_pts, band, !no_prune, &out)?,
        Command::Evaluate {
            original,
            simulated,
            kw,
            ks,
            weights,
            mu,
            beta,
            alpha,
            peak_min_prominence,
            out,
        } => commands::evaluate(
            &original,
            &simulated,
            &kw,
            &ks,
            weights.as_deref(),
            mu,
            beta,
            alpha,
            peak_min_prominence,
            &out,
        )?,
        Command::Pipeline { config } => commands::pipeline(&config)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn usage_error(message: &str) -> anyhow::Result<ExitCode> {
    eprintln!("error: {message}");
    Ok(ExitCode::from(2))
}
