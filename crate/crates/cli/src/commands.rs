//! Implementations of the `kews` subcommands.
//!
//! Every stage reads and writes plain files so runs are reproducible and
//! individually re-runnable. The preprocess stage is the only one that
//! transforms series: filter, cluster and evaluate expect bundles that have
//! already been preprocessed (the `pipeline` subcommand wires this up
//! internally, standardising only the clustering input).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use kews_core::cluster::compress;
use kews_core::evaluate::{evaluate_bundles, write_report};
use kews_core::filter::{chaos_filter, ChaosRunTriple, FilterConfig, PartitionResult};
use kews_core::metrics::{DtwConfig, EsbdConfig, MetricRegistry};
use kews_core::model::{load_bundle, parse_series, save_bundle};
use kews_core::preprocess::{preprocess_bundle, PreprocessConfig};
use kews_core::synth::{sweep, sweep_csv, SweepFactor, SynthSpec};

use crate::config::{GlobalConfig, SynthBundleSpec};

/// Stable-key pretty JSON with a trailing newline.
fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn synth(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = SynthBundleSpec::load(spec_path)?;
    let bundle = spec.build_bundle()?;
    save_bundle(&bundle, out)?;
    eprintln!("wrote bundle with {} KPIs to {}", bundle.len(), out.display());
    Ok(())
}

pub fn sweep_cmd(
    factor: SweepFactor,
    multipliers: &[f64],
    spec_path: Option<&Path>,
    alpha: f64,
    out: &Path,
) -> Result<()> {
    let base = match spec_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading spec {}", path.display()))?;
            serde_json::from_str::<SynthSpec>(&text)
                .with_context(|| format!("parsing spec {}", path.display()))?
        }
        None => SynthSpec::default(),
    };
    let esbd_cfg = EsbdConfig {
        alpha,
        ..EsbdConfig::default()
    };
    let rows = sweep(&base, factor, multipliers, &esbd_cfg, &DtwConfig::default())?;
    fs::write(out, sweep_csv(&rows)).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

pub fn preprocess(bundle_dir: &Path, out: &Path, config_path: &Path) -> Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let cfg: PreprocessConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", config_path.display()))?;
    let bundle = load_bundle(bundle_dir)?;
    let processed = preprocess_bundle(&bundle, &cfg)?;
    save_bundle(&processed, out)?;
    Ok(())
}

pub fn metric(
    a: &Path,
    b: &Path,
    name: &str,
    alpha: f64,
    band: Option<usize>,
    prune: bool,
    interval: u64,
) -> Result<f64> {
    let registry = MetricRegistry::with_defaults(
        EsbdConfig {
            alpha,
            ..EsbdConfig::default()
        },
        DtwConfig {
            band_radius: band,
            pruning: prune,
        },
    );
    let Some(metric) = registry.get(name) else {
        bail!("unknown metric `{name}`; available: {}", registry.names().join(", "));
    };
    let read = |path: &Path| -> Result<Vec<f64>> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
        let series = parse_series(&text, stem, interval)?;
        if series.has_missing() {
            bail!("{}: series has missing values; preprocess it first", path.display());
        }
        Ok(series.values().to_vec())
    };
    Ok(metric.distance(&read(a)?, &read(b)?)?)
}

fn load_chaos_triples(chaos_dir: &Path, preprocess: Option<&PreprocessConfig>) -> Result<Vec<ChaosRunTriple>> {
    let mut bundles = Vec::new();
    for sub in ["control_a", "control_b", "perturbed"] {
        let mut bundle = load_bundle(&chaos_dir.join(sub))
            .with_context(|| format!("loading chaos bundle {sub}"))?;
        if let Some(cfg) = preprocess {
            bundle = preprocess_bundle(&bundle, cfg)?;
        }
        bundles.push(bundle);
    }
    let (control_a, control_b, perturbed) = (&bundles[0], &bundles[1], &bundles[2]);
    let triples = control_a
        .iter()
        .filter_map(|(entry, series_a)| {
            let series_b = control_b.series(&entry.id)?;
            let series_p = perturbed.series(&entry.id)?;
            Some(ChaosRunTriple {
                kpi_id: entry.id.clone(),
                control_a: series_a.clone(),
                control_b: series_b.clone(),
                perturbed: series_p.clone(),
            })
        })
        .collect();
    Ok(triples)
}

pub fn filter(
    bundle_dir: &Path,
    chaos_dir: &Path,
    strong_domains: Vec<String>,
    gamma: f64,
    alpha: f64,
    peak_min_prominence: f64,
    out: &Path,
) -> Result<()> {
    let bundle = load_bundle(bundle_dir)?;
    let cfg = FilterConfig {
        strong_domains: strong_domains.into_iter().collect(),
        gamma,
        alpha,
        peak_min_prominence,
        ..FilterConfig::default()
    };
    // Chaos bundles are expected to be preprocessed already (same config for
    // all three groups); see the pipeline subcommand for the wired-up flow.
    let triples = load_chaos_triples(chaos_dir, None)?;
    let partition = chaos_filter(bundle.catalog(), &triples, &cfg)?;
    write_json(&partition, out)?;
    eprintln!(
        "partitioned {} KPIs: {} strong, {} weak candidates",
        bundle.len(),
        partition.strong_set.len(),
        partition.weak_candidates.len()
    );
    Ok(())
}

fn read_id_list(path: &Path, nested_key: &str) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let array = match &value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(map) => map
            .get(nested_key)
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| {
                anyhow::anyhow!("{}: expected an id array or `{nested_key}` field", path.display())
            })?,
        _ => bail!("{}: expected an id array or object", path.display()),
    };
    array
        .iter()
        .map(|item| {
            item.as_str()
                .map(str::to_string)
                .ok_or_else(|| anyhow::anyhow!("{}: ids must be strings", path.display()))
        })
        .collect()
}

pub fn cluster(
    bundle_dir: &Path,
    partition_path: &Path,
    max_radius: f64,
    min_pts: usize,
    band: Option<usize>,
    prune: bool,
    out: &Path,
) -> Result<()> {
    let bundle = load_bundle(bundle_dir)?;
    let text = fs::read_to_string(partition_path)
        .with_context(|| format!("reading partition {}", partition_path.display()))?;
    let partition: PartitionResult = serde_json::from_str(&text)
        .with_context(|| format!("parsing partition {}", partition_path.display()))?;
    let cluster_cfg = kews_core::cluster::ClusterConfig {
        min_pts,
        max_radius,
        ..Default::default()
    };
    let dtw_cfg = DtwConfig {
        band_radius: band,
        pruning: prune,
    };
    let output = compress(&bundle, &partition.weak_candidates, &cluster_cfg, &dtw_cfg)?;
    write_json(&output, out)?;
    eprintln!(
        "compressed {} weak candidates into {} representatives",
        partition.weak_candidates.len(),
        output.kw.len()
    );
    Ok(())
}

fn read_weights(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing weights {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    original_dir: &Path,
    simulated_dir: &Path,
    kw_path: &Path,
    ks_path: &Path,
    weights_path: Option<&Path>,
    mu: f64,
    beta: f64,
    alpha: f64,
    peak_min_prominence: f64,
    out: &Path,
) -> Result<()> {
    let original = load_bundle(original_dir)?;
    let simulated = load_bundle(simulated_dir)?;
    let kw = read_id_list(kw_path, "kw")?;
    let ks = read_id_list(ks_path, "strong_set")?;
    let weights = weights_path.map(read_weights).transpose()?;
    let cfg = kews_core::evaluate::EvalConfig {
        mu_weak: mu,
        mu_strong: mu,
        beta,
        alpha,
        peak_min_prominence,
        ..Default::default()
    };
    let report = evaluate_bundles(&original, &simulated, &kw, &ks, weights.as_ref(), &cfg)?;
    write_report(&report, out)?;
    println!("e_weak {:.6}", report.e_weak);
    println!("e_strong {:.6}", report.e_strong);
    println!("e_overall {:.6}", report.e_overall);
    Ok(())
}

/// Chain preprocess, filter, cluster and evaluate from one config document.
pub fn pipeline(config_path: &Path) -> Result<()> {
    let cfg = GlobalConfig::load(config_path)?;
    let Some(io) = cfg.pipeline.as_ref() else {
        bail!("config {} has no pipeline section", config_path.display());
    };
    fs::create_dir_all(&io.out_dir)
        .with_context(|| format!("creating {}", io.out_dir.display()))?;

    let original_raw = load_bundle(&io.original).context("loading original bundle")?;
    let simulated_raw = load_bundle(&io.simulated).context("loading simulated bundle")?;

    // Evaluation-path series keep their scale; clustering input is
    // additionally standardised.
    let eval_pp = PreprocessConfig {
        standardize: false,
        ..cfg.preprocess
    };
    let cluster_pp = PreprocessConfig {
        standardize: true,
        ..cfg.preprocess
    };
    let original_eval = preprocess_bundle(&original_raw, &eval_pp)?;
    let simulated_eval = preprocess_bundle(&simulated_raw, &eval_pp)?;
    let original_std = preprocess_bundle(&original_raw, &cluster_pp)?;

    let triples = load_chaos_triples(&io.chaos_dir, Some(&eval_pp))?;
    let partition = chaos_filter(original_raw.catalog(), &triples, &cfg.filter)?;
    write_json(&partition, &io.out_dir.join("partition.json"))?;

    let compressed = compress(&original_std, &partition.weak_candidates, &cfg.cluster, &cfg.dtw)?;
    write_json(&compressed, &io.out_dir.join("clusters.json"))?;

    let weights = io.weights.as_deref().map(read_weights).transpose()?;
    let report = evaluate_bundles(
        &original_eval,
        &simulated_eval,
        &compressed.kw,
        &partition.strong_set,
        weights.as_ref(),
        &cfg.eval,
    )?;
    if report.config.beta != cfg.eval.beta {
        eprintln!(
            "warning: beta forced to {} (one KPI set is empty)",
            report.config.beta
        );
    }
    write_report(&report, &io.out_dir.join("report.json"))?;

    println!("e_weak {:.6}", report.e_weak);
    println!("e_strong {:.6}", report.e_strong);
    println!("e_overall {:.6}", report.e_overall);
    Ok(())
}
