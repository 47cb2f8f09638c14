//! Merged configuration for all pipeline stages, plus synthetic bundle specs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use kews_core::cluster::ClusterConfig;
use kews_core::evaluate::EvalConfig;
use kews_core::filter::FilterConfig;
use kews_core::metrics::{DtwConfig, EsbdConfig};
use kews_core::model::{CatalogEntry, KpiAttributes, KpiBundle, KpiCatalog};
use kews_core::preprocess::PreprocessConfig;
use kews_core::synth::{generate_series, SynthSpec};

/// Input and output locations of the `pipeline` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    /// Raw original-workload bundle directory.
    pub original: PathBuf,
    /// Raw simulated-workload bundle directory.
    pub simulated: PathBuf,
    /// Directory holding `control_a/`, `control_b/` and `perturbed/` bundles.
    pub chaos_dir: PathBuf,
    /// Where partition.json, clusters.json and report.json are written.
    pub out_dir: PathBuf,
    /// Optional service call-count file for strong-score weights.
    #[serde(default)]
    pub weights: Option<PathBuf>,
}

/// One configuration document covering every stage. Unknown keys are
/// rejected; each section falls back to its documented defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalConfig {
    pub pipeline: Option<PipelineSection>,
    pub preprocess: PreprocessConfig,
    pub esbd: EsbdConfig,
    pub dtw: DtwConfig,
    pub filter: FilterConfig,
    pub cluster: ClusterConfig,
    pub eval: EvalConfig,
    pub synth: Option<SynthBundleSpec>,
}

impl GlobalConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// One synthetic KPI: catalog identity plus generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthKpiSpec {
    pub id: String,
    pub domain: String,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    #[serde(default)]
    pub service: Option<String>,
    /// Marks the KPI as a counter; sets the `cumulative: true` label.
    #[serde(default)]
    pub cumulative: bool,
    #[serde(default)]
    pub start_time: i64,
    #[serde(default = "default_interval")]
    pub interval: u64,
    pub spec: SynthSpec,
}

fn default_interval() -> u64 {
    60
}

/// A whole synthetic bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthBundleSpec {
    pub kpis: Vec<SynthKpiSpec>,
}

impl SynthBundleSpec {
    /// Accepts either a bare bundle spec or a global config carrying a
    /// `synth` section.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading synth spec {}", path.display()))?;
        if let Ok(spec) = serde_json::from_str::<SynthBundleSpec>(&text) {
            return Ok(spec);
        }
        let global: GlobalConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing synth spec {}", path.display()))?;
        global
            .synth
            .ok_or_else(|| anyhow::anyhow!("{}: config has no synth section", path.display()))
    }

    pub fn build_bundle(&self) -> Result<KpiBundle> {
        let mut entries = Vec::with_capacity(self.kpis.len());
        let mut series = BTreeMap::new();
        for kpi in &self.kpis {
            let mut labels = kpi.labels.clone();
            if kpi.cumulative {
                labels.insert("cumulative".into(), "true".into());
            }
            entries.push(CatalogEntry {
                id: kpi.id.clone(),
                attrs: KpiAttributes {
                    domain: kpi.domain.clone(),
                    labels,
                    service: kpi.service.clone(),
                },
                file: format!("{}.csv", kpi.id),
                interval: kpi.interval,
            });
            let generated = generate_series(&kpi.spec, &kpi.id, kpi.start_time, kpi.interval)?;
            series.insert(kpi.id.clone(), generated);
        }
        Ok(KpiBundle::new(KpiCatalog::new(entries)?, series)?)
    }
}
