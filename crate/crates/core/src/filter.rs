//! Partitioning of the KPI catalog into strong- and weak-correlation sets.
//!
//! A coarse pass keeps KPIs whose domain attribute is on the strong-domain
//! allowlist; a refined pass compares chaos-experiment runs (two control
//! groups, one perturbed group) per KPI and keeps only those whose
//! perturbation coefficient stays below the threshold. Everything else is a
//! weak-correlation candidate for clustering.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{esbd, EsbdConfig, MetricError};
use crate::model::{KpiCatalog, KpiSeries};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("no chaos run triple for coarse-set KPI {id}")]
    IncompleteExperiment { id: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// How the perturbation coefficient is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationForm {
    /// `exp(|phi1 + phi2 - 2 * phi0|)`, at least 1; strong iff `r <= 1 + gamma`.
    #[default]
    Exponential,
    /// `|phi1 + phi2 - 2 * phi0|`, at least 0; strong iff `r <= gamma`.
    Linear,
}

/// Chaos-experiment filter parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Domains whose KPIs enter the coarse strong-correlation set.
    pub strong_domains: BTreeSet<String>,
    /// Classification slack above the unperturbed baseline.
    pub gamma: f64,
    /// Intensity factor of the ESBD used inside the filter.
    pub alpha: f64,
    /// Peak prominence floor for the ESBD intensity term. Raising it above
    /// the noise level keeps noise-induced micro-peaks out of the peak means,
    /// which otherwise destabilise the perturbation coefficient.
    pub peak_min_prominence: f64,
    /// Perturbation-coefficient form.
    pub r_form: PerturbationForm,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            strong_domains: BTreeSet::new(),
            gamma: 0.1,
            alpha: 0.5,
            peak_min_prominence: 0.0,
            r_form: PerturbationForm::Exponential,
        }
    }
}

impl FilterConfig {
    fn esbd_config(&self) -> EsbdConfig {
        EsbdConfig {
            alpha: self.alpha,
            peak_min_prominence: self.peak_min_prominence,
            ..EsbdConfig::default()
        }
    }

    /// Largest coefficient still classified as strong correlation.
    pub fn strong_threshold(&self) -> f64 {
        match self.r_form {
            PerturbationForm::Exponential => 1.0 + self.gamma,
            PerturbationForm::Linear => self.gamma,
        }
    }
}

/// Three aligned instances of one KPI from a chaos experiment: two control
/// runs and one perturbed run, all preprocessed with identical settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosRunTriple {
    pub kpi_id: String,
    pub control_a: KpiSeries,
    pub control_b: KpiSeries,
    pub perturbed: KpiSeries,
}

/// Outcome of the two filter passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    /// Coarse strong-correlation candidates (domain allowlist), catalog order.
    pub coarse_set: Vec<String>,
    /// KPIs that passed the chaos filter, catalog order.
    pub strong_set: Vec<String>,
    /// Complement of the strong set in the full catalog, catalog order.
    pub weak_candidates: Vec<String>,
    /// Average perturbation coefficient per coarse-set KPI.
    pub per_kpi_r: BTreeMap<String, f64>,
}

/// Ids whose domain attribute is on the allowlist, in catalog order.
pub fn domain_filter(catalog: &KpiCatalog, strong_domains: &BTreeSet<String>) -> Vec<String> {
    catalog
        .entries()
        .iter()
        .filter(|e| strong_domains.contains(&e.attrs.domain))
        .map(|e| e.id.clone())
        .collect()
}

/// Perturbation coefficient from the intra-group ESBD `phi0` and the two
/// inter-group ESBDs `phi1`, `phi2`.
///
/// The exponent is `|phi1 + phi2 - 2 * phi0|`, computed directly rather than
/// through intermediate exponentials of the ESBD sums.
pub fn perturbation_coefficient(phi0: f64, phi1: f64, phi2: f64, form: PerturbationForm) -> f64 {
    let exponent = (phi1 + phi2 - 2.0 * phi0).abs();
    match form {
        PerturbationForm::Exponential => exponent.exp(),
        PerturbationForm::Linear => exponent,
    }
}

/// Classify every coarse-set KPI through its chaos runs and assemble the
/// partition. Multiple triples per KPI (different scenarios) are averaged
/// before thresholding.
pub fn chaos_filter(
    catalog: &KpiCatalog,
    triples: &[ChaosRunTriple],
    cfg: &FilterConfig,
) -> Result<PartitionResult, FilterError> {
    let coarse_set = domain_filter(catalog, &cfg.strong_domains);
    let esbd_cfg = cfg.esbd_config();

    let mut by_id: BTreeMap<&str, Vec<&ChaosRunTriple>> = BTreeMap::new();
    for triple in triples {
        by_id.entry(triple.kpi_id.as_str()).or_default().push(triple);
    }
    for id in &coarse_set {
        if !by_id.contains_key(id.as_str()) {
            return Err(FilterError::IncompleteExperiment { id: id.clone() });
        }
    }

    let coefficients: Vec<(String, f64)> = coarse_set
        .par_iter()
        .map(|id| {
            let runs = &by_id[id.as_str()];
            let mut sum = 0.0;
            for triple in runs.iter() {
                let phi0 = esbd(triple.control_a.values(), triple.control_b.values(), &esbd_cfg)?;
                let phi1 = esbd(triple.control_a.values(), triple.perturbed.values(), &esbd_cfg)?;
                let phi2 = esbd(triple.control_b.values(), triple.perturbed.values(), &esbd_cfg)?;
                sum += perturbation_coefficient(phi0, phi1, phi2, cfg.r_form);
            }
            Ok((id.clone(), sum / runs.len() as f64))
        })
        .collect::<Result<_, FilterError>>()?;

    let per_kpi_r: BTreeMap<String, f64> = coefficients.into_iter().collect();
    let threshold = cfg.strong_threshold();
    let strong: BTreeSet<&str> = per_kpi_r
        .iter()
        .filter(|(_, &r)| r <= threshold)
        .map(|(id, _)| id.as_str())
        .collect();

    let strong_set: Vec<String> = coarse_set
        .iter()
        .filter(|id| strong.contains(id.as_str()))
        .cloned()
        .collect();
    let weak_candidates: Vec<String> = catalog
        .ids()
        .filter(|id| !strong.contains(id))
        .map(str::to_string)
        .collect();

    Ok(PartitionResult {
        coarse_set,
        strong_set,
        weak_candidates,
        per_kpi_r,
    })
}
