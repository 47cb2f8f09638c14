//! Aggregation of per-KPI ESBD values into workload-simulation quality scores.
//!
//! Weak-correlation KPIs contribute through their arithmetic mean; strong
//! ones through a service-weighted mean. Each mean distance is normalized to
//! a score in `(0, 1]` via `mu / (mu + phi)` and the two scores combine under
//! the correlation factor `beta`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{esbd, EsbdConfig, MetricError};
use crate::model::KpiBundle;

/// Timestamp written when the config supplies none; a fixed value keeps
/// pipeline outputs byte-identical across runs.
const EPOCH_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no ESBD values to aggregate")]
    EmptyPhis,
    #[error("nothing to evaluate: both KPI sets are empty")]
    NothingToEvaluate,
    #[error("service {service} has no weight")]
    MissingWeight { service: String },
    #[error("weights refer to service {service} which has no strong KPIs")]
    UnknownWeight { service: String },
    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("weights must be non-negative with a positive total")]
    InvalidWeights,
    #[error("KPI {id} missing from the {side} bundle")]
    IdMismatch { id: String, side: &'static str },
    #[error("strong-correlation KPI {id} has no service attribute")]
    MissingService { id: String },
    #[error("invalid eval config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report format: {0}")]
    Format(String),
}

/// Evaluation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Similarity threshold of the weak-correlation score.
    pub mu_weak: f64,
    /// Similarity threshold of the strong-correlation score.
    pub mu_strong: f64,
    /// Weight of the strong score in the overall score.
    pub beta: f64,
    /// Intensity factor of the ESBD used for the per-KPI distances.
    pub alpha: f64,
    /// Peak prominence floor for the ESBD intensity term.
    pub peak_min_prominence: f64,
    /// Report timestamp override (RFC 3339); the epoch when absent.
    pub generated_at: Option<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mu_weak: 0.2,
            mu_strong: 0.2,
            beta: 0.9,
            alpha: 0.5,
            peak_min_prominence: 0.0,
            generated_at: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, mu) in [("mu_weak", self.mu_weak), ("mu_strong", self.mu_strong)] {
            if !(mu > 0.0 && mu < 2.0) {
                return Err(EvalError::InvalidConfig(format!(
                    "{name} must lie in (0, 2), got {mu}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) || self.beta.is_nan() {
            return Err(EvalError::InvalidConfig(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Normalized per-service importance weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceWeights(BTreeMap<String, f64>);

impl ServiceWeights {
    /// Normalize raw call counts into weights.
    pub fn from_counts(counts: &BTreeMap<String, f64>) -> Result<Self, EvalError> {
        if counts.values().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(EvalError::InvalidWeights);
        }
        let total: f64 = counts.values().sum();
        if total <= 0.0 {
            return Err(EvalError::InvalidWeights);
        }
        Ok(Self(
            counts.iter().map(|(k, &v)| (k.clone(), v / total)).collect(),
        ))
    }

    /// Equal weight for every service.
    pub fn uniform<I, S>(services: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = services.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(EvalError::InvalidWeights);
        }
        let w = 1.0 / names.len() as f64;
        Ok(Self(names.into_iter().map(|name| (name, w)).collect()))
    }

    pub fn get(&self, service: &str) -> Option<f64> {
        self.0.get(service).copied()
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }

    fn sum(&self) -> f64 {
        self.0.values().sum()
    }
}

/// Weak-correlation aggregate: the mean distance and its normalized score.
pub fn weak_score(phis: &[f64], mu: f64) -> Result<(f64, f64), EvalError> {
    if phis.is_empty() {
        return Err(EvalError::EmptyPhis);
    }
    let phi = phis.iter().sum::<f64>() / phis.len() as f64;
    Ok((phi, mu / (mu + phi)))
}

/// Strong-correlation aggregate: service-weighted mean distance and score.
///
/// Every service present must carry a weight, weights must cover only present
/// services and sum to one.
pub fn strong_score(
    phis_by_service: &BTreeMap<String, Vec<f64>>,
    weights: &ServiceWeights,
    mu: f64,
) -> Result<(f64, f64), EvalError> {
    if phis_by_service.is_empty() || phis_by_service.values().all(Vec::is_empty) {
        return Err(EvalError::EmptyPhis);
    }
    for service in weights.as_map().keys() {
        if !phis_by_service.contains_key(service) {
            return Err(EvalError::UnknownWeight {
                service: service.clone(),
            });
        }
    }
    let sum = weights.sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(EvalError::WeightSum { sum });
    }
    let mut phi = 0.0;
    for (service, phis) in phis_by_service {
        if phis.is_empty() {
            continue;
        }
        let weight = weights.get(service).ok_or_else(|| EvalError::MissingWeight {
            service: service.clone(),
        })?;
        let mean = phis.iter().sum::<f64>() / phis.len() as f64;
        phi += weight * mean;
    }
    Ok((phi, mu / (mu + phi)))
}

/// Correlation-factor blend of the two scores.
pub fn overall_score(e_weak: f64, e_strong: f64, beta: f64) -> f64 {
    (1.0 - beta) * e_weak + beta * e_strong
}

/// Parameters echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub mu_weak: f64,
    pub mu_strong: f64,
    /// Effective beta; forced to 0 or 1 when one KPI set is empty.
    pub beta: f64,
    pub alpha: f64,
    /// Normalized service weights actually used.
    pub weights: BTreeMap<String, f64>,
}

/// Final evaluation artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_kpi_phi: BTreeMap<String, f64>,
    pub e_weak: f64,
    pub e_strong: f64,
    pub e_overall: f64,
    pub config: ReportConfig,
    pub generated_at: String,
}

impl EvaluationReport {
    /// Stable-key-ordered JSON with trailing newline; byte-identical for
    /// identical reports.
    pub fn to_json_string(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        json
    }
}

/// Write a report as deterministic JSON.
pub fn write_report(report: &EvaluationReport, path: &Path) -> Result<(), EvalError> {
    fs::write(path, report.to_json_string()).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a report back; inverse of [`write_report`].
pub fn read_report(path: &Path) -> Result<EvaluationReport, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| EvalError::Format(e.to_string()))
}

/// Compare the original and simulated bundles over the weak set `kw` and
/// strong set `ks`.
///
/// Both bundles must carry every requested id, preprocessed without
/// standardisation. Services for the strong set come from the original
/// bundle's catalog; `weight_counts` are raw call counts normalized over the
/// services present (uniform weights when absent). An empty strong set forces
/// `beta` to 0, an empty weak set forces it to 1.
pub fn evaluate_bundles(
    original: &KpiBundle,
    simulated: &KpiBundle,
    kw: &[String],
    ks: &[String],
    weight_counts: Option<&BTreeMap<String, f64>>,
    cfg: &EvalConfig,
) -> Result<EvaluationReport, EvalError> {
    cfg.validate()?;
    if kw.is_empty() && ks.is_empty() {
        return Err(EvalError::NothingToEvaluate);
    }
    let esbd_cfg = EsbdConfig {
        alpha: cfg.alpha,
        peak_min_prominence: cfg.peak_min_prominence,
        ..EsbdConfig::default()
    };

    let mut all_ids: Vec<&String> = kw.iter().chain(ks.iter()).collect();
    all_ids.dedup();
    let phis: Vec<(String, f64)> = all_ids
        .par_iter()
        .map(|id| {
            let orig = original.series(id).ok_or_else(|| EvalError::IdMismatch {
                id: (*id).clone(),
                side: "original",
            })?;
            let sim = simulated.series(id).ok_or_else(|| EvalError::IdMismatch {
                id: (*id).clone(),
                side: "simulated",
            })?;
            let phi = esbd(orig.values(), sim.values(), &esbd_cfg)?;
            Ok(((*id).clone(), phi))
        })
        .collect::<Result<_, EvalError>>()?;
    let per_kpi_phi: BTreeMap<String, f64> = phis.into_iter().collect();

    // Weak side.
    let weak_phis: Vec<f64> = kw.iter().map(|id| per_kpi_phi[id]).collect();
    let e_weak = if weak_phis.is_empty() {
        1.0 // neutral; beta is forced to 1 below
    } else {
        weak_score(&weak_phis, cfg.mu_weak)?.1
    };

    // Strong side, grouped by owning service.
    let mut phis_by_service: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for id in ks {
        let entry = original
            .catalog()
            .get(id)
            .ok_or_else(|| EvalError::IdMismatch {
                id: id.clone(),
                side: "original",
            })?;
        let service = entry
            .attrs
            .service
            .clone()
            .ok_or_else(|| EvalError::MissingService { id: id.clone() })?;
        phis_by_service.entry(service).or_default().push(per_kpi_phi[id]);
    }

    let (e_strong, weights_used) = if phis_by_service.is_empty() {
        (1.0, BTreeMap::new()) // neutral; beta is forced to 0 below
    } else {
        let weights = match weight_counts {
            Some(counts) => {
                let mut present = BTreeMap::new();
                for service in phis_by_service.keys() {
                    let count = counts.get(service).ok_or_else(|| EvalError::MissingWeight {
                        service: service.clone(),
                    })?;
                    present.insert(service.clone(), *count);
                }
                ServiceWeights::from_counts(&present)?
            }
            None => ServiceWeights::uniform(phis_by_service.keys().cloned())?,
        };
        let (_, e) = strong_score(&phis_by_service, &weights, cfg.mu_strong)?;
        (e, weights.as_map().clone())
    };

    let beta = if ks.is_empty() {
        0.0
    } else if kw.is_empty() {
        1.0
    } else {
        cfg.beta
    };
    let e_overall = overall_score(e_weak, e_strong, beta);

    Ok(EvaluationReport {
        per_kpi_phi,
        e_weak,
        e_strong,
        e_overall,
        config: ReportConfig {
            mu_weak: cfg.mu_weak,
            mu_strong: cfg.mu_strong,
            beta,
            alpha: cfg.alpha,
            weights: weights_used,
        },
        generated_at: cfg
            .generated_at
            .clone()
            .unwrap_or_else(|| EPOCH_TIMESTAMP.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CatalogEntry, KpiAttributes, KpiCatalog, KpiSeries};

    const TOL: f64 = 1e-12;

    #[test]
    fn weak_score_of_zero_distances_is_one() {
        let (phi, e) = weak_score(&[0.0, 0.0, 0.0], 0.2).unwrap();
        assert_eq!(phi, 0.0);
        assert_eq!(e, 1.0);
    }

    #[test]
    fn weak_score_at_threshold_is_half() {
        let (phi, e) = weak_score(&[0.1, 0.3], 0.2).unwrap();
        assert!((phi - 0.2).abs() < TOL);
        assert!((e - 0.5).abs() < TOL);
    }

    #[test]
    fn weak_score_rejects_empty_input() {
        assert!(matches!(weak_score(&[], 0.2).unwrap_err(), EvalError::EmptyPhis));
    }

    #[test]
    fn strong_score_single_service_matches_weak_score() {
        let phis = vec![0.1_f64, 0.4, 0.1];
        let by_service = BTreeMap::from([("cart".to_string(), phis.clone())]);
        let weights = ServiceWeights::uniform(["cart"]).unwrap();
        let (phi_s, e_s) = strong_score(&by_service, &weights, 0.2).unwrap();
        let (phi_w, e_w) = weak_score(&phis, 0.2).unwrap();
        assert!((phi_s - phi_w).abs() < TOL);
        assert!((e_s - e_w).abs() < TOL);
    }

    #[test]
    fn strong_score_weights_service_means() {
        let by_service = BTreeMap::from([
            ("a".to_string(), vec![0.1, 0.1]),
            ("b".to_string(), vec![0.3]),
        ]);
        let weights =
            ServiceWeights::from_counts(&BTreeMap::from([("a".into(), 75.0), ("b".into(), 25.0)]))
                .unwrap();
        let (phi, _) = strong_score(&by_service, &weights, 0.2).unwrap();
        assert!((phi - 0.15).abs() < TOL);
    }

    #[test]
    fn strong_score_of_zero_distances_is_one() {
        let by_service = BTreeMap::from([("a".to_string(), vec![0.0, 0.0])]);
        let weights = ServiceWeights::uniform(["a"]).unwrap();
        let (_, e) = strong_score(&by_service, &weights, 0.2).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn strong_score_rejects_unweighted_service() {
        let by_service = BTreeMap::from([
            ("a".to_string(), vec![0.1]),
            ("b".to_string(), vec![0.2]),
        ]);
        let weights = ServiceWeights::uniform(["a"]).unwrap();
        let err = strong_score(&by_service, &weights, 0.2).unwrap_err();
        assert!(matches!(err, EvalError::MissingWeight { .. }));
    }

    #[test]
    fn strong_score_rejects_weight_sum_violation() {
        let by_service = BTreeMap::from([("a".to_string(), vec![0.1])]);
        let weights = ServiceWeights(BTreeMap::from([("a".to_string(), 0.6)]));
        let err = strong_score(&by_service, &weights, 0.2).unwrap_err();
        assert!(matches!(err, EvalError::WeightSum { .. }));
    }

    #[test]
    fn overall_score_blends_by_beta() {
        assert_eq!(overall_score(0.3, 0.8, 1.0), 0.8);
        let tab = [
            // (e_weak, e_strong, published overall), percentages / 100
            (0.937, 0.991, 0.985),
            (0.955, 0.963, 0.961),
            (0.945, 0.953, 0.952),
            (0.919, 0.933, 0.930),
        ];
        for (w, s, want) in tab {
            let got = overall_score(w, s, 0.9);
            assert!((got - want).abs() <= 0.002, "{w}/{s}: {got} vs {want}");
        }
    }

    fn bundle(series: Vec<(&str, &str, Option<&str>, Vec<f64>)>) -> KpiBundle {
        let entries = series
            .iter()
            .map(|(id, domain, service, _)| CatalogEntry {
                id: id.to_string(),
                attrs: KpiAttributes {
                    domain: domain.to_string(),
                    labels: BTreeMap::new(),
                    service: service.map(str::to_string),
                },
                file: format!("{id}.csv"),
                interval: 60,
            })
            .collect();
        let catalog = KpiCatalog::new(entries).unwrap();
        let map = series
            .into_iter()
            .map(|(id, _, _, values)| {
                (id.to_string(), KpiSeries::from_values(id, 0, 60, values).unwrap())
            })
            .collect();
        KpiBundle::new(catalog, map).unwrap()
    }

    fn demo_bundles() -> (KpiBundle, KpiBundle) {
        let wave = vec![0.0, 2.0, 0.0, 2.0, 0.0, 2.0];
        let ramp = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let original = bundle(vec![
            ("weak1", "node", None, wave.clone()),
            ("weak2", "container", None, ramp.clone()),
            ("strong1", "grpc", Some("frontend"), wave.clone()),
            ("strong2", "istio", Some("cart"), ramp.clone()),
        ]);
        let simulated = bundle(vec![
            ("weak1", "node", None, wave.clone()),
            ("weak2", "container", None, ramp.clone()),
            ("strong1", "grpc", Some("frontend"), wave),
            ("strong2", "istio", Some("cart"), ramp),
        ]);
        (original, simulated)
    }

    fn ids(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_bundles_score_one() {
        let (original, simulated) = demo_bundles();
        let report = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1", "weak2"]),
            &ids(&["strong1", "strong2"]),
            None,
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(report.e_weak, 1.0);
        assert_eq!(report.e_strong, 1.0);
        assert_eq!(report.e_overall, 1.0);
        assert!(report.per_kpi_phi.values().all(|&phi| phi == 0.0));
    }

    #[test]
    fn single_weak_kpi_at_threshold_scores_half() {
        // One weak KPI whose ESBD is mu gives E = 0.5 with beta forced to 0.
        let wave = vec![0.0, 2.0, 0.0, 2.0, 0.0, 2.0];
        // Scale chosen so that esbd(wave, scaled) == 0.2 with alpha 0.5:
        // intensity exp(-1/(q-1)) = 0.2 -> q = 1 + 1/ln(5).
        let q = 1.0 + 1.0 / 5.0_f64.ln();
        let scaled: Vec<f64> = wave.iter().map(|v| v * q).collect();
        let original = bundle(vec![("weak1", "node", None, wave)]);
        let simulated = bundle(vec![("weak1", "node", None, scaled)]);
        let report = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1"]),
            &[],
            None,
            &EvalConfig::default(),
        )
        .unwrap();
        assert!((report.per_kpi_phi["weak1"] - 0.2).abs() < 1e-9);
        assert_eq!(report.config.beta, 0.0);
        assert!((report.e_overall - 0.5).abs() < 1e-9);
    }

    #[test]
    fn missing_id_is_a_mismatch_error() {
        let (original, simulated) = demo_bundles();
        let err = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1", "ghost"]),
            &[],
            None,
            &EvalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::IdMismatch { .. }));
    }

    #[test]
    fn strong_kpi_without_service_is_a_config_error() {
        let (original, simulated) = demo_bundles();
        let err = evaluate_bundles(
            &original,
            &simulated,
            &[],
            &ids(&["weak1"]), // weak1 has no service attribute
            None,
            &EvalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::MissingService { .. }));
    }

    #[test]
    fn report_blend_invariant_survives_roundtrip() {
        let (original, mut simulated) = demo_bundles();
        // Perturb one simulated series so scores are non-trivial.
        let bumped: Vec<f64> = simulated.series("weak1").unwrap().values().iter().map(|v| v * 3.0).collect();
        let series = simulated.series("weak1").unwrap().with_values(bumped, 60).unwrap();
        let mut map = simulated.series_map().clone();
        map.insert("weak1".into(), series);
        simulated = KpiBundle::new(simulated.catalog().clone(), map).unwrap();

        let report = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1", "weak2"]),
            &ids(&["strong1", "strong2"]),
            None,
            &EvalConfig::default(),
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&report, &path).unwrap();
        let reread = read_report(&path).unwrap();
        assert_eq!(reread, report);
        let blend = (1.0 - reread.config.beta) * reread.e_weak + reread.config.beta * reread.e_strong;
        assert_eq!(blend.to_bits(), reread.e_overall.to_bits());
    }

    #[test]
    fn report_writes_are_byte_identical() {
        let (original, simulated) = demo_bundles();
        let report = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1"]),
            &ids(&["strong1"]),
            None,
            &EvalConfig::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_report(&report, &p1).unwrap();
        write_report(&report, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let (original, simulated) = demo_bundles();
        let report = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1"]),
            &[],
            None,
            &EvalConfig::default(),
        )
        .unwrap();
        let err = write_report(&report, Path::new("/nonexistent-dir/report.json")).unwrap_err();
        assert!(matches!(err, EvalError::Io { .. }));
    }

    #[test]
    fn scores_decrease_as_any_phi_increases() {
        let mu = 0.2;
        let mut prev = f64::INFINITY;
        for phi in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let (_, e) = weak_score(&[0.05, phi], mu).unwrap();
            assert!(e < prev || (phi == 0.0 && e <= 1.0));
            assert!(e > 0.0 && e <= 1.0);
            prev = e;
        }
    }

    #[test]
    fn counts_are_normalized_over_present_services() {
        let (original, simulated) = demo_bundles();
        let counts = BTreeMap::from([
            ("frontend".to_string(), 30.0),
            ("cart".to_string(), 10.0),
            ("checkout".to_string(), 60.0), // no strong KPI; ignored
        ]);
        let report = evaluate_bundles(
            &original,
            &simulated,
            &ids(&["weak1"]),
            &ids(&["strong1", "strong2"]),
            Some(&counts),
            &EvalConfig::default(),
        )
        .unwrap();
        assert!((report.config.weights["frontend"] - 0.75).abs() < TOL);
        assert!((report.config.weights["cart"] - 0.25).abs() < TOL);
    }
}
