//! Similarity metrics for KPI series.
//!
//! Three interchangeable metrics are exposed behind the [`SimilarityMetric`]
//! trait and a name-keyed [`MetricRegistry`]: `esbd` (shape + peak intensity),
//! `sbd` (cross-correlation shape distance) and `dtw` (banded dynamic time
//! warping with exact upper-bound pruning). All are pure functions over
//! immutable slices and safe to call from many threads.

mod dtw;
mod intensity;
mod sbd;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dtw::{dtw, DtwConfig};
pub use intensity::{detect_peaks, intensity_distance, PeakSet};
pub use sbd::{cross_correlation, shape_distance};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("series must be non-empty")]
    EmptySeries,
    #[error("shift {shift} out of range for lengths {len1} and {len2}")]
    ShiftOutOfRange { shift: isize, len1: usize, len2: usize },
    #[error("band radius {radius} cannot align series of lengths {len1} and {len2}")]
    InfeasibleBand { radius: usize, len1: usize, len2: usize },
    #[error("intensity factor alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
}

/// Parameters of the extended shape-based distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsbdConfig {
    /// Intensity factor: 0 is pure shape, 1 is pure intensity.
    pub alpha: f64,
    /// Minimum prominence for a local maximum to count as a peak.
    pub peak_min_prominence: f64,
    /// Value below which two KPIs are considered similar.
    pub similarity_threshold: f64,
}

impl Default for EsbdConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            peak_min_prominence: 0.0,
            similarity_threshold: 1.0,
        }
    }
}

impl EsbdConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(0.0..=1.0).contains(&self.alpha) || self.alpha.is_nan() {
            return Err(MetricError::InvalidAlpha(self.alpha));
        }
        Ok(())
    }
}

/// Extended shape-based distance in `[0, 2]`; lower means more similar.
///
/// Combines the shape term with the peak-intensity term:
/// `(1 - alpha) * shape + 2 * alpha * intensity`.
pub fn esbd(x1: &[f64], x2: &[f64], cfg: &EsbdConfig) -> Result<f64, MetricError> {
    cfg.validate()?;
    let shape = shape_distance(x1, x2)?;
    let intensity = intensity_distance(x1, x2, cfg.peak_min_prominence)?;
    Ok((1.0 - cfg.alpha) * shape + 2.0 * cfg.alpha * intensity)
}

/// A distance between two series; implementations are registered by name and
/// selected at runtime.
pub trait SimilarityMetric: Send + Sync {
    /// Registry key, e.g. `"esbd"`.
    fn name(&self) -> &'static str;
    /// Distance between two non-empty series; lower means more similar.
    fn distance(&self, x1: &[f64], x2: &[f64]) -> Result<f64, MetricError>;
}

/// ESBD behind the [`SimilarityMetric`] trait.
#[derive(Debug, Clone, Default)]
pub struct Esbd {
    pub config: EsbdConfig,
}

impl SimilarityMetric for Esbd {
    fn name(&self) -> &'static str {
        "esbd"
    }

    fn distance(&self, x1: &[f64], x2: &[f64]) -> Result<f64, MetricError> {
        esbd(x1, x2, &self.config)
    }
}

/// Plain shape-based distance behind the [`SimilarityMetric`] trait.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShapeBasedDistance;

impl SimilarityMetric for ShapeBasedDistance {
    fn name(&self) -> &'static str {
        "sbd"
    }

    fn distance(&self, x1: &[f64], x2: &[f64]) -> Result<f64, MetricError> {
        shape_distance(x1, x2)
    }
}

/// Banded DTW behind the [`SimilarityMetric`] trait.
#[derive(Debug, Clone, Default)]
pub struct DynamicTimeWarping {
    pub config: DtwConfig,
}

impl SimilarityMetric for DynamicTimeWarping {
    fn name(&self) -> &'static str {
        "dtw"
    }

    fn distance(&self, x1: &[f64], x2: &[f64]) -> Result<f64, MetricError> {
        dtw(x1, x2, &self.config)
    }
}

/// Name-keyed registry of similarity metrics.
#[derive(Default)]
pub struct MetricRegistry {
    metrics: BTreeMap<&'static str, Box<dyn SimilarityMetric>>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the three built-in metrics with the given parameters.
    pub fn with_defaults(esbd_cfg: EsbdConfig, dtw_cfg: DtwConfig) -> Self {
        let mut registry = Self::new();
        registry.register(Box::new(Esbd { config: esbd_cfg }));
        registry.register(Box::new(ShapeBasedDistance));
        registry.register(Box::new(DynamicTimeWarping { config: dtw_cfg }));
        registry
    }

    /// Register a metric under its own name; replaces any previous entry.
    pub fn register(&mut self, metric: Box<dyn SimilarityMetric>) {
        self.metrics.insert(metric.name(), metric);
    }

    pub fn get(&self, name: &str) -> Option<&dyn SimilarityMetric> {
        self.metrics.get(name).map(Box::as_ref)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.keys().copied().collect()
    }
}
