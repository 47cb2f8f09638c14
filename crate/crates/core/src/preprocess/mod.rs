//! Five-step KPI preprocessing: imputation, differentiation, resampling,
//! denoising and standardisation.
//!
//! The pipeline turns raw KPIs into incremental, low-noise series. KPIs bound
//! for the final evaluation skip the standardisation step; KPIs bound for
//! clustering run it so that shapes compare across scales.

mod spline;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{KpiBundle, KpiSeries, ModelError};
use spline::NaturalCubicSpline;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("series {id}: cannot impute with fewer than 2 observed values")]
    Unimputable { id: String },
    #[error("{op} needs at least {min} samples, got {len}")]
    TooShort {
        op: &'static str,
        min: usize,
        len: usize,
    },
    #[error("target interval {target}s is shorter than the sampling interval {interval}s")]
    TargetIntervalTooSmall { target: u64, interval: u64 },
    #[error("invalid preprocess config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Pipeline parameters; field names match the JSON config document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Interpolation margin: how many grid slots on each side of a missing
    /// segment contribute spline support points.
    pub interp_margin: usize,
    /// Apply first-order differencing (counter-style KPIs). Per-KPI catalog
    /// labels `cumulative: true` extend this when processing bundles.
    pub cumulative: bool,
    /// Resampling target interval in seconds.
    pub target_interval: u64,
    /// Kalman process variance as a fraction of the series variance.
    pub kalman_process_var_scale: f64,
    /// Kalman measurement variance as a fraction of the series variance.
    pub kalman_measure_var_scale: f64,
    /// Standardise to zero mean and unit variance at the end.
    pub standardize: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            interp_margin: 3,
            cumulative: false,
            target_interval: 60,
            kalman_process_var_scale: 0.01,
            kalman_measure_var_scale: 0.1,
            standardize: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.interp_margin == 0 {
            return Err(PreprocessError::InvalidConfig(
                "interp_margin must be >= 1".into(),
            ));
        }
        if self.target_interval == 0 {
            return Err(PreprocessError::InvalidConfig(
                "target_interval must be positive".into(),
            ));
        }
        for scale in [self.kalman_process_var_scale, self.kalman_measure_var_scale] {
            if scale.is_nan() || scale <= 0.0 {
                return Err(PreprocessError::InvalidConfig(
                    "kalman variance scales must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Steps a pipeline run actually executed, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineStep {
    Impute,
    Differentiate,
    Resample,
    Denoise,
    Standardize,
}

/// A preprocessed series plus the record of executed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub series: KpiSeries,
    pub steps: Vec<PipelineStep>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_variance(values: &[f64]) -> f64 {
    let mu = mean(values);
    values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64
}

/// Fill missing positions. Boundary runs take the nearest observed value;
/// each interior missing segment is filled by a cubic spline fitted on the
/// observed points within `margin` slots of the segment, falling back to
/// linear interpolation when fewer than four support points exist.
pub fn impute(series: &KpiSeries, margin: usize) -> Result<KpiSeries, PreprocessError> {
    if margin == 0 {
        return Err(PreprocessError::InvalidConfig(
            "interp_margin must be >= 1".into(),
        ));
    }
    if !series.has_missing() {
        return Ok(series.clone());
    }
    let observed_mask: Vec<bool> = series.missing_mask().iter().map(|&m| !m).collect();
    let observed = observed_mask.iter().filter(|&&o| o).count();
    if observed < 2 {
        return Err(PreprocessError::Unimputable {
            id: series.id().to_string(),
        });
    }

    let mut values = series.values().to_vec();
    let n = values.len();
    let first_obs = observed_mask.iter().position(|&o| o).expect("observed >= 2");
    let last_obs = n - 1 - observed_mask.iter().rev().position(|&o| o).expect("observed >= 2");
    let head = values[first_obs];
    values[..first_obs].fill(head);
    let tail = values[last_obs];
    values[last_obs + 1..].fill(tail);

    let mut i = first_obs;
    while i <= last_obs {
        if observed_mask[i] {
            i += 1;
            continue;
        }
        let seg_start = i;
        let mut seg_end = i;
        while !observed_mask[seg_end + 1] {
            seg_end += 1;
        }
        let window_start = seg_start.saturating_sub(margin);
        let window_end = (seg_end + margin).min(n - 1);
        let support: Vec<(f64, f64)> = (window_start..=window_end)
            .filter(|&j| observed_mask[j])
            .map(|j| (j as f64, series.values()[j]))
            .collect();
        // Maximal interior segments always have observed neighbours on both
        // sides, so the support brackets every query point.
        if support.len() >= 4 {
            let ts: Vec<f64> = support.iter().map(|(t, _)| *t).collect();
            let ys: Vec<f64> = support.iter().map(|(_, y)| *y).collect();
            let spline = NaturalCubicSpline::fit(&ts, &ys);
            for (j, slot) in values.iter_mut().enumerate().take(seg_end + 1).skip(seg_start) {
                *slot = spline.eval(j as f64);
            }
        } else {
            let left = (seg_start - 1) as f64;
            let right = (seg_end + 1) as f64;
            let (y_left, y_right) = (series.values()[seg_start - 1], series.values()[seg_end + 1]);
            for (j, slot) in values.iter_mut().enumerate().take(seg_end + 1).skip(seg_start) {
                let frac = (j as f64 - left) / (right - left);
                *slot = y_left + frac * (y_right - y_left);
            }
        }
        i = seg_end + 1;
    }

    Ok(series.with_values(values, series.interval())?)
}

/// First-order differencing: `out[i] = x[i + 1] - x[i]`.
pub fn differentiate(values: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    if values.len() < 2 {
        return Err(PreprocessError::TooShort {
            op: "differentiate",
            min: 2,
            len: values.len(),
        });
    }
    Ok(values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Sum non-overlapping windows of `floor(target / interval)` samples; a
/// trailing partial window is dropped rather than padded.
pub fn resample(values: &[f64], interval: u64, target: u64) -> Result<Vec<f64>, PreprocessError> {
    if target < interval {
        return Err(PreprocessError::TargetIntervalTooSmall { target, interval });
    }
    let ratio = (target / interval) as usize;
    if values.len() < ratio {
        return Err(PreprocessError::TooShort {
            op: "resample",
            min: ratio,
            len: values.len(),
        });
    }
    Ok(values
        .chunks_exact(ratio)
        .map(|window| window.iter().sum())
        .collect())
}

/// One-dimensional random-walk Kalman filter: identity transition and
/// observation, noise variances proportional to the series variance. A
/// constant series (zero variance) passes through unchanged.
pub fn denoise(values: &[f64], process_var_scale: f64, measure_var_scale: f64) -> Vec<f64> {
    let var = population_variance(values);
    if values.len() < 2 || var == 0.0 {
        return values.to_vec();
    }
    let q = process_var_scale * var;
    let r = measure_var_scale * var;
    let mut out = Vec::with_capacity(values.len());
    let mut estimate = values[0];
    let mut covariance = var;
    out.push(estimate);
    for &observation in &values[1..] {
        covariance += q;
        let gain = covariance / (covariance + r);
        estimate += gain * (observation - estimate);
        covariance *= 1.0 - gain;
        out.push(estimate);
    }
    out
}

/// Zero-mean unit-variance scaling with population standard deviation; a
/// constant series maps to zeros.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    let mu = mean(values);
    let sigma = population_variance(values).sqrt();
    if sigma == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mu) / sigma).collect()
}

/// Run the full pipeline on one series.
///
/// Order: impute, differentiate (cumulative KPIs only), resample, denoise,
/// standardise (when configured). The output interval reflects resampling.
pub fn run_pipeline(
    series: &KpiSeries,
    cfg: &PreprocessConfig,
) -> Result<PipelineOutput, PreprocessError> {
    cfg.validate()?;
    let mut steps = Vec::new();

    let imputed = impute(series, cfg.interp_margin)?;
    steps.push(PipelineStep::Impute);

    let mut values = imputed.values().to_vec();
    if cfg.cumulative {
        values = differentiate(&values)?;
        steps.push(PipelineStep::Differentiate);
    }

    let interval = series.interval();
    values = resample(&values, interval, cfg.target_interval)?;
    steps.push(PipelineStep::Resample);
    let out_interval = interval * (cfg.target_interval / interval);

    values = denoise(
        &values,
        cfg.kalman_process_var_scale,
        cfg.kalman_measure_var_scale,
    );
    steps.push(PipelineStep::Denoise);

    if cfg.standardize {
        values = standardize(&values);
        steps.push(PipelineStep::Standardize);
    }

    Ok(PipelineOutput {
        series: series.with_values(values, out_interval)?,
        steps,
    })
}

/// Preprocess every series of a bundle in parallel. A catalog label
/// `cumulative: true` turns on differencing for that KPI regardless of the
/// config default.
pub fn preprocess_bundle(
    bundle: &KpiBundle,
    cfg: &PreprocessConfig,
) -> Result<KpiBundle, PreprocessError> {
    cfg.validate()?;
    let entries: Vec<_> = bundle.iter().collect();
    let processed: Vec<(String, KpiSeries)> = entries
        .par_iter()
        .map(|(entry, series)| {
            let per_kpi = PreprocessConfig {
                cumulative: cfg.cumulative || entry.attrs.is_cumulative(),
                ..*cfg
            };
            run_pipeline(series, &per_kpi).map(|out| (entry.id.clone(), out.series))
        })
        .collect::<Result<_, _>>()?;
    let series = processed.into_iter().collect();
    Ok(KpiBundle::new(bundle.catalog().clone(), series)?)
}
