//! Peak detection and the peak-ratio intensity distance.

use super::MetricError;

/// Peaks of a series: strictly increasing indices and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl PeakSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of peaks; at least one by construction.
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Prominence of the local maximum at `i`: height above the higher of the two
/// minima separating it from the nearest greater value on each side.
fn prominence(x: &[f64], i: usize) -> f64 {
    let peak = x[i];
    let mut left_base = peak;
    for &v in x[..i].iter().rev() {
        if v > peak {
            break;
        }
        if v < left_base {
            left_base = v;
        }
    }
    let mut right_base = peak;
    for &v in &x[i + 1..] {
        if v > peak {
            break;
        }
        if v < right_base {
            right_base = v;
        }
    }
    peak - left_base.max(right_base)
}

/// Strict local maxima with prominence at least `min_prominence`.
///
/// When no interior local maximum qualifies (monotone or constant series, or
/// everything filtered out), the global maximum is returned as a single
/// pseudo-peak so that a peak mean is always defined.
pub fn detect_peaks(x: &[f64], min_prominence: f64) -> Result<PeakSet, MetricError> {
    if x.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] > x[i + 1] && prominence(x, i) >= min_prominence {
            indices.push(i);
            values.push(x[i]);
        }
    }
    if indices.is_empty() {
        let (argmax, &max) = x
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        // max_by keeps the last maximum; use the first occurrence instead.
        let first = x.iter().position(|&v| v == max).unwrap_or(argmax);
        indices.push(first);
        values.push(max);
    }
    Ok(PeakSet { indices, values })
}

/// Peak-ratio intensity distance in `[0, 1]`.
///
/// With `q` the symmetric ratio of peak means, returns `exp(-1 / |q - 1|)`.
/// `q == 1` yields 0 by continuity; a single zero peak mean sends `q` to
/// infinity and the distance to its limit 1; two zero means compare equal.
pub fn intensity_distance(x1: &[f64], x2: &[f64], min_prominence: f64) -> Result<f64, MetricError> {
    let m1 = detect_peaks(x1, min_prominence)?.mean();
    let m2 = detect_peaks(x2, min_prominence)?.mean();
    let q = match (m1 == 0.0, m2 == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => return Ok(1.0),
        (false, false) => (m1 / m2).max(m2 / m1),
    };
    if q == 1.0 {
        return Ok(0.0);
    }
    Ok((-1.0 / (q - 1.0).abs()).exp())
}
