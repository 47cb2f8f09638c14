//! Heuristic density-radius estimation from a KNN distance curve.
//!
//! Candidates are the flattest interior points of the descending curve; a
//! divide-and-conquer scan prunes steep stretches, tracks the point with the
//! most balanced endpoint slopes per segment and recurses on both sides. The
//! smallest surviving index — the largest distance on a descending curve —
//! becomes the radius; when no segment is flat enough the configured
//! `max_radius` stands in.

use serde::{Deserialize, Serialize};

use super::KnnCurve;

/// Thresholds of the radius estimator.
///
/// Slopes are computed on a normalized curve (distances divided by
/// `max_radius`, indices divided by the curve length) so the two slope
/// thresholds are scale-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiusEstimatorConfig {
    /// Upper bound of the density radius; also the fallback.
    pub max_radius: f64,
    /// Segments shorter than this stop the recursion.
    pub len_thresh: usize,
    /// Points whose both endpoint slopes exceed this are pruned as steep.
    pub slope_thresh: f64,
    /// A point is a candidate when its endpoint slopes differ by less.
    pub slope_diff_thresh: f64,
}

impl Default for RadiusEstimatorConfig {
    fn default() -> Self {
        Self {
            max_radius: 1.0,
            len_thresh: 5,
            slope_thresh: 1.0,
            slope_diff_thresh: 0.1,
        }
    }
}

/// Estimated density radius for `curve`, in `(0, max_radius]`.
pub fn estimate_radius(curve: &KnnCurve, cfg: &RadiusEstimatorConfig) -> f64 {
    let distances = curve.distances();
    let Some(left) = distances.iter().position(|&d| d <= cfg.max_radius) else {
        return cfg.max_radius; // the whole curve sits above the bound
    };
    let right = distances.len() - 1;

    let n = distances.len() as f64;
    let ys: Vec<f64> = distances.iter().map(|&d| d / cfg.max_radius).collect();
    let ts: Vec<f64> = (0..distances.len()).map(|i| i as f64 / n).collect();

    match scan_segment(&ys, &ts, left, right, cfg) {
        // Guard against a zero radius from an all-identical chunk.
        Some(index) => distances[index].max(f64::EPSILON),
        None => cfg.max_radius,
    }
}

fn min_opt(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

fn scan_segment(
    ys: &[f64],
    ts: &[f64],
    left: usize,
    right: usize,
    cfg: &RadiusEstimatorConfig,
) -> Option<usize> {
    if right - left < cfg.len_thresh {
        return None; // search area too small
    }

    // Track the interior point whose endpoint slopes balance best.
    let mut best_diff = 1.0; // max_radius in normalized units
    let mut flattest: Option<usize> = None;
    for i in left + 1..right {
        let left_slope = -(ys[i] - ys[left]) / (ts[i] - ts[left]);
        let right_slope = -(ys[i] - ys[right]) / (ts[i] - ts[right]);
        if left_slope > cfg.slope_thresh && right_slope > cfg.slope_thresh {
            continue; // steep portion
        }
        let diff = (left_slope - right_slope).abs();
        if diff < best_diff {
            best_diff = diff;
            flattest = Some(i);
        }
    }

    let mut candidate = if best_diff < cfg.slope_diff_thresh {
        flattest
    } else {
        None
    };

    let pivot = flattest?;
    candidate = min_opt(candidate, scan_segment(ys, ts, pivot, right, cfg));

    // Jump leftwards over the rise to the next flat portion.
    let mut next_pivot = pivot;
    for i in (left..pivot).rev() {
        if ys[i] - ys[pivot] > best_diff {
            next_pivot = i;
            break;
        }
    }
    candidate = min_opt(candidate, scan_segment(ys, ts, left, next_pivot, cfg));
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(distances: Vec<f64>) -> KnnCurve {
        KnnCurve::new(4, distances)
    }

    fn cfg(max_radius: f64) -> RadiusEstimatorConfig {
        RadiusEstimatorConfig {
            max_radius,
            len_thresh: 3,
            slope_thresh: 0.5,
            slope_diff_thresh: 0.1,
        }
    }

    #[test]
    fn step_curve_selects_the_low_plateau() {
        let c = curve(vec![5.0, 5.0, 5.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(estimate_radius(&c, &cfg(2.0)), 1.0);
    }

    #[test]
    fn all_above_max_radius_falls_back() {
        let c = curve(vec![9.0, 8.0, 7.0, 6.5, 6.0, 5.5]);
        assert_eq!(estimate_radius(&c, &cfg(2.0)), 2.0);
    }

    #[test]
    fn linear_curve_stays_in_range() {
        let c = curve((0..20).map(|i| 1.0 - i as f64 * 0.02).collect());
        let r = estimate_radius(&c, &RadiusEstimatorConfig::default());
        let min = c.distances().last().copied().unwrap();
        assert!(r >= min && r <= 1.0, "got {r}");
    }

    #[test]
    fn short_window_falls_back_to_max_radius() {
        let c = curve(vec![0.5, 0.4, 0.3]);
        let est = cfg(1.0);
        assert_eq!(estimate_radius(&c, &est), 1.0);
    }

    #[test]
    fn random_curves_stay_within_window_bounds() {
        let mut state = 11u64;
        for _ in 0..100 {
            let len = 8 + (state % 60) as usize;
            let mut distances: Vec<f64> = (0..len)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((state >> 33) as f64) / (u32::MAX as f64) * 3.0
                })
                .collect();
            distances.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let c = curve(distances);
            let est = RadiusEstimatorConfig::default();
            let r = estimate_radius(&c, &est);
            let window_min = c
                .distances()
                .iter()
                .copied()
                .filter(|&d| d <= est.max_radius)
                .fold(f64::INFINITY, f64::min);
            assert!(r <= est.max_radius);
            if window_min.is_finite() && r != est.max_radius {
                assert!(r >= window_min, "r {r} below window min {window_min}");
            }
        }
    }
}
