//! Dynamic time warping with a Sakoe–Chiba band and upper-bound pruning.
//!
//! Per-point cost is the squared difference and the returned value is the
//! accumulated (un-square-rooted) cost of the optimal warping path. Pruning
//! never changes the result: cells whose cumulative cost exceeds a known
//! feasible path cost cannot lie on an optimal path, so skipping them is
//! exact and the pruned run is bit-identical to the unpruned one.

use serde::{Deserialize, Serialize};

use super::MetricError;

/// DTW parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtwConfig {
    /// Sakoe–Chiba window: warping is restricted to `|i - j| <= band_radius`.
    /// `None` leaves the path unconstrained.
    pub band_radius: Option<usize>,
    /// Skip cells that provably cannot lie on an optimal path.
    pub pruning: bool,
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self {
            band_radius: None,
            pruning: true,
        }
    }
}

#[inline]
fn sq(a: f64, b: f64) -> f64 {
    let d = a - b;
    d * d
}

/// Cost of the canonical in-band path: along the diagonal, then straight to
/// the corner. Serves as the pruning upper bound.
fn canonical_path_cost(x1: &[f64], x2: &[f64]) -> f64 {
    let shared = x1.len().min(x2.len());
    let mut cost = 0.0;
    for i in 0..shared {
        cost += sq(x1[i], x2[i]);
    }
    if x1.len() > shared {
        for v in &x1[shared..] {
            cost += sq(*v, x2[shared - 1]);
        }
    } else {
        for v in &x2[shared..] {
            cost += sq(x1[shared - 1], *v);
        }
    }
    cost
}

/// Accumulated squared-difference cost of the optimal warping path.
pub fn dtw(x1: &[f64], x2: &[f64], cfg: &DtwConfig) -> Result<f64, MetricError> {
    let n1 = x1.len();
    let n2 = x2.len();
    if n1 == 0 || n2 == 0 {
        return Err(MetricError::EmptySeries);
    }
    let band = cfg.band_radius.unwrap_or(n1.max(n2));
    if band < n1.abs_diff(n2) {
        return Err(MetricError::InfeasibleBand {
            radius: band,
            len1: n1,
            len2: n2,
        });
    }
    // The canonical path stays inside any feasible band, so its cost bounds
    // the optimum from above. Without pruning the bound is never consulted.
    let upper_bound = if cfg.pruning {
        canonical_path_cost(x1, x2)
    } else {
        f64::INFINITY
    };

    let mut prev = vec![f64::INFINITY; n2];
    let mut cur = vec![f64::INFINITY; n2];
    // First column that can still reach a finite value in the current row.
    let mut next_start = 0usize;
    // Last finite column of the previous row; columns beyond it have no
    // finite cell above them.
    let mut prev_finite_end = 0usize;

    for (i, &xi) in x1.iter().enumerate() {
        cur.fill(f64::INFINITY);
        let lo = i.saturating_sub(band).max(next_start);
        let hi = i.saturating_add(band).min(n2 - 1);
        let mut row_has_finite = false;
        let mut finite_end = 0usize;

        for j in lo..=hi {
            let local = sq(xi, x2[j]);
            let value = if i == 0 && j == 0 {
                local
            } else {
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let best = up.min(diag).min(left);
                if best.is_infinite() {
                    f64::INFINITY
                } else {
                    local + best
                }
            };

            if value > upper_bound || value.is_infinite() {
                // Beyond the previous row's reach nothing to the right can
                // become finite either.
                if row_has_finite && j > prev_finite_end {
                    break;
                }
                if !row_has_finite {
                    next_start = j + 1;
                }
            } else {
                cur[j] = value;
                if !row_has_finite {
                    row_has_finite = true;
                    next_start = j;
                }
                finite_end = j;
            }
        }

        debug_assert!(row_has_finite, "upper bound excluded every in-band path");
        prev_finite_end = finite_end;
        std::mem::swap(&mut prev, &mut cur);
    }

    Ok(prev[n2 - 1])
}
