//! Cross-correlation and the shape-based distance (SBD).

use super::MetricError;

/// Cross-correlation `R_k` by direct overlap summation.
///
/// For `k >= 0` the overlap pairs `x1[i]` with `x2[i + k]`; a negative shift
/// swaps the roles: `R_k(x1, x2) = R_{-k}(x2, x1)`. Positions past either end
/// contribute nothing, which matches tail zero-padding of the shorter series.
pub fn cross_correlation(x1: &[f64], x2: &[f64], shift: isize) -> Result<f64, MetricError> {
    if x1.is_empty() || x2.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    let m = x1.len().max(x2.len());
    if shift.unsigned_abs() >= m {
        return Err(MetricError::ShiftOutOfRange {
            shift,
            len1: x1.len(),
            len2: x2.len(),
        });
    }
    if shift < 0 {
        return cross_correlation(x2, x1, -shift);
    }
    Ok(overlap_sum(x1, x2, shift as usize))
}

fn overlap_sum(x1: &[f64], x2: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    while i < x1.len() && i + k < x2.len() {
        acc += x1[i] * x2[i + k];
        i += 1;
    }
    acc
}

/// Shape-based distance in `[0, 2]`: one minus the maximum normalized
/// cross-correlation over all `2m - 1` shifts.
///
/// Unequal lengths are handled by implicit tail zero-padding. Degenerate
/// all-zero inputs: both zero gives 0, exactly one zero gives 1 (uncorrelated).
pub fn shape_distance(x1: &[f64], x2: &[f64]) -> Result<f64, MetricError> {
    if x1.is_empty() || x2.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    let r0x = overlap_sum(x1, x1, 0);
    let r0y = overlap_sum(x2, x2, 0);
    match (r0x == 0.0, r0y == 0.0) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(1.0),
        _ => {}
    }
    let denom = (r0x * r0y).sqrt();
    let m = x1.len().max(x2.len()) as isize;
    let mut best = f64::NEG_INFINITY;
    for k in -(m - 1)..m {
        let r = if k < 0 {
            overlap_sum(x2, x1, (-k) as usize)
        } else {
            overlap_sum(x1, x2, k as usize)
        };
        let ncc = r / denom;
        if ncc > best {
            best = ncc;
        }
    }
    // Rounding may push the self-correlation a hair past 1; keep the range.
    Ok((1.0 - best).clamp(0.0, 2.0))
}
