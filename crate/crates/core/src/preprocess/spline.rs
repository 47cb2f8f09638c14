//! Natural cubic spline interpolation over irregular knots.

/// Natural cubic spline through `(t_i, y_i)` knots with zero second
/// derivative at both ends. Two knots degenerate to a straight line.
pub(crate) struct NaturalCubicSpline {
    ts: Vec<f64>,
    ys: Vec<f64>,
    second_derivs: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Knots must be strictly increasing in `t`, at least two of them.
    pub(crate) fn fit(ts: &[f64], ys: &[f64]) -> Self {
        assert!(ts.len() >= 2 && ts.len() == ys.len());
        debug_assert!(ts.windows(2).all(|w| w[0] < w[1]));
        let n = ts.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the tridiagonal system for the interior
            // second derivatives.
            let mut sub = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut sup = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = ts[i] - ts[i - 1];
                let h1 = ts[i + 1] - ts[i];
                sub[i] = h0;
                diag[i] = 2.0 * (h0 + h1);
                sup[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let upper = if i + 1 < n - 1 { sup[i] * m[i + 1] } else { 0.0 };
                m[i] = (rhs[i] - upper) / diag[i];
            }
        }
        Self {
            ts: ts.to_vec(),
            ys: ys.to_vec(),
            second_derivs: m,
        }
    }

    /// Evaluate at `t`; values outside the knot range are clamped onto the
    /// first/last segment.
    pub(crate) fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        let seg = match self.ts.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.ts[seg], self.ts[seg + 1]);
        let (y0, y1) = (self.ys[seg], self.ys[seg + 1]);
        let (m0, m1) = (self.second_derivs[seg], self.second_derivs[seg + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_exactly() {
        let ts = [0.0, 1.0, 2.5, 4.0, 5.0];
        let ys = [1.0, -1.0, 3.0, 0.5, 2.0];
        let spline = NaturalCubicSpline::fit(&ts, &ys);
        for (t, y) in ts.iter().zip(&ys) {
            assert!((spline.eval(*t) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_linear_data() {
        let ts: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t - 2.0).collect();
        let spline = NaturalCubicSpline::fit(&ts, &ys);
        for i in 0..70 {
            let t = i as f64 * 0.1;
            assert!((spline.eval(t) - (3.0 * t - 2.0)).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn two_knots_degenerate_to_a_line() {
        let spline = NaturalCubicSpline::fit(&[0.0, 2.0], &[1.0, 5.0]);
        assert!((spline.eval(1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tracks_a_smooth_curve() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| (t * 0.4).sin()).collect();
        let spline = NaturalCubicSpline::fit(&ts, &ys);
        for i in 10..180 {
            let t = i as f64 * 0.1;
            assert!((spline.eval(t) - (t * 0.4).sin()).abs() < 0.01, "t={t}");
        }
    }
}
