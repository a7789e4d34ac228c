//! Small numerical helpers shared across modules: compensated summation and
//! least-squares line fits.

/// Neumaier-compensated sum; order of `values` is respected so results are
/// reproducible for a fixed input order.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = KahanSum::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Least-squares fit `y ≈ intercept + slope · x`. Returns `None` for fewer
/// than two points or a degenerate abscissa.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Slope of `ln y` against `ln x`; points with non-positive coordinates are
/// skipped.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_fit(&lx, &ly).map(|(_, s)| s)
}

/// Geometric sweep of `count` step sizes from `max` down to `min`.
pub fn geometric_steps(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![max];
    }
    let ratio = (min / max).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| max * ratio.powi(i as i32)).collect()
}

/// `residual / max(|reference|, floor)`.
pub fn relative(residual: f64, reference: f64, floor: f64) -> f64 {
    residual / reference.abs().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0e16, 1.0, -1.0e16];
        v.extend(std::iter::repeat(1.0).take(9));
        assert_eq!(ordered_sum(v), 10.0);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let (b, m) = linear_fit(&xs, &ys).unwrap();
        assert!((b - 3.0).abs() < 1e-14 && (m + 0.5).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [1e-3, 1e-2, 1e-1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_steps_span_window() {
        let h = geometric_steps(1e-6, 1e-2, 5);
        assert_eq!(h.len(), 5);
        assert!((h[0] - 1e-2).abs() < 1e-18);
        assert!((h[4] / 1e-6 - 1.0).abs() < 1e-12);
    }
}
