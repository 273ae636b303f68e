//! Fitted-constant envelope tests: a bound `lhs << rhs` is accepted when the
//! worst ratio `lhs / rhs` is finite and does not grow with the size
//! parameter.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub name: String,
    pub sizes: Vec<f64>,
    /// Worst ratio at each size.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Least-squares slope of `ln ratio` against `ln size`.
    pub log_slope: f64,
    pub slope_threshold: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Least-squares slope of `ln y` on `ln x`; points with `y <= 0` carry no
/// growth information and are skipped. Fewer than two usable points give 0.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Collects `(size, ratio)` observations and summarizes them.
#[derive(Clone, Debug, Default)]
pub struct EnvelopeFit {
    rows: Vec<(f64, f64)>,
}

impl EnvelopeFit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, size: f64, ratio: f64) {
        self.rows.push((size, ratio));
    }

    pub fn extend(&mut self, size: f64, ratios: impl IntoIterator<Item = f64>) {
        for r in ratios {
            self.push(size, r);
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn summarize(&self, name: &str, slope_threshold: f64) -> EnvelopeSummary {
        let mut sizes: Vec<f64> = self.rows.iter().map(|r| r.0).collect();
        sizes.sort_by(f64::total_cmp);
        sizes.dedup();
        let ratios: Vec<f64> = sizes
            .iter()
            .map(|&s| {
                self.rows
                    .iter()
                    .filter(|r| r.0 == s)
                    .map(|r| r.1)
                    // NaN must poison the maximum rather than vanish in it
                    .fold(0.0, |m: f64, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) })
            })
            .collect();
        let max_ratio = ratios
            .iter()
            .fold(0.0, |m: f64, &r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) });
        let log_slope = log_slope(&sizes, &ratios);
        let pass = !self.rows.is_empty() && max_ratio.is_finite() && log_slope <= slope_threshold;
        EnvelopeSummary {
            name: name.to_string(),
            sizes,
            ratios,
            max_ratio,
            log_slope,
            slope_threshold,
            samples: self.rows.len(),
            pass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.25)).collect();
        assert!((log_slope(&xs, &ys) - 0.25).abs() < 1e-12);
        assert_eq!(log_slope(&[5.0], &[1.0]), 0.0);
    }

    #[test]
    fn summary_keeps_worst_per_size() {
        let mut fit = EnvelopeFit::new();
        fit.extend(10.0, [0.5, 2.0, 1.0]);
        fit.extend(100.0, [1.0, 2.0]);
        let s = fit.summarize("flat", 0.15);
        assert_eq!(s.ratios, vec![2.0, 2.0]);
        assert_eq!(s.log_slope, 0.0);
        assert!(s.pass);

        let mut fit = EnvelopeFit::new();
        fit.extend(10.0, [1.0]);
        fit.extend(1000.0, [f64::NAN]);
        assert!(!fit.summarize("nan", 0.15).pass);

        let mut fit = EnvelopeFit::new();
        fit.extend(10.0, [1.0]);
        fit.extend(100.0, [2.0]);
        assert!(!fit.summarize("growing", 0.15).pass);
    }
}
