//! Phase-transition signatures over per-group metric tables: a single
//! piecewise-constant threshold, power-law critical scaling, correlation,
//! and coefficient-of-variation stability.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Paired observations, e.g. combined constraint vs. performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Option<Vec<String>>,
}

impl MetricSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "a metric series needs at least 3 points, got {}",
                x.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(invalid("series", "values must be finite"));
        }
        Ok(Self { x, y, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Points ordered by `x` (stable, so equal `x` keep input order).
    fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.x.iter().copied().zip(self.y.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub breakpoint: f64,
    pub pre_mean: f64,
    pub post_mean: f64,
    pub sse: f64,
    /// SSE of a single mean over all points.
    pub sse_single: f64,
    /// No split reduces the SSE at all.
    pub degenerate: bool,
}

fn sse_of(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sse = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, sse)
}

/// Best two-segment piecewise-constant fit. Candidate breakpoints are the
/// midpoints between consecutive distinct `x` values leaving at least two
/// points per side; the smallest breakpoint wins ties.
pub fn detect_threshold(series: &MetricSeries) -> Result<ThresholdResult> {
    if series.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "threshold detection needs at least 4 points, got {}",
            series.len()
        )));
    }
    let pairs = series.sorted_pairs();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (_, sse_single) = sse_of(&ys);

    let mut best: Option<ThresholdResult> = None;
    for split in 2..=pairs.len() - 2 {
        if pairs[split - 1].0 == pairs[split].0 {
            continue;
        }
        let (pre_mean, pre_sse) = sse_of(&ys[..split]);
        let (post_mean, post_sse) = sse_of(&ys[split..]);
        let sse = pre_sse + post_sse;
        if best.is_none_or(|b| sse < b.sse) {
            best = Some(ThresholdResult {
                breakpoint: 0.5 * (pairs[split - 1].0 + pairs[split].0),
                pre_mean,
                post_mean,
                sse,
                sse_single,
                degenerate: false,
            });
        }
    }
    let mut result = best.ok_or_else(|| {
        Error::InsufficientData("no breakpoint leaves two distinct points per side".into())
    })?;
    result.sse = result.sse.min(sse_single);
    result.degenerate = result.sse >= sse_single;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub x_c: f64,
    /// Exponent of `|x - x_c|^{-nu}`.
    pub nu: f64,
    pub r2: f64,
    pub intercept: f64,
    /// `y` has no variance in log space, so no exponent can be read off.
    pub no_power_law: bool,
}

struct LineFit {
    slope: f64,
    intercept: f64,
    r2: f64,
    flat: bool,
}

fn least_squares(u: &[f64], v: &[f64]) -> LineFit {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suu, mut suv, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        suu += (a - mu) * (a - mu);
        suv += (a - mu) * (b - mv);
        svv += (b - mv) * (b - mv);
    }
    let slope = if suu > 0.0 { suv / suu } else { 0.0 };
    let flat = svv <= f64::EPSILON * f64::EPSILON * n * mv.abs().max(1.0);
    let r2 = if flat || suu == 0.0 {
        0.0
    } else {
        (suv * suv / (suu * svv)).clamp(0.0, 1.0)
    };
    LineFit {
        slope,
        intercept: mv - slope * mu,
        r2,
        flat,
    }
}

/// Log-log least squares of `y` against `|x - x_c|` for each candidate
/// critical point; returns the candidate with the highest `r²` (smallest
/// `x_c` on ties). Candidates coinciding with an observed `x` are skipped.
pub fn fit_power_law(series: &MetricSeries, x_c_grid: &[f64]) -> Result<PowerLawFit> {
    if x_c_grid.is_empty() {
        return Err(Error::EmptyInput("critical-point grid"));
    }
    if let Some(y) = series.y.iter().find(|y| **y <= 0.0) {
        return Err(invalid("y", format!("{y} is not positive; power law needs y > 0")));
    }
    let ln_y: Vec<f64> = series.y.iter().map(|y| y.ln()).collect();

    let mut grid = x_c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best: Option<PowerLawFit> = None;
    for &x_c in &grid {
        if series.x.contains(&x_c) {
            continue;
        }
        let ln_dx: Vec<f64> = series.x.iter().map(|x| (x - x_c).abs().ln()).collect();
        let line = least_squares(&ln_dx, &ln_y);
        if best.is_none_or(|b| line.r2 > b.r2) {
            best = Some(PowerLawFit {
                x_c,
                nu: -line.slope,
                r2: line.r2,
                intercept: line.intercept,
                no_power_law: line.flat,
            });
        }
    }
    best.ok_or_else(|| invalid("x_c_grid", "every candidate coincides with an observed x"))
}

/// Sample Pearson correlation; `None` when either side has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 2 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityStats {
    pub std: f64,
    pub mean: f64,
    pub cv_percent: f64,
}

/// `100·std/mean` from already-computed moments.
pub fn cv_percent(std: f64, mean: f64) -> Result<f64> {
    if mean == 0.0 {
        return Err(invalid("mean", "coefficient of variation is undefined for zero mean"));
    }
    Ok(100.0 * std / mean)
}

/// Population std, mean and CV (%) of `values`.
pub fn stability_cv(values: &[f64]) -> Result<StabilityStats> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "stability needs at least 2 values, got {}",
            values.len()
        )));
    }
    let (mean, sse) = sse_of(values);
    let std = (sse / values.len() as f64).sqrt();
    Ok(StabilityStats {
        std,
        mean,
        cv_percent: cv_percent(std, mean)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, step: f64) -> Vec<f64> {
        (1..=n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn planted_step() {
        let x = grid(20, 0.01);
        let y: Vec<f64> = x.iter().map(|&v| if v < 0.1 - 1e-9 { 1.0 } else { 2.0 }).collect();
        let r = detect_threshold(&MetricSeries::new(x, y).unwrap()).unwrap();
        assert!(r.breakpoint > 0.09 && r.breakpoint <= 0.10);
        assert_eq!((r.pre_mean, r.post_mean), (1.0, 2.0));
        assert!(r.sse < 1e-20);
        assert!(!r.degenerate);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let x = grid(8, 0.1);
        let r = detect_threshold(&MetricSeries::new(x, vec![3.0; 8]).unwrap()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.pre_mean, r.post_mean);
        assert_eq!(r.sse, r.sse_single);
        // smallest admissible midpoint
        assert!((r.breakpoint - 0.25).abs() < 1e-12);
    }

    #[test]
    fn unsorted_input_is_sorted_first() {
        let x = vec![0.4, 0.1, 0.3, 0.2, 0.6, 0.5];
        let y = vec![5.0, 1.0, 1.0, 1.0, 5.0, 5.0];
        let r = detect_threshold(&MetricSeries::new(x, y).unwrap()).unwrap();
        assert!((r.breakpoint - 0.35).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        let s = MetricSeries::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(detect_threshold(&s), Err(Error::InsufficientData(_))));
        assert!(MetricSeries::new(vec![1.0, 2.0], vec![1.0, 2.0]).is_err());
    }

    fn planted_power_law(x_c: f64, nu: f64) -> MetricSeries {
        let x: Vec<f64> = (0..50).map(|i| 0.01 + 0.02 * i as f64).collect();
        let y = x.iter().map(|v: &f64| (v - x_c).abs().powf(-nu)).collect();
        MetricSeries::new(x, y).unwrap()
    }

    fn candidate_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn recovers_power_laws() {
        let grid = candidate_grid(0.1, 0.9, 0.0025);
        for (x_c, nu) in [(0.5, 0.7), (0.2, 1.0)] {
            let fit = fit_power_law(&planted_power_law(x_c, nu), &grid).unwrap();
            assert!((fit.x_c - x_c).abs() <= 0.01, "{fit:?}");
            assert!((fit.nu - nu).abs() <= 0.05, "{fit:?}");
            assert!(fit.r2 > 0.999);
        }
    }

    #[test]
    fn constant_y_is_not_a_power_law() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.1 + 0.05).collect();
        let fit = fit_power_law(&MetricSeries::new(x, vec![2.0; 10]).unwrap(), &[0.5, 1.5]).unwrap();
        assert!(fit.no_power_law);
        assert_eq!(fit.r2, 0.0);
        assert!(fit.nu.abs() < 1e-12);
    }

    #[test]
    fn power_law_errors() {
        let s = MetricSeries::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 2.0]).unwrap();
        assert!(fit_power_law(&s, &[0.5]).is_err());
        let s = MetricSeries::new(vec![1.0, 2.0, 3.0], vec![1.0, 1.5, 2.0]).unwrap();
        assert!(fit_power_law(&s, &[]).is_err());
        assert!(fit_power_law(&s, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &x).unwrap().unwrap() - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap().unwrap() + 1.0).abs() < 1e-15);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap().unwrap();
        // 3 / sqrt(2 · 4.666…)
        assert!((r - 0.981_980_506_061_965_7).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn stability_examples() {
        assert!((cv_percent(0.0765, 2.3477).unwrap() - 3.26).abs() < 0.01);
        assert!((cv_percent(0.0484, 1.8089).unwrap() - 2.68).abs() < 0.01);
        assert!((cv_percent(0.1281, 1.8380).unwrap() - 6.97).abs() < 0.01);
        assert_eq!(stability_cv(&[4.0, 4.0, 4.0]).unwrap().cv_percent, 0.0);
        let s = stability_cv(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.cv_percent), (2.0, 1.0, 50.0));
        assert!(stability_cv(&[1.0, -1.0]).is_err());
        assert!(stability_cv(&[1.0]).is_err());
    }
}
