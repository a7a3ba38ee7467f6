//! Diagnostics on coherence curves: the log-log linearization that turns a
//! Gaussian decay into a slope-2 line, and the first-crossing dispersion
//! used to judge how well a time scale collapses an ensemble of curves.

use serde::{Deserialize, Serialize};

use crate::dynamics::CoherenceSeries;
use crate::error::{Error, Result};
use crate::timescales::TimescaleReport;

/// Points with `f` within this distance of 0 or 1 are masked.
pub const MASK_EPS: f64 = 1e-12;

/// `x = ln t`, `y = ln(−ln f)` with invalid points kept but masked.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSeries {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub valid: Vec<bool>,
}

impl LinearizedSeries {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn first_valid(&self) -> Option<usize> {
        self.valid.iter().position(|v| *v)
    }
}

pub fn linearize(series: &CoherenceSeries) -> Result<LinearizedSeries> {
    linearize_values(&series.times, &series.f)
}

pub fn linearize_values(times: &[f64], f: &[f64]) -> Result<LinearizedSeries> {
    if times.is_empty() || times.len() != f.len() {
        return Err(Error::Domain(
            "linearize needs equal-length, nonempty t and f".into(),
        ));
    }
    let n = times.len();
    let (mut x, mut y, mut valid) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for (&t, &fv) in times.iter().zip(f) {
        let ok = t > 0.0 && fv > MASK_EPS && fv < 1.0 - MASK_EPS;
        let (xi, yi) = if ok {
            (t.ln(), (-fv.ln()).ln())
        } else {
            (f64::NAN, f64::NAN)
        };
        let ok = ok && xi.is_finite() && yi.is_finite();
        x.push(xi);
        y.push(yi);
        valid.push(ok);
    }
    if !valid.iter().any(|v| *v) {
        return Err(Error::EmptyValid);
    }
    Ok(LinearizedSeries {
        times: times.to_vec(),
        x,
        y,
        valid,
    })
}

/// Which valid points enter the early-time fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeWindow {
    /// Valid points with `t <= limit` (fs).
    MaxTime(f64),
    /// The earliest fraction of the valid points.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Indices (into the series) of the points used.
    pub window: Vec<usize>,
}

/// Ordinary least squares of `y` on `x` over the early window.
pub fn early_slope(ls: &LinearizedSeries, window: SlopeWindow) -> Result<SlopeFit> {
    let valid: Vec<usize> = (0..ls.valid.len()).filter(|&i| ls.valid[i]).collect();
    let idx: Vec<usize> = match window {
        SlopeWindow::MaxTime(limit) => valid
            .into_iter()
            .filter(|&i| ls.times[i] <= limit)
            .collect(),
        SlopeWindow::Fraction(frac) => {
            let take = ((valid.len() as f64) * frac.clamp(0.0, 1.0)).round() as usize;
            valid.into_iter().take(take).collect()
        }
    };
    if idx.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            found: idx.len(),
        });
    }
    let n = idx.len() as f64;
    let mx = idx.iter().map(|&i| ls.x[i]).sum::<f64>() / n;
    let my = idx.iter().map(|&i| ls.y[i]).sum::<f64>() / n;
    let sxx: f64 = idx.iter().map(|&i| (ls.x[i] - mx).powi(2)).sum();
    let sxy: f64 = idx.iter().map(|&i| (ls.x[i] - mx) * (ls.y[i] - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all window points share one time".into()));
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        window: idx,
    })
}

/// Time scale used to nondimensionalize a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    TauE,
    TauGeo,
}

impl Scaling {
    pub fn of(self, r: &TimescaleReport) -> f64 {
        match self {
            Scaling::TauE => r.tau_e,
            Scaling::TauGeo => r.tau_geo,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scaling::TauE => "tau_e",
            Scaling::TauGeo => "tau_geo",
        }
    }
}

/// One correlation-function curve with the time scales of its scene.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseCurve {
    pub report: TimescaleReport,
    /// fs
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseStats {
    pub crossing_times: Vec<f64>,
    /// Sample standard deviation over mean.
    pub dispersion: f64,
}

/// First time (fs) at which `values` crosses `threshold`, linearly
/// interpolated between grid points.
pub fn first_crossing(times: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    let side = |v: f64| (v - threshold).signum();
    let start = values.iter().position(|&v| v != threshold)?;
    let s0 = side(values[start]);
    for i in (start + 1)..values.len() {
        if values[i] == threshold {
            return Some(times[i]);
        }
        if side(values[i]) != s0 {
            let (t0, t1, v0, v1) = (times[i - 1], times[i], values[i - 1], values[i]);
            return Some(t0 + (threshold - v0) * (t1 - t0) / (v1 - v0));
        }
    }
    None
}

/// Coefficient of variation; zero for fewer than two samples.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() / mean.abs()
}

pub fn collapse_stats(
    curves: &[CollapseCurve],
    threshold: f64,
    scaling: Scaling,
) -> Result<CollapseStats> {
    let mut crossing_times = Vec::with_capacity(curves.len());
    for (index, curve) in curves.iter().enumerate() {
        let tau = scaling.of(&curve.report);
        let t = first_crossing(&curve.times, &curve.values, threshold)
            .filter(|_| tau.is_finite() && tau > 0.0)
            .ok_or(Error::NonCrossing { index, threshold })?;
        crossing_times.push(t / tau);
    }
    Ok(CollapseStats {
        dispersion: coefficient_of_variation(&crossing_times),
        crossing_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{time_grid, AnalyticModel, CoherenceSeries};
    use crate::electrostatics::FlipCoefficients;
    use crate::measures::Measure;
    use crate::timescales::timescales;
    use std::f64::consts::PI;

    fn series(f: impl Fn(f64) -> f64, t_max: f64) -> CoherenceSeries {
        let t = time_grid(t_max, 101);
        let c = t.iter().map(|&x| f(x)).collect();
        CoherenceSeries::from_values(t, c)
    }

    #[test]
    fn gaussian_linearizes_exactly() {
        let ls = linearize(&series(|t| (-t * t / 2.0).exp(), 3.0)).unwrap();
        assert!(!ls.valid[0]);
        for i in 0..ls.x.len() {
            if ls.valid[i] {
                assert!((ls.y[i] - (2.0 * ls.x[i] - 2f64.ln())).abs() < 1e-9);
            }
        }
        let fit = early_slope(&ls, SlopeWindow::Fraction(0.3)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_has_unit_slope() {
        let ls = linearize(&series(|t| (-t).exp(), 3.0)).unwrap();
        let fit = early_slope(&ls, SlopeWindow::MaxTime(1.0)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn masking() {
        assert!(matches!(
            linearize_values(&[0.0, 1.0], &[1.0, 1.0]),
            Err(Error::EmptyValid)
        ));
        let ls = linearize_values(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.5, 0.0, 0.2]).unwrap();
        assert_eq!(ls.valid, vec![false, true, false, true]);
        assert_eq!(ls.x.len(), 4);
        assert!(matches!(
            early_slope(&ls, SlopeWindow::MaxTime(1.5)),
            Err(Error::InsufficientPoints { found: 1, .. })
        ));
    }

    #[test]
    fn crossing_interpolates() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(first_crossing(&t, &[0.0, 0.5, 1.5, 0.0], 1.0), Some(1.5));
        assert_eq!(first_crossing(&t, &[0.0, 0.5, 0.6, 0.7], 1.0), None);
        assert_eq!(first_crossing(&t, &[2.0, 1.0, 0.0, 0.0], 1.0), Some(1.0));
    }

    fn gaussian_curve(fc: &FlipCoefficients) -> CollapseCurve {
        let hbar = 0.6582119569;
        let report = timescales(fc, hbar);
        let times = time_grid(4.0 * report.tau_e, 4001);
        let s = CoherenceSeries::analytic(fc, &times, hbar, AnalyticModel::Gaussian);
        CollapseCurve {
            report,
            values: s.c.iter().map(|&c| Measure::Bm.closed(c).value).collect(),
            times,
        }
    }

    #[test]
    fn gaussian_curves_collapse_perfectly() {
        let curves: Vec<CollapseCurve> = [
            FlipCoefficients::from_local(&[0.03, 0.01], &[0.2]),
            FlipCoefficients::from_local(&[0.003], &[0.001, -0.004]),
            FlipCoefficients::from_local(&[1.0; 5], &[0.5; 5]),
        ]
        .iter()
        .map(gaussian_curve)
        .collect();
        let stats = collapse_stats(&curves, 1.0, Scaling::TauE).unwrap();
        let expected = (2.0 * 3f64.ln()).sqrt() / PI;
        assert!((expected - 0.47183).abs() < 1e-5);
        for t in &stats.crossing_times {
            assert!((t - expected).abs() < 1e-5, "{t}");
        }
        assert!(stats.dispersion < 1e-4);
    }

    #[test]
    fn identical_curves_have_zero_dispersion() {
        let c = gaussian_curve(&FlipCoefficients::from_local(&[0.03], &[0.04]));
        let stats = collapse_stats(&[c.clone(), c.clone(), c], 1.0, Scaling::TauE).unwrap();
        assert_eq!(stats.dispersion, 0.0);
    }

    #[test]
    fn rescaled_coefficients_do_not_move_crossings() {
        let fc = FlipCoefficients::from_local(&[0.03, -0.01, 0.02], &[0.05, 0.004]);
        let hbar = 0.6582119569;
        let build = |fc: &FlipCoefficients| {
            let report = timescales(fc, hbar);
            let times = time_grid(4.0 * report.tau_e, 801);
            let s = CoherenceSeries::analytic(fc, &times, hbar, AnalyticModel::Exact);
            CollapseCurve {
                report,
                values: s.c.iter().map(|&c| Measure::Bm.closed(c).value).collect(),
                times,
            }
        };
        let a = collapse_stats(&[build(&fc)], 1.0, Scaling::TauE).unwrap();
        let b = collapse_stats(&[build(&fc.scaled(7.5))], 1.0, Scaling::TauE).unwrap();
        assert!((a.crossing_times[0] - b.crossing_times[0]).abs() < 1e-12);
    }

    #[test]
    fn non_crossing_is_reported() {
        let mut c = gaussian_curve(&FlipCoefficients::from_local(&[0.03], &[0.04]));
        c.values.iter_mut().for_each(|v| *v = 0.75);
        match collapse_stats(&[c], 1.0, Scaling::TauE) {
            Err(Error::NonCrossing { index: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
