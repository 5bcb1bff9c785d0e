use serde::{Deserialize, Serialize};

use super::scale::{ScaleSeries, MIN_WINDOW};
use crate::error::{Error, Result};
use crate::serde_ext::ext_f64;

/// How the series behind an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    /// Greedy packing moments.
    BoxPacking,
    /// Integral moments (q > 1).
    BoxIntegral,
    /// Kernel-convolution moments.
    Conv,
    /// Raw series handed to [`slope_estimate`].
    Series,
}

impl EstimateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateKind::BoxPacking => "box-packing",
            EstimateKind::BoxIntegral => "box-integral",
            EstimateKind::Conv => "conv",
            EstimateKind::Series => "series",
        }
    }
}

/// Log-log slopes of a scale series over its window.
///
/// `lower`/`upper` are the extreme two-point chord slopes (the finite-data
/// stand-ins for liminf/limsup), `ols` the least-squares slope. All three
/// are −∞ when `sentinel` is set (empty E).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub q: f64,
    pub kind: EstimateKind,
    #[serde(with = "ext_f64")]
    pub lower: f64,
    #[serde(with = "ext_f64")]
    pub ols: f64,
    #[serde(with = "ext_f64")]
    pub upper: f64,
    #[serde(with = "ext_f64")]
    pub stderr: f64,
    pub r_max: f64,
    pub r_min: f64,
    pub samples: usize,
    pub proxy: bool,
    pub sentinel: bool,
}

impl DimensionEstimate {
    fn empty_set(q: f64, kind: EstimateKind, r_max: f64, r_min: f64, samples: usize) -> Self {
        DimensionEstimate {
            q,
            kind,
            lower: f64::NEG_INFINITY,
            ols: f64::NEG_INFINITY,
            upper: f64::NEG_INFINITY,
            stderr: 0.0,
            r_max,
            r_min,
            samples,
            proxy: false,
            sentinel: true,
        }
    }
}

/// Slopes of log(value) against log(1/r) over the samples with
/// `r_min ≤ r ≤ r_max` (the whole series when `window` is `None`).
pub fn slope_estimate(series: &ScaleSeries, window: Option<(f64, f64)>) -> Result<DimensionEstimate> {
    slope_estimate_kind(series, window, EstimateKind::Series)
}

pub(crate) fn slope_estimate_kind(
    series: &ScaleSeries,
    window: Option<(f64, f64)>,
    kind: EstimateKind,
) -> Result<DimensionEstimate> {
    let inside: Vec<_> = series
        .samples
        .iter()
        .filter(|s| window.map_or(true, |(hi, lo)| s.r <= hi && s.r >= lo))
        .collect();
    let (r_max, r_min) = match (inside.first(), inside.last()) {
        (Some(a), Some(b)) => (a.r, b.r),
        _ => (f64::NAN, f64::NAN),
    };
    if !inside.is_empty() && inside.iter().all(|s| s.value == 0.0) {
        return Ok(DimensionEstimate::empty_set(series.q, kind, r_max, r_min, inside.len()));
    }
    let pts: Vec<(f64, f64)> = inside
        .iter()
        .filter(|s| s.value > 0.0)
        .map(|s| (-s.r.ln(), s.value.ln()))
        .collect();
    if pts.len() < MIN_WINDOW {
        return Err(Error::InsufficientScales {
            usable: pts.len(),
            required: MIN_WINDOW,
            detail: format!(
                "q={}: {} samples in window [{r_min:.4e}, {r_max:.4e}], {} with positive value",
                series.q,
                inside.len(),
                pts.len()
            ),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();

    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let c = (b.1 - a.1) / (b.0 - a.0);
            lower = lower.min(c);
            upper = upper.max(c);
        }
    }
    // least squares is a weighted mean of chord slopes; clamp rounding
    let ols = slope.clamp(lower, upper);
    Ok(DimensionEstimate {
        q: series.q,
        kind,
        lower,
        ols,
        upper,
        stderr,
        r_max,
        r_min,
        samples: pts.len(),
        proxy: false,
        sentinel: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(q: f64, f: impl Fn(f64) -> f64) -> ScaleSeries {
        let samples = (3..=10).map(|j| {
            let r = 0.5f64.powi(j);
            (r, f(r))
        });
        ScaleSeries::new(q, samples.collect()).unwrap()
    }

    #[test]
    fn constant_series_is_flat() {
        let e = slope_estimate(&series(1.0, |_| 0.37), None).unwrap();
        assert_eq!((e.lower, e.ols, e.upper), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_power_law() {
        let e = slope_estimate(&series(0.0, |r| r.powi(-2)), None).unwrap();
        for v in [e.lower, e.ols, e.upper] {
            assert!((v - 2.0).abs() < 1e-12, "{v}");
        }
        assert!(e.stderr < 1e-12);
    }

    #[test]
    fn window_and_sentinels() {
        let s = series(2.0, |r| r);
        let e = slope_estimate(&s, Some((0.5f64.powi(4), 0.5f64.powi(8)))).unwrap();
        assert_eq!(e.samples, 5);
        assert_eq!(e.r_max, 0.0625);
        let e = slope_estimate(&series(2.0, |_| 0.0), None).unwrap();
        assert!(e.sentinel && e.ols == f64::NEG_INFINITY);
        let err = slope_estimate(&s, Some((0.5f64.powi(4), 0.5f64.powi(6)))).unwrap_err();
        assert!(matches!(err, Error::InsufficientScales { usable: 3, .. }));
    }

    #[test]
    fn chords_bracket_ols() {
        let e = slope_estimate(&series(0.0, |r| r.powf(-1.3) * (1.0 + 0.3 * (r * 40.0).sin())), None)
            .unwrap();
        assert!(e.lower < e.ols && e.ols < e.upper);
    }
}
