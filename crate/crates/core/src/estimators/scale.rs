use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_ext::ext_f64;

/// Minimum number of radii a slope fit is allowed to use.
pub const MIN_WINDOW: usize = 4;

/// Radii r/3 below `guard · resolution` are dropped from the default window.
pub const DEFAULT_RESOLUTION_GUARD: f64 = 1.0;

/// Default dyadic ladder: r_j = diam · 2^-j for j in this range.
pub const DEFAULT_LADDER: (i32, i32) = (3, 12);

/// Scales trimmed from each end of the default ladder.
pub const DEFAULT_TRIM: usize = 2;

/// Radii (strictly decreasing) and q-values of a scale study, with the
/// contiguous sub-range of radii used for slope fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    radii: Vec<f64>,
    q_values: Vec<f64>,
    window: (usize, usize),
}

impl ScaleGrid {
    /// Explicit radii, all of them in the window.
    pub fn new(radii: Vec<f64>, q_values: Vec<f64>) -> Result<Self> {
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::validation("radii must be positive and finite"));
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::validation("radii must be strictly decreasing"));
        }
        if q_values.iter().any(|q| !q.is_finite()) {
            return Err(Error::validation("q-values must be finite"));
        }
        let n = radii.len();
        let grid = ScaleGrid {
            radii,
            q_values,
            window: (0, n),
        };
        grid.check_window()?;
        Ok(grid)
    }

    /// `base · 2^-j` for `j` in `lo..=hi`.
    pub fn dyadic(base: f64, lo: i32, hi: i32, q_values: Vec<f64>) -> Result<Self> {
        if !(base > 0.0) {
            return Err(Error::validation(format!(
                "dyadic ladder needs a positive base length, got {base}"
            )));
        }
        Self::new((lo..=hi).map(|j| base * 0.5f64.powi(j)).collect(), q_values)
    }

    /// The default grid for a support of diameter `diam` whose atomic
    /// approximation has length scale `resolution`: the dyadic ladder, the
    /// two largest and two smallest scales trimmed, and any radius with
    /// r/3 < guard · resolution removed.
    pub fn default_for(diam: f64, resolution: f64, q_values: Vec<f64>) -> Result<Self> {
        Self::default_with(diam, resolution, q_values, DEFAULT_RESOLUTION_GUARD)
    }

    pub fn default_with(
        diam: f64,
        resolution: f64,
        q_values: Vec<f64>,
        guard: f64,
    ) -> Result<Self> {
        let (lo, hi) = DEFAULT_LADDER;
        let mut grid = Self::dyadic_unchecked(diam, lo, hi, q_values)?;
        let n = grid.radii.len();
        let mut start = DEFAULT_TRIM;
        let mut end = n - DEFAULT_TRIM;
        while end > start && grid.radii[end - 1] / 3.0 < guard * resolution {
            end -= 1;
        }
        if end < start {
            start = end;
        }
        grid.window = (start, end);
        grid.check_window().map_err(|e| match e {
            Error::InsufficientScales { usable, required, .. } => Error::InsufficientScales {
                usable,
                required,
                detail: format!(
                    "diameter {diam:.4e}, resolution {resolution:.4e}: radii below {:.4e} are \
                     unresolved",
                    3.0 * guard * resolution
                ),
            },
            other => other,
        })?;
        Ok(grid)
    }

    fn dyadic_unchecked(base: f64, lo: i32, hi: i32, q_values: Vec<f64>) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InsufficientScales {
                usable: 0,
                required: MIN_WINDOW,
                detail: format!("support diameter is {base}; no scale range exists"),
            });
        }
        let radii: Vec<f64> = (lo..=hi).map(|j| base * 0.5f64.powi(j)).collect();
        let n = radii.len();
        Ok(ScaleGrid {
            radii,
            q_values,
            window: (0, n),
        })
    }

    fn check_window(&self) -> Result<()> {
        let len = self.window.1.saturating_sub(self.window.0);
        if len < MIN_WINDOW {
            return Err(Error::InsufficientScales {
                usable: len,
                required: MIN_WINDOW,
                detail: "scale window too short".into(),
            });
        }
        Ok(())
    }

    /// Restricts the window to indices `lo..hi` of the radii.
    pub fn with_window(mut self, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > self.radii.len() {
            return Err(Error::validation(format!(
                "window {lo}..{hi} invalid for {} radii",
                self.radii.len()
            )));
        }
        self.window = (lo, hi);
        self.check_window()?;
        Ok(self)
    }

    pub fn with_q_values(mut self, q_values: Vec<f64>) -> Self {
        self.q_values = q_values;
        self
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q_values
    }

    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    /// The radii used for fitting, largest first.
    pub fn window_radii(&self) -> &[f64] {
        &self.radii[self.window.0..self.window.1]
    }
}

/// How a run chooses its radii.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleSpec {
    /// [`ScaleGrid::default_for`] on the measure's diameter and resolution.
    #[default]
    Default,
    /// r_k = L · base^−(from + k/steps) for k = 0..=(to − from)·steps, with
    /// L the support diameter when `relative`, else 1.
    Ladder {
        #[serde(default = "default_base")]
        base: f64,
        from: f64,
        to: f64,
        #[serde(default = "default_steps")]
        steps: u32,
        #[serde(default = "default_relative")]
        relative: bool,
    },
    /// Explicit radii, all in the window.
    Radii { radii: Vec<f64> },
}

fn default_base() -> f64 {
    2.0
}

fn default_steps() -> u32 {
    1
}

fn default_relative() -> bool {
    true
}

/// Upper bound on ladder length; longer ladders are configuration mistakes.
const MAX_LADDER: usize = 1000;

impl ScaleSpec {
    pub fn ladder(base: f64, from: f64, to: f64, steps: u32) -> Self {
        ScaleSpec::Ladder {
            base,
            from,
            to,
            steps,
            relative: true,
        }
    }

    /// Radii only; `diam` is used by relative ladders.
    pub fn radii(&self, diam: f64) -> Result<Vec<f64>> {
        match self {
            ScaleSpec::Default => {
                let (lo, hi) = DEFAULT_LADDER;
                Ok((lo..=hi).map(|j| diam * 0.5f64.powi(j)).collect())
            }
            ScaleSpec::Ladder {
                base,
                from,
                to,
                steps,
                relative,
            } => {
                if !(*base > 1.0 && base.is_finite()) {
                    return Err(Error::validation(format!("scales.base must exceed 1, got {base}")));
                }
                if !(from.is_finite() && to.is_finite() && to > from) {
                    return Err(Error::validation(format!(
                        "scales.to must exceed scales.from, got {from}..{to}"
                    )));
                }
                if *steps == 0 {
                    return Err(Error::validation("scales.steps must be at least 1"));
                }
                let count = ((to - from) * *steps as f64).round();
                if count >= MAX_LADDER as f64 {
                    return Err(Error::validation(format!("scales ladder too long ({count} steps)")));
                }
                let scale = if *relative { diam } else { 1.0 };
                Ok((0..=count as usize)
                    .map(|k| scale * base.powf(-(from + k as f64 / *steps as f64)))
                    .collect())
            }
            ScaleSpec::Radii { radii } => Ok(radii.clone()),
        }
    }

    pub fn grid(&self, diam: f64, resolution: f64, q_values: Vec<f64>) -> Result<ScaleGrid> {
        match self {
            ScaleSpec::Default => ScaleGrid::default_for(diam, resolution, q_values),
            other => ScaleGrid::new(other.radii(diam)?, q_values),
        }
    }
}

/// One sample of a scale series; `value == 0` is the empty-set sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSample {
    pub r: f64,
    #[serde(with = "ext_f64")]
    pub value: f64,
}

/// r ↦ moment for one q, radii strictly decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSeries {
    pub q: f64,
    pub samples: Vec<ScaleSample>,
}

impl ScaleSeries {
    pub fn new(q: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].0 >= w[0].0) {
            return Err(Error::validation("series radii must be strictly decreasing"));
        }
        if samples
            .iter()
            .any(|&(r, v)| !(r > 0.0 && r.is_finite()) || !(v >= 0.0 && v.is_finite()))
        {
            return Err(Error::validation(
                "series samples need positive radii and finite non-negative values",
            ));
        }
        Ok(ScaleSeries {
            q,
            samples: samples
                .into_iter()
                .map(|(r, value)| ScaleSample { r, value })
                .collect(),
        })
    }

    pub fn is_empty_set(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.value == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_trims_and_guards() {
        let g = ScaleGrid::default_for(1.0, 1e-9, vec![0.0]).unwrap();
        assert_eq!(g.radii().len(), 10);
        assert_eq!(g.window_radii().len(), 6);
        assert_eq!(g.window_radii()[0], 1.0 / 32.0);
        // resolution 2^-10: r/3 >= 2^-10 keeps r = 2^-5..2^-8
        let g = ScaleGrid::default_for(1.0, 1.0 / 1024.0, vec![0.0]).unwrap();
        assert_eq!(g.window_radii().len(), 4);
        assert_eq!(*g.window_radii().last().unwrap(), 1.0 / 256.0);
        let err = ScaleGrid::default_for(1.0, 0.01, vec![0.0]).unwrap_err();
        assert!(matches!(err, Error::InsufficientScales { .. }));
    }

    #[test]
    fn ladder_spec() {
        let spec: ScaleSpec =
            serde_json::from_str(r#"{"type":"ladder","base":3,"from":1,"to":2,"steps":2}"#).unwrap();
        let r = spec.radii(2.0).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[0] - 2.0 / 3.0).abs() < 1e-15 && (r[2] - 2.0 / 9.0).abs() < 1e-15);
        assert!((r[1] - 2.0 * 3f64.powf(-1.5)).abs() < 1e-15);
        assert!(serde_json::from_str::<ScaleSpec>(r#"{"type":"ladder","from":1,"to":2,"x":0}"#).is_err());
        assert!(ScaleSpec::ladder(2.0, 3.0, 2.0, 1).radii(1.0).is_err());
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(ScaleGrid::new(vec![0.1, 0.2, 0.05, 0.01], vec![]).is_err());
        assert!(ScaleGrid::new(vec![0.4, 0.2, 0.1], vec![]).is_err());
        assert!(ScaleGrid::new(vec![0.4, 0.2, 0.1, 0.0], vec![]).is_err());
        assert!(ScaleSeries::new(0.0, vec![(0.1, 1.0), (0.1, 1.0)]).is_err());
    }
}
