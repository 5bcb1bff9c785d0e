//! Dimension functions from scale series: τ̂(q) through packing or integral
//! moments, and τ̂^{q,s} through kernel-convolution moments.

use serde::{Deserialize, Serialize};

use super::moments::{integral_from_table, GreedyPackings, MassTable, PotentialTable};
use super::scale::{ScaleGrid, ScaleSample, ScaleSeries};
use super::slope::{slope_estimate_kind, DimensionEstimate, EstimateKind};
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, MeasureView};

/// Moment used for q > 1 in [`tau_box`]; q ≤ 1 always uses packings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    #[default]
    Packing,
    Integral,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TauOptions {
    pub mode: MomentMode,
    /// Evaluate ball masses in ascending atom order (bit-identical to a
    /// brute-force scan) instead of adding whole index cells.
    pub exact_masses: bool,
    /// Relative tolerance of the accelerated potential; exact if `None`.
    pub conv_tolerance: Option<f64>,
}

/// Ball-mass tables of one view at every radius of a window.
#[derive(Debug)]
pub struct BoxTables<'a> {
    mu: &'a DiscreteMeasure,
    tables: Vec<MassTable>,
}

impl<'a> BoxTables<'a> {
    pub fn new(view: &MeasureView<'a>, radii: &[f64], exact: bool) -> Self {
        BoxTables {
            mu: view.measure(),
            tables: radii.iter().map(|&r| MassTable::new(view, r, exact)).collect(),
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        self.tables.iter().map(MassTable::radius).collect()
    }

    /// Moment series for each q over `centres` (a subset of the tables'
    /// centres), using only radii ≤ `r_cap`.
    pub fn series(
        &self,
        centres: &[usize],
        q_values: &[f64],
        mode: MomentMode,
        r_cap: f64,
    ) -> Vec<(ScaleSeries, EstimateKind)> {
        let used: Vec<&MassTable> = self.tables.iter().filter(|t| t.radius() <= r_cap).collect();
        let packings: Vec<GreedyPackings<'_>> = used
            .iter()
            .map(|t| GreedyPackings::new(self.mu, t, centres.to_vec()))
            .collect();
        q_values
            .iter()
            .map(|&q| {
                let integral = mode == MomentMode::Integral && q > 1.0;
                let samples = used
                    .iter()
                    .zip(&packings)
                    .map(|(t, p)| {
                        let v = if integral {
                            integral_from_table(self.mu, t, centres, q)
                        } else {
                            p.moment(q)
                        };
                        ScaleSample { r: t.radius(), value: v }
                    })
                    .collect();
                let kind = if integral {
                    EstimateKind::BoxIntegral
                } else {
                    EstimateKind::BoxPacking
                };
                (ScaleSeries { q, samples }, kind)
            })
            .collect()
    }

    pub fn estimates(
        &self,
        centres: &[usize],
        q_values: &[f64],
        mode: MomentMode,
        r_cap: f64,
    ) -> Result<Vec<DimensionEstimate>> {
        self.series(centres, q_values, mode, r_cap)
            .iter()
            .map(|(s, kind)| slope_estimate_kind(s, None, *kind))
            .collect()
    }
}

/// Potential tables of one view at every radius of a window.
#[derive(Debug)]
pub struct ConvTables<'a> {
    mu: &'a DiscreteMeasure,
    tables: Vec<PotentialTable>,
}

impl<'a> ConvTables<'a> {
    pub fn new(view: &MeasureView<'a>, radii: &[f64], s: f64, rel_tol: Option<f64>) -> Result<Self> {
        Ok(ConvTables {
            mu: view.measure(),
            tables: radii
                .iter()
                .map(|&r| PotentialTable::new(view, r, s, rel_tol))
                .collect::<Result<_>>()?,
        })
    }

    pub fn radii(&self) -> Vec<f64> {
        self.tables.iter().map(PotentialTable::radius).collect()
    }

    pub fn series(&self, centres: &[usize], q_values: &[f64], r_cap: f64) -> Result<Vec<ScaleSeries>> {
        check_conv_q(q_values)?;
        Ok(q_values
            .iter()
            .map(|&q| ScaleSeries {
                q,
                samples: self
                    .tables
                    .iter()
                    .filter(|t| t.radius() <= r_cap)
                    .map(|t| ScaleSample {
                        r: t.radius(),
                        value: t.moment(self.mu, centres, q),
                    })
                    .collect(),
            })
            .collect())
    }

    pub fn estimates(&self, centres: &[usize], q_values: &[f64], r_cap: f64) -> Result<Vec<DimensionEstimate>> {
        self.series(centres, q_values, r_cap)?
            .iter()
            .map(|s| slope_estimate_kind(s, None, EstimateKind::Conv))
            .collect()
    }
}

fn check_conv_q(q_values: &[f64]) -> Result<()> {
    if let Some(q) = q_values.iter().find(|q| !(**q > 1.0)) {
        return Err(Error::domain(format!(
            "convolution moments are defined only for q > 1, got q={q}"
        )));
    }
    Ok(())
}

/// τ̂(q) for every q of the grid, fitted over the grid's window.
pub fn tau_box(view: &MeasureView<'_>, grid: &ScaleGrid, opts: &TauOptions) -> Result<Vec<DimensionEstimate>> {
    let tables = BoxTables::new(view, grid.window_radii(), opts.exact_masses);
    tables.estimates(&view.index_vec(), grid.q_values(), opts.mode, f64::INFINITY)
}

/// The moment series behind [`tau_box`].
pub fn box_series(view: &MeasureView<'_>, grid: &ScaleGrid, opts: &TauOptions) -> Vec<(ScaleSeries, EstimateKind)> {
    let tables = BoxTables::new(view, grid.window_radii(), opts.exact_masses);
    tables.series(&view.index_vec(), grid.q_values(), opts.mode, f64::INFINITY)
}

/// τ̂^{q,s} for every q of the grid (all q must exceed 1, 1 ≤ s ≤ n).
pub fn tau_conv(view: &MeasureView<'_>, s: f64, grid: &ScaleGrid, opts: &TauOptions) -> Result<Vec<DimensionEstimate>> {
    check_conv_q(grid.q_values())?;
    check_exponent(view.measure(), s)?;
    let tables = ConvTables::new(view, grid.window_radii(), s, opts.conv_tolerance)?;
    tables.estimates(&view.index_vec(), grid.q_values(), f64::INFINITY)
}

/// The moment series behind [`tau_conv`].
pub fn conv_series(view: &MeasureView<'_>, s: f64, grid: &ScaleGrid, opts: &TauOptions) -> Result<Vec<ScaleSeries>> {
    check_exponent(view.measure(), s)?;
    ConvTables::new(view, grid.window_radii(), s, opts.conv_tolerance)?
        .series(&view.index_vec(), grid.q_values(), f64::INFINITY)
}

fn check_exponent(mu: &DiscreteMeasure, s: f64) -> Result<()> {
    let n = mu.dim() as f64;
    if !(s >= 1.0 && s <= n) {
        return Err(Error::domain(format!("kernel exponent s={s} must lie in [1, {n}]")));
    }
    Ok(())
}
