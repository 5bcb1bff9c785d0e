//! Finite-partition stand-in for the cover dimensions: the infimum over
//! countable covers of the supremum of piecewise dimensions is replaced by a
//! minimum over dyadic partitions of the supremum over their cells.
//!
//! This is a heuristic upper bound for the true infimum and every result is
//! flagged `proxy`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scale::ScaleGrid;
use super::slope::DimensionEstimate;
use super::tau::{BoxTables, ConvTables, MomentMode, TauOptions};
use crate::error::{Error, Result};
use crate::measure::MeasureView;
use crate::serde_ext::{ext_f64, ext_f64_opt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyKind {
    BoxLower,
    BoxUpper,
    ConvLower,
    ConvUpper,
}

impl ProxyKind {
    pub fn is_conv(self) -> bool {
        matches!(self, ProxyKind::ConvLower | ProxyKind::ConvUpper)
    }

    pub fn is_upper(self) -> bool {
        matches!(self, ProxyKind::BoxUpper | ProxyKind::ConvUpper)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProxyKind::BoxLower => "proxy-box-lower",
            ProxyKind::BoxUpper => "proxy-box-upper",
            ProxyKind::ConvLower => "proxy-conv-lower",
            ProxyKind::ConvUpper => "proxy-conv-upper",
        }
    }

    fn pick(self, e: &DimensionEstimate) -> f64 {
        if self.is_upper() {
            e.upper
        } else {
            e.lower
        }
    }
}

/// Outcome at one partition depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthProxy {
    pub depth: u32,
    pub pieces: usize,
    pub radii: usize,
    /// Supremum over cells; `None` when the depth was skipped.
    #[serde(with = "ext_f64_opt")]
    pub sup: Option<f64>,
    /// Smallest piecewise value (hypothesis checks on the cells).
    #[serde(with = "ext_f64_opt")]
    pub min_piece: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverProxy {
    pub q: f64,
    pub kind: ProxyKind,
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub depths: Vec<DepthProxy>,
    pub proxy: bool,
}

/// The cells of the depth-`d` dyadic partition of the bounding box of E
/// that contain atoms of E, each as ascending atom indices, plus the
/// smallest side length among split axes (∞ if the box is a point).
pub fn dyadic_pieces(view: &MeasureView<'_>, depth: u32) -> (Vec<Vec<usize>>, f64) {
    let mu = view.measure();
    let dim = mu.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in view.indices() {
        for (k, &c) in mu.point(i).iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let cells_per_axis = 1u64 << depth;
    let mut side = f64::INFINITY;
    for k in 0..dim {
        let ext = hi[k] - lo[k];
        if ext > 0.0 {
            side = side.min(ext / cells_per_axis as f64);
        }
    }
    let mut pieces: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    for i in view.indices() {
        let key = mu
            .point(i)
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let ext = hi[k] - lo[k];
                if ext > 0.0 {
                    (((c - lo[k]) / ext * cells_per_axis as f64).floor() as u64).min(cells_per_axis - 1)
                } else {
                    0
                }
            })
            .collect();
        pieces.entry(key).or_default().push(i);
    }
    (pieces.into_values().collect(), side)
}

/// Precomputed tables a proxy can draw on.
#[derive(Debug, Clone, Copy)]
pub enum ProxyTables<'t, 'a> {
    Box(&'t BoxTables<'a>, MomentMode),
    Conv(&'t ConvTables<'a>),
}

/// Cover proxies for every q from shared tables. Radii larger than an eighth
/// of a cell side are excluded at that depth; a depth whose cells cannot all
/// be estimated is skipped and reported.
pub fn cover_proxy_with(
    view: &MeasureView<'_>,
    tables: ProxyTables<'_, '_>,
    q_values: &[f64],
    kind: ProxyKind,
    max_depth: u32,
) -> Result<Vec<CoverProxy>> {
    match (tables, kind.is_conv()) {
        (ProxyTables::Box(..), true) | (ProxyTables::Conv(_), false) => {
            return Err(Error::validation(format!(
                "{} proxy given the wrong moment tables",
                kind.as_str()
            )))
        }
        _ => {}
    }
    if view.is_empty() {
        return Ok(q_values
            .iter()
            .map(|&q| CoverProxy {
                q,
                kind,
                value: f64::NEG_INFINITY,
                depths: Vec::new(),
                proxy: true,
            })
            .collect());
    }
    let mut per_depth: Vec<(DepthProxy, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut first_err = None;
    for depth in 0..=max_depth {
        let (pieces, side) = dyadic_pieces(view, depth);
        let cap = if depth == 0 { f64::INFINITY } else { side / 8.0 };
        let radii = match tables {
            ProxyTables::Box(t, _) => t.radii(),
            ProxyTables::Conv(t) => t.radii(),
        }
        .into_iter()
        .filter(|&r| r <= cap)
        .count();
        let mut sup = vec![f64::NEG_INFINITY; q_values.len()];
        let mut low = vec![f64::INFINITY; q_values.len()];
        let mut failure = None;
        for piece in &pieces {
            let est = match tables {
                ProxyTables::Box(t, mode) => t.estimates(piece, q_values, mode, cap),
                ProxyTables::Conv(t) => t.estimates(piece, q_values, cap),
            };
            match est {
                Ok(est) => {
                    for (k, e) in est.iter().enumerate() {
                        sup[k] = sup[k].max(kind.pick(e));
                        low[k] = low[k].min(kind.pick(e));
                    }
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                    break;
                }
            }
        }
        let ok = failure.is_none();
        if !ok {
            log::debug!("cover proxy depth {depth} skipped: {}", failure.as_deref().unwrap_or(""));
        }
        per_depth.push((
            DepthProxy {
                depth,
                pieces: pieces.len(),
                radii,
                sup: None,
                min_piece: None,
                skipped: failure,
            },
            if ok { sup } else { Vec::new() },
            if ok { low } else { Vec::new() },
        ));
    }
    if per_depth.iter().all(|(d, ..)| d.skipped.is_some()) {
        return Err(first_err.expect("every depth skipped with an error"));
    }
    Ok(q_values
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let depths: Vec<DepthProxy> = per_depth
                .iter()
                .map(|(d, sup, low)| DepthProxy {
                    sup: sup.get(k).copied(),
                    min_piece: low.get(k).copied(),
                    ..d.clone()
                })
                .collect();
            let value = depths
                .iter()
                .filter_map(|d| d.sup)
                .fold(f64::INFINITY, f64::min);
            CoverProxy {
                q,
                kind,
                value,
                depths,
                proxy: true,
            }
        })
        .collect())
}

/// One cover proxy, building its own tables over `grid`'s window.
pub fn cover_proxy_dim(
    view: &MeasureView<'_>,
    q: f64,
    kind: ProxyKind,
    s: f64,
    max_depth: u32,
    grid: &ScaleGrid,
    opts: &TauOptions,
) -> Result<CoverProxy> {
    let radii = grid.window_radii();
    let out = if kind.is_conv() {
        let t = ConvTables::new(view, radii, s, opts.conv_tolerance)?;
        cover_proxy_with(view, ProxyTables::Conv(&t), &[q], kind, max_depth)?
    } else {
        let t = BoxTables::new(view, radii, opts.exact_masses);
        cover_proxy_with(view, ProxyTables::Box(&t, opts.mode), &[q], kind, max_depth)?
    };
    Ok(out.into_iter().next().expect("one q requested"))
}
