//! Shipped test measures with closed-form dimension functions.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ScaleSpec;
use crate::measure::{from_ifs, read_measure_csv, AffineMap, DiscreteMeasure, IfsSpec};

/// Closed-form τ(q) of a self-similar measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticTau {
    /// Normalised Lebesgue measure on a `dim`-dimensional set: d(1 − q).
    Uniform { dim: f64 },
    /// Equal ratios `ratio`, weights `probabilities`, open set condition:
    /// log Σ p_i^q / log(1/ratio).
    Multinomial { probabilities: Vec<f64>, ratio: f64 },
    /// Product measure: factor functions add.
    Product { factors: Vec<AnalyticTau> },
}

impl AnalyticTau {
    pub fn tau(&self, q: f64) -> f64 {
        match self {
            AnalyticTau::Uniform { dim } => dim * (1.0 - q),
            AnalyticTau::Multinomial { probabilities, ratio } => {
                probabilities.iter().map(|p| p.powf(q)).sum::<f64>().ln() / (1.0 / ratio).ln()
            }
            AnalyticTau::Product { factors } => factors.iter().map(|f| f.tau(q)).sum(),
        }
    }

    /// τ'(q).
    pub fn derivative(&self, q: f64) -> f64 {
        match self {
            AnalyticTau::Uniform { dim } => -dim,
            AnalyticTau::Multinomial { probabilities, ratio } => {
                let s: f64 = probabilities.iter().map(|p| p.powf(q)).sum();
                let ds: f64 = probabilities.iter().map(|p| p.powf(q) * p.ln()).sum();
                ds / s / (1.0 / ratio).ln()
            }
            AnalyticTau::Product { factors } => factors.iter().map(|f| f.derivative(q)).sum(),
        }
    }
}

/// A named entry of the shipped catalog.
///
/// `scales` is the ladder the property suites fit over: it follows the
/// similarity ratio of the construction and stays between the boundary
/// regime (few balls, r comparable to the support) and the lattice regime
/// (r/3 a few atom spacings, where ball masses turn into point counts).
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: IfsSpec,
    pub depth: u32,
    pub tau: AnalyticTau,
    pub scales: ScaleSpec,
}

pub const CATALOG_NAMES: &[&str] = &[
    "binomial",
    "cantor",
    "uniform_interval",
    "uniform_square",
    "product_binomial",
    "segment_r3",
];

/// The measures every property suite runs on.
pub const SHIPPED: &[&str] = CATALOG_NAMES;

fn binomial_factor() -> AnalyticTau {
    AnalyticTau::Multinomial {
        probabilities: vec![0.3, 0.7],
        ratio: 0.5,
    }
}

fn halves(dim: usize, corners: &[Vec<f64>]) -> Vec<AffineMap> {
    corners
        .iter()
        .map(|t| AffineMap::similarity(dim, 0.5, t.clone()))
        .collect()
}

pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    let quads = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5], vec![0.5, 0.5]];
    let entry = match name {
        "binomial" => CatalogEntry {
            name: "binomial",
            spec: IfsSpec {
                dim: 1,
                maps: halves(1, &[vec![0.0], vec![0.5]]),
                probabilities: vec![0.3, 0.7],
            },
            depth: 14,
            tau: binomial_factor(),
            scales: ScaleSpec::Ladder {
                base: 2.0,
                from: 3.0,
                to: 10.0,
                steps: 1,
                relative: false,
            },
        },
        "cantor" => CatalogEntry {
            name: "cantor",
            spec: IfsSpec {
                dim: 1,
                maps: vec![
                    AffineMap::similarity(1, 1.0 / 3.0, vec![0.0]),
                    AffineMap::similarity(1, 1.0 / 3.0, vec![2.0 / 3.0]),
                ],
                probabilities: vec![0.5, 0.5],
            },
            depth: 12,
            tau: AnalyticTau::Multinomial {
                probabilities: vec![0.5, 0.5],
                ratio: 1.0 / 3.0,
            },
            scales: ScaleSpec::ladder(3.0, 2.0, 8.0, 1),
        },
        "uniform_interval" => CatalogEntry {
            name: "uniform_interval",
            spec: IfsSpec {
                dim: 1,
                maps: halves(1, &[vec![0.0], vec![0.5]]),
                probabilities: vec![0.5, 0.5],
            },
            depth: 14,
            tau: AnalyticTau::Uniform { dim: 1.0 },
            scales: ScaleSpec::ladder(2.0, 3.0, 10.0, 1),
        },
        "uniform_square" => CatalogEntry {
            name: "uniform_square",
            spec: IfsSpec {
                dim: 2,
                maps: halves(2, &quads),
                probabilities: vec![0.25; 4],
            },
            depth: 10,
            tau: AnalyticTau::Uniform { dim: 2.0 },
            scales: ScaleSpec::ladder(2.0, 5.0, 7.0, 2),
        },
        "product_binomial" => {
            // word (i, j) ↦ translation (i/2, j/2), weight p_i p_j
            let p = [0.3, 0.7];
            let probabilities = vec![p[0] * p[0], p[1] * p[0], p[0] * p[1], p[1] * p[1]];
            CatalogEntry {
                name: "product_binomial",
                spec: IfsSpec {
                    dim: 2,
                    maps: halves(2, &quads),
                    probabilities,
                },
                depth: 10,
                tau: AnalyticTau::Product {
                    factors: vec![binomial_factor(), binomial_factor()],
                },
                scales: ScaleSpec::ladder(2.0, 3.0, 7.0, 1),
            }
        }
        "segment_r3" => {
            let v = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
            CatalogEntry {
                name: "segment_r3",
                spec: IfsSpec {
                    dim: 3,
                    maps: halves(3, &[vec![0.0; 3], v.iter().map(|c| c / 2.0).collect()]),
                    probabilities: vec![0.5, 0.5],
                },
                depth: 14,
                tau: AnalyticTau::Uniform { dim: 1.0 },
                scales: ScaleSpec::ladder(2.0, 3.0, 7.0, 1),
            }
        }
        other => {
            return Err(Error::validation(format!(
                "unknown catalog measure '{other}' (known: {})",
                CATALOG_NAMES.join(", ")
            )))
        }
    };
    Ok(entry)
}

/// Where a check's measure comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Catalog {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<u32>,
    },
    Ifs {
        spec: IfsSpec,
        depth: u32,
    },
    IfsFile {
        path: PathBuf,
        depth: u32,
    },
    Csv {
        path: PathBuf,
    },
}

impl MeasureSpec {
    pub fn catalog(name: &str) -> Self {
        MeasureSpec::Catalog {
            name: name.into(),
            depth: None,
        }
    }

    pub fn catalog_at(name: &str, depth: u32) -> Self {
        MeasureSpec::Catalog {
            name: name.into(),
            depth: Some(depth),
        }
    }

    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::Catalog { name, depth } => {
                let e = catalog_entry(name)?;
                from_ifs(&e.spec, depth.unwrap_or(e.depth))
            }
            MeasureSpec::Ifs { spec, depth } => {
                spec.validate()?;
                from_ifs(spec, *depth)
            }
            MeasureSpec::IfsFile { path, depth } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                from_ifs(&IfsSpec::from_json(&text)?, *depth)
            }
            MeasureSpec::Csv { path } => read_measure_csv(path),
        }
    }

    /// The catalog entry's ladder, else the default grid.
    pub fn recommended_scales(&self) -> ScaleSpec {
        match self {
            MeasureSpec::Catalog { name, .. } => {
                catalog_entry(name).map(|e| e.scales).unwrap_or_default()
            }
            _ => ScaleSpec::Default,
        }
    }

    /// Closed-form τ when the measure is a catalog entry.
    pub fn analytic(&self) -> Option<AnalyticTau> {
        match self {
            MeasureSpec::Catalog { name, .. } => catalog_entry(name).ok().map(|e| e.tau),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MeasureSpec::Catalog { name, depth } => match depth {
                Some(d) => format!("{name}@{d}"),
                None => name.clone(),
            },
            MeasureSpec::Ifs { depth, .. } => format!("ifs@{depth}"),
            MeasureSpec::IfsFile { path, depth } => format!("{}@{depth}", stem(path)),
            MeasureSpec::Csv { path } => stem(path),
        }
    }
}

/// File name without directories or extension, for labels that do not
/// depend on where the suite was run from.
fn stem(path: &std::path::Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let b = catalog_entry("binomial").unwrap().tau;
        assert!((b.tau(2.0) - 0.58f64.log2()).abs() < 1e-14);
        assert!(b.tau(1.0).abs() < 1e-15);
        assert!((b.tau(0.0) - 1.0).abs() < 1e-15);
        let c = catalog_entry("cantor").unwrap().tau;
        assert!((c.tau(0.0) - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
        let p = catalog_entry("product_binomial").unwrap().tau;
        assert!((p.tau(1.5) - 2.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5)).log2()).abs() < 1e-14);
        let alpha = -b.derivative(1.0);
        let h = -(0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln()) / 2f64.ln();
        assert!((alpha - h).abs() < 1e-14);
    }

    #[test]
    fn catalog_specs_are_valid() {
        for name in CATALOG_NAMES {
            let e = catalog_entry(name).unwrap();
            e.spec.validate().unwrap();
        }
        assert!(catalog_entry("nope").is_err());
    }

    #[test]
    fn measure_spec_json() {
        let m: MeasureSpec = serde_json::from_str(r#"{"source":"catalog","name":"cantor","depth":3}"#).unwrap();
        assert_eq!(m.build().unwrap().len(), 8);
        assert!(serde_json::from_str::<MeasureSpec>(r#"{"source":"catalog","name":"cantor","x":1}"#).is_err());
    }
}
