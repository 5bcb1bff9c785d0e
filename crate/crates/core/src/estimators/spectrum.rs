//! Multifractal spectra: discrete Legendre conjugates of dimension functions
//! and coarse (histogram) iso-Hölder spectra.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moments::greedy_accept;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::serde_ext::ext_f64;

/// Relative slack on the Legendre domain test.
const DOMAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub alpha: f64,
    /// −∞ marks an α outside the domain or an empty bin.
    #[serde(with = "ext_f64")]
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub points: Vec<SpectrumPoint>,
    /// (α_min, α_max); NaN bounds when no point is finite.
    pub domain: (f64, f64),
}

impl SpectrumCurve {
    /// f at `alpha` if it is a grid point.
    pub fn value_at(&self, alpha: f64) -> Option<f64> {
        self.points.iter().find(|p| p.alpha == alpha).map(|p| p.f)
    }
}

/// f*(α) = min over the q-grid of qα + f(q).
///
/// The domain is [−(slope at the right end), −(slope at the left end)],
/// from finite differences at the grid ends; α outside it (beyond a 1e-9
/// relative slack) gets the −∞ sentinel, since there the minimum sits on
/// the grid boundary and the true conjugate is smaller.
pub fn legendre_transform(f: &[(f64, f64)], alpha_grid: &[f64]) -> Result<SpectrumCurve> {
    if f.len() < 3 {
        return Err(Error::validation(format!(
            "Legendre transform needs at least 3 q-points, got {}",
            f.len()
        )));
    }
    if alpha_grid.is_empty() {
        return Err(Error::validation("alpha grid is empty"));
    }
    if f.iter().any(|(q, v)| !q.is_finite() || !v.is_finite()) {
        return Err(Error::validation("Legendre transform input must be finite"));
    }
    let mut pts = f.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::validation("q-grid has repeated points"));
    }
    let k = pts.len();
    let left = (pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0);
    let right = (pts[k - 1].1 - pts[k - 2].1) / (pts[k - 1].0 - pts[k - 2].0);
    let (amin, amax) = (-right, -left);
    let inside = |a: f64| {
        let slack = DOMAIN_TOLERANCE * a.abs().max(1.0);
        a >= amin - slack && a <= amax + slack
    };
    let points = alpha_grid
        .iter()
        .map(|&alpha| {
            let f = if inside(alpha) {
                pts.iter()
                    .map(|&(q, v)| q.mul_add(alpha, v))
                    .fold(f64::INFINITY, f64::min)
            } else {
                f64::NEG_INFINITY
            };
            SpectrumPoint { alpha, f }
        })
        .collect();
    Ok(SpectrumCurve {
        points,
        domain: (amin, amax),
    })
}

/// Ball convention for local exponents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolderBall {
    /// log μ(B(x, 3r)) / log r.
    #[default]
    Triple,
    /// log μ(B(x, r)) / log r.
    Plain,
}

/// Histogram spectrum. At each radius r every atom gets the local exponent
/// log μ(B(x, ρ)) / log r (ρ = 3r or r); for each α the atoms with exponent
/// in [α − ε, α + ε] are thinned greedily (ascending index) to a set with
/// pairwise distances > r, and f̂(α) is the least-squares slope of the
/// log count against log(1/r). Bins empty at some radius give −∞.
pub fn coarse_spectrum(
    mu: &DiscreteMeasure,
    alpha_grid: &[f64],
    r_list: &[f64],
    epsilon: f64,
    ball: HolderBall,
) -> Result<SpectrumCurve> {
    if !(epsilon > 0.0) {
        return Err(Error::validation(format!("bin half-width must be positive, got {epsilon}")));
    }
    if r_list.len() < 2 {
        return Err(Error::validation("coarse spectrum needs at least two radii"));
    }
    if r_list.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::validation("coarse spectrum radii must lie in (0, 1)"));
    }
    if r_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation("radii must be strictly decreasing"));
    }
    let counts: Vec<Vec<usize>> = r_list
        .iter()
        .map(|&r| {
            let rho = match ball {
                HolderBall::Triple => 3.0 * r,
                HolderBall::Plain => r,
            };
            let exps: Vec<f64> = (0..mu.len())
                .into_par_iter()
                .map(|i| mu.ball_mass_fast(mu.point(i), rho).ln() / r.ln())
                .collect();
            alpha_grid
                .iter()
                .map(|&a| {
                    let members: Vec<usize> =
                        (0..mu.len()).filter(|&i| (exps[i] - a).abs() <= epsilon).collect();
                    if members.is_empty() {
                        0
                    } else {
                        // separation 2·(r/2) = r
                        greedy_accept(mu, &members, r / 2.0).len()
                    }
                })
                .collect()
        })
        .collect();

    let xs: Vec<f64> = r_list.iter().map(|r| -r.ln()).collect();
    let points: Vec<SpectrumPoint> = alpha_grid
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let ys: Option<Vec<f64>> = counts
                .iter()
                .map(|c| (c[k] > 0).then(|| (c[k] as f64).ln()))
                .collect();
            let f = match ys {
                Some(ys) => ols_slope(&xs, &ys),
                None => f64::NEG_INFINITY,
            };
            SpectrumPoint { alpha, f }
        })
        .collect();
    let finite: Vec<f64> = points.iter().filter(|p| p.f.is_finite()).map(|p| p.alpha).collect();
    let domain = match (finite.first(), finite.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (f64::NAN, f64::NAN),
    };
    Ok(SpectrumCurve { points, domain })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Point;

    #[test]
    fn affine_conjugate() {
        let f: Vec<(f64, f64)> = (-8..=8).map(|k| {
            let q = k as f64 / 4.0;
            (q, 2.0 * (1.0 - q))
        }).collect();
        let c = legendre_transform(&f, &[2.0, 3.0, 1.0]).unwrap();
        assert_eq!(c.value_at(2.0), Some(2.0));
        assert_eq!(c.value_at(3.0), Some(f64::NEG_INFINITY));
        assert_eq!(c.value_at(1.0), Some(f64::NEG_INFINITY));
        assert_eq!(c.domain, (2.0, 2.0));
    }

    #[test]
    fn legendre_rejects_short_input() {
        assert!(legendre_transform(&[(0.0, 1.0), (1.0, 0.0)], &[1.0]).is_err());
        assert!(legendre_transform(&[(0.0, 1.0), (1.0, 0.0), (2.0, -1.0)], &[]).is_err());
    }

    #[test]
    fn single_atom_spectrum() {
        let mu = DiscreteMeasure::from_atoms(1, vec![(Point::origin(1), 1.0)]).unwrap();
        let c = coarse_spectrum(&mu, &[0.0, 0.5], &[0.1, 0.05, 0.01], 0.1, HolderBall::Triple).unwrap();
        assert_eq!(c.value_at(0.0), Some(0.0));
        assert_eq!(c.value_at(0.5), Some(f64::NEG_INFINITY));
    }
}
