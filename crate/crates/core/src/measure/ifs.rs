//! Self-similar (more generally self-affine) measures from iterated function
//! systems, approximated at a fixed word depth.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dist, DiscreteMeasure, Point};
use crate::error::{Error, Result};
use crate::geometry::RandomSource;

/// Default cap on the number of atoms of an exact depth expansion.
pub const DEFAULT_ATOM_BUDGET: usize = 2_000_000;

const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Affine contraction x ↦ Ax + b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMap {
    /// Row-major n×n linear part.
    pub linear: Vec<f64>,
    pub translation: Vec<f64>,
}

impl AffineMap {
    pub fn similarity(dim: usize, ratio: f64, translation: Vec<f64>) -> Self {
        let mut linear = vec![0.0; dim * dim];
        for k in 0..dim {
            linear[k * dim + k] = ratio;
        }
        AffineMap {
            linear,
            translation,
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        let n = x.len();
        for row in 0..n {
            let mut acc = self.translation[row];
            for (col, &xc) in x.iter().enumerate() {
                acc += self.linear[row * n + col] * xc;
            }
            out.push(acc);
        }
    }

    /// Spectral norm of the linear part.
    pub fn operator_norm(&self) -> f64 {
        let n = self.translation.len();
        DMatrix::from_row_slice(n, n, &self.linear)
            .singular_values()
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b))
    }
}

/// An IFS with probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpec {
    pub dim: usize,
    pub maps: Vec<AffineMap>,
    pub probabilities: Vec<f64>,
}

impl IfsSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::validation("ifs: dim must be positive"));
        }
        if self.maps.is_empty() {
            return Err(Error::validation("ifs: maps must be nonempty"));
        }
        if self.maps.len() != self.probabilities.len() {
            return Err(Error::validation(format!(
                "ifs: {} maps but {} probabilities",
                self.maps.len(),
                self.probabilities.len()
            )));
        }
        for (k, m) in self.maps.iter().enumerate() {
            if m.linear.len() != n * n {
                return Err(Error::validation(format!(
                    "ifs: maps[{k}].linear has {} entries, expected {}",
                    m.linear.len(),
                    n * n
                )));
            }
            if m.translation.len() != n {
                return Err(Error::validation(format!(
                    "ifs: maps[{k}].translation has {} entries, expected {n}",
                    m.translation.len()
                )));
            }
            if m.linear.iter().chain(&m.translation).any(|c| !c.is_finite()) {
                return Err(Error::validation(format!("ifs: maps[{k}] has non-finite entries")));
            }
            let norm = m.operator_norm();
            if norm >= 1.0 {
                return Err(Error::validation(format!(
                    "ifs: maps[{k}] is not a contraction (operator norm {norm})"
                )));
            }
        }
        if let Some(p) = self.probabilities.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::validation(format!("ifs: probability {p} is not positive")));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::validation(format!(
                "ifs: probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn max_contraction(&self) -> f64 {
        self.maps
            .iter()
            .map(AffineMap::operator_norm)
            .fold(0.0, f64::max)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: IfsSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Construction options for [`from_ifs_with`].
#[derive(Debug, Clone)]
pub struct IfsOptions {
    pub atom_budget: usize,
    /// Orbit seed; the origin when `None`.
    pub seed_point: Option<Point>,
    /// Word sampling used when the exact expansion exceeds the budget.
    pub sampling: Option<(RandomSource, usize)>,
}

impl Default for IfsOptions {
    fn default() -> Self {
        IfsOptions {
            atom_budget: DEFAULT_ATOM_BUDGET,
            seed_point: None,
            sampling: None,
        }
    }
}

/// Depth-`depth` approximation with default options and the origin as seed.
pub fn from_ifs(spec: &IfsSpec, depth: u32) -> Result<DiscreteMeasure> {
    from_ifs_with(spec, depth, &IfsOptions::default())
}

/// One atom per word i_1…i_depth at f_{i_1}∘…∘f_{i_depth}(seed), weighted by
/// p_{i_1}⋯p_{i_depth}. Coincident atoms are merged.
pub fn from_ifs_with(spec: &IfsSpec, depth: u32, opts: &IfsOptions) -> Result<DiscreteMeasure> {
    spec.validate()?;
    let n = spec.dim;
    let seed = opts.seed_point.clone().unwrap_or_else(|| Point::origin(n));
    if seed.dim() != n {
        return Err(Error::validation(format!(
            "ifs: seed point has dimension {}, expected {n}",
            seed.dim()
        )));
    }
    let k = spec.maps.len() as u128;
    let words = k.checked_pow(depth).unwrap_or(u128::MAX);

    let (coords, weights) = if words <= opts.atom_budget as u128 {
        expand_exact(spec, depth, &seed)
    } else {
        match &opts.sampling {
            Some((rng, samples)) => sample_words(spec, depth, &seed, rng, *samples)?,
            None => {
                return Err(Error::Capacity {
                    atoms: words,
                    budget: opts.atom_budget,
                })
            }
        }
    };

    let mu = DiscreteMeasure::from_flat_quantized(n, coords, weights)?;
    let (lo, hi) = mu.bounding_box();
    let resolution = spec.max_contraction().powi(depth as i32) * dist(lo, hi);
    Ok(mu.with_resolution(resolution))
}

fn expand_exact(spec: &IfsSpec, depth: u32, seed: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = spec.dim;
    let mut coords = seed.to_vec();
    let mut weights = vec![1.0];
    for _ in 0..depth {
        let mut next_c = Vec::with_capacity(coords.len() * spec.maps.len());
        let mut next_w = Vec::with_capacity(weights.len() * spec.maps.len());
        for (map, &p) in spec.maps.iter().zip(&spec.probabilities) {
            for (y, &w) in coords.chunks_exact(n).zip(&weights) {
                map.apply(y, &mut next_c);
                next_w.push(w * p);
            }
        }
        coords = next_c;
        weights = next_w;
    }
    (coords, weights)
}

/// Chaos-game word sampling: words are drawn with probability ∏p, each
/// distinct word keeps its exact weight, and weights are renormalised.
fn sample_words(
    spec: &IfsSpec,
    depth: u32,
    seed: &[f64],
    rng: &RandomSource,
    samples: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples == 0 {
        return Err(Error::validation("ifs: sampling mode needs a positive sample count"));
    }
    let n = spec.dim;
    let mut gen = rng.generator();
    let mut cumulative = Vec::with_capacity(spec.probabilities.len());
    let mut acc = 0.0;
    for p in &spec.probabilities {
        acc += p;
        cumulative.push(acc);
    }
    let mut words: BTreeMap<Vec<u32>, ()> = BTreeMap::new();
    for _ in 0..samples {
        let word: Vec<u32> = (0..depth)
            .map(|_| {
                let u: f64 = gen.random::<f64>() * acc;
                cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1) as u32
            })
            .collect();
        words.insert(word, ());
    }
    let mut coords = Vec::with_capacity(words.len() * n);
    let mut weights = Vec::with_capacity(words.len());
    let mut buf = Vec::with_capacity(n);
    for word in words.keys() {
        let mut x = seed.to_vec();
        let mut w = 1.0;
        for &i in word.iter().rev() {
            buf.clear();
            spec.maps[i as usize].apply(&x, &mut buf);
            std::mem::swap(&mut x, &mut buf);
        }
        for &i in word {
            w *= spec.probabilities[i as usize];
        }
        coords.extend_from_slice(&x);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok((coords, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial() -> IfsSpec {
        IfsSpec {
            dim: 1,
            maps: vec![
                AffineMap::similarity(1, 0.5, vec![0.0]),
                AffineMap::similarity(1, 0.5, vec![0.5]),
            ],
            probabilities: vec![0.3, 0.7],
        }
    }

    fn sorted_atoms(mu: &DiscreteMeasure) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = mu.atoms().map(|(x, w)| (x[0], w)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    #[test]
    fn one_map_collapses_to_a_point() {
        let spec = IfsSpec {
            dim: 1,
            maps: vec![AffineMap::similarity(1, 0.5, vec![0.0])],
            probabilities: vec![1.0],
        };
        let mu = from_ifs(&spec, 5).unwrap();
        assert_eq!(mu.len(), 1);
        assert_eq!(mu.weight(0), 1.0);
    }

    #[test]
    fn binomial_depth_two() {
        let mu = from_ifs(&binomial(), 2).unwrap();
        let atoms = sorted_atoms(&mu);
        let expect = [(0.0, 0.09), (0.25, 0.21), (0.5, 0.21), (0.75, 0.49)];
        assert_eq!(atoms.len(), 4);
        for ((x, w), (ex, ew)) in atoms.iter().zip(expect) {
            assert_eq!(*x, ex);
            assert!((w - ew).abs() < 1e-15);
        }
    }

    #[test]
    fn cantor_depth_one() {
        let spec = IfsSpec {
            dim: 1,
            maps: vec![
                AffineMap::similarity(1, 1.0 / 3.0, vec![0.0]),
                AffineMap::similarity(1, 1.0 / 3.0, vec![2.0 / 3.0]),
            ],
            probabilities: vec![0.5, 0.5],
        };
        let atoms = sorted_atoms(&from_ifs(&spec, 1).unwrap());
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0], (0.0, 0.5));
        assert!((atoms[1].0 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(atoms[1].1, 0.5);
    }

    #[test]
    fn overlapping_maps_merge() {
        // translations 0, 1/4, 1/2 at ratio 1/2: nine words, seven points
        let spec = IfsSpec {
            dim: 1,
            maps: vec![
                AffineMap::similarity(1, 0.5, vec![0.0]),
                AffineMap::similarity(1, 0.5, vec![0.25]),
                AffineMap::similarity(1, 0.5, vec![0.5]),
            ],
            probabilities: vec![0.25, 0.5, 0.25],
        };
        let mu = from_ifs(&spec, 2).unwrap();
        assert_eq!(mu.len(), 7);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        let mu = from_ifs(&binomial(), 12).unwrap();
        assert_eq!(mu.len(), 4096);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_and_contraction_errors() {
        let opts = IfsOptions {
            atom_budget: 100,
            ..Default::default()
        };
        let err = from_ifs_with(&binomial(), 7, &opts).unwrap_err();
        assert!(matches!(err, Error::Capacity { atoms: 128, budget: 100 }));

        let mut bad = binomial();
        bad.maps[1].linear = vec![1.0];
        assert!(matches!(from_ifs(&bad, 2).unwrap_err(), Error::Validation(_)));

        let mut bad = binomial();
        bad.probabilities = vec![0.3, 0.6];
        assert!(matches!(from_ifs(&bad, 2).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn sampling_mode_is_reproducible() {
        let opts = IfsOptions {
            atom_budget: 100,
            sampling: Some((RandomSource::new(11, 0), 500)),
            ..Default::default()
        };
        let a = from_ifs_with(&binomial(), 20, &opts).unwrap();
        let b = from_ifs_with(&binomial(), 20, &opts).unwrap();
        assert_eq!(a.coords(), b.coords());
        assert_eq!(a.weights(), b.weights());
        assert!(a.len() <= 500);
        assert!((a.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_schema() {
        let text = r#"{"dim": 1, "maps": [{"linear": [0.5], "translation": [0.0]},
                       {"linear": [0.5], "translation": [0.5]}], "probabilities": [0.3, 0.7]}"#;
        let spec = IfsSpec::from_json(text).unwrap();
        assert_eq!(spec, binomial());
        let bad = r#"{"dim": 1, "maps": [], "probabilities": [], "extra": 1}"#;
        assert!(IfsSpec::from_json(bad).is_err());
    }
}
