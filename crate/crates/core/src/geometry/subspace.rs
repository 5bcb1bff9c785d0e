use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize};

use super::RandomSource;
use crate::error::{Error, Result};
use crate::measure::{quantize, DiscreteMeasure, Point};

/// Entrywise tolerance on `basis · basisᵀ = I`.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

/// An m-dimensional linear subspace V of R^n, stored as m orthonormal rows.
/// Coordinates of π_V(x) are taken in this frame, so distances between
/// projected points equal distances in R^n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subspace {
    n: usize,
    m: usize,
    basis: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubspace {
    n: usize,
    m: usize,
    basis: RawBasis,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawBasis {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSubspace::deserialize(d)?;
        let basis = match raw.basis {
            RawBasis::Flat(v) => v,
            RawBasis::Rows(rows) => rows.concat(),
        };
        Subspace::new(raw.n, raw.m, basis).map_err(serde::de::Error::custom)
    }
}

impl Subspace {
    /// Validates shape and orthonormality of a row-major m×n basis.
    pub fn new(n: usize, m: usize, basis: Vec<f64>) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::validation(format!(
                "subspace dimension m={m} must satisfy 0 < m <= n={n}"
            )));
        }
        if basis.len() != n * m {
            return Err(Error::validation(format!(
                "basis has {} entries, expected m*n = {}",
                basis.len(),
                n * m
            )));
        }
        let v = Subspace { n, m, basis };
        let residual = v.orthonormality_residual();
        if !(residual <= ORTHONORMALITY_TOLERANCE) {
            return Err(Error::validation(format!(
                "basis rows are not orthonormal (residual {residual:e})"
            )));
        }
        Ok(v)
    }

    /// span(e_{i_1}, …, e_{i_m}).
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut basis = vec![0.0; axes.len() * n];
        for (row, &a) in axes.iter().enumerate() {
            if a >= n {
                return Err(Error::validation(format!("axis {a} out of range for R^{n}")));
            }
            basis[row * n + a] = 1.0;
        }
        Subspace::new(n, axes.len(), basis)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.basis[k * self.n..(k + 1) * self.n]
    }

    /// max |(B Bᵀ − I)_{ij}|.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Writes the frame coordinates of π_V(x) into `out`.
    #[inline]
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.row(k).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Coordinates of π_V(x) in the frame of V.
pub fn project_point(v: &Subspace, x: &[f64]) -> Result<Point> {
    if x.len() != v.n {
        return Err(Error::validation(format!(
            "point of dimension {} projected by a subspace of R^{}",
            x.len(),
            v.n
        )));
    }
    let mut out = vec![0.0; v.m];
    v.project_into(x, &mut out);
    Ok(Point(out))
}

/// Image measure μ_V = μ∘π_V⁻¹ in V-coordinates. Images are rounded to the
/// 1e-12 grid before coincident atoms merge. The source resolution carries
/// over (projection is 1-Lipschitz).
pub fn project_measure(mu: &DiscreteMeasure, v: &Subspace) -> Result<DiscreteMeasure> {
    project_measure_with_map(mu, v).map(|(m, _)| m)
}

/// As [`project_measure`], also returning for every source atom the index of
/// the projected atom it landed on.
pub fn project_measure_with_map(
    mu: &DiscreteMeasure,
    v: &Subspace,
) -> Result<(DiscreteMeasure, Vec<usize>)> {
    if mu.dim() != v.n {
        return Err(Error::validation(format!(
            "measure in R^{} projected by a subspace of R^{}",
            mu.dim(),
            v.n
        )));
    }
    let m = v.m;
    let coords = projected_coords(mu, v);
    let projected =
        DiscreteMeasure::from_flat_quantized(m, coords.clone(), mu.weights().to_vec())?
            .with_resolution(mu.resolution());

    let key = |p: &[f64]| -> Vec<u64> {
        p.iter()
            .map(|&c| if c == 0.0 { 0.0f64 } else { c }.to_bits())
            .collect()
    };
    let lookup: HashMap<Vec<u64>, usize> = (0..projected.len())
        .map(|j| (key(projected.point(j)), j))
        .collect();
    let map = coords
        .chunks_exact(m)
        .map(|p| lookup[&key(p)])
        .collect();
    Ok((projected, map))
}

/// Quantized frame coordinates of every atom's image, in atom order.
pub(crate) fn projected_coords(mu: &DiscreteMeasure, v: &Subspace) -> Vec<f64> {
    let m = v.m;
    let mut coords = vec![0.0; mu.len() * m];
    for (i, out) in coords.chunks_exact_mut(m).enumerate() {
        v.project_into(mu.point(i), out);
        for c in out.iter_mut() {
            *c = quantize(*c);
        }
    }
    coords
}

/// `count` independent draws from the rotation-invariant probability measure
/// on G(n, m): an n×m standard Gaussian matrix, columns orthonormalised by
/// modified Gram–Schmidt (with one re-orthogonalisation pass), each vector's
/// first non-negligible entry made positive.
pub fn sample_grassmannian(
    n: usize,
    m: usize,
    count: usize,
    rng: &RandomSource,
) -> Result<Vec<Subspace>> {
    if m == 0 || m > n {
        return Err(Error::validation(format!(
            "Grassmannian G({n},{m}) needs 0 < m <= n"
        )));
    }
    if count == 0 {
        return Err(Error::validation("subspace count must be at least 1"));
    }
    let mut gen = rng.generator();
    let mut out = Vec::with_capacity(count);
    let mut redraws = 0usize;
    while out.len() < count {
        let cols: Vec<f64> = (0..n * m).map(|_| gen.sample(StandardNormal)).collect();
        match orthonormalize(n, m, cols) {
            Some(basis) => out.push(Subspace { n, m, basis }),
            None => redraws += 1,
        }
    }
    if redraws > 0 {
        log::warn!("G({n},{m}) sampler: {redraws} rank-deficient Gaussian draws redrawn");
    }
    Ok(out)
}

/// Column vectors stored consecutively (vector k = `v[k*n..(k+1)*n]`).
fn orthonormalize(n: usize, m: usize, mut v: Vec<f64>) -> Option<Vec<f64>> {
    const RANK_TOL: f64 = 1e-10;
    for k in 0..m {
        let (done, rest) = v.split_at_mut(k * n);
        let col = &mut rest[..n];
        let original: f64 = col.iter().map(|c| c * c).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for j in 0..k {
                let q = &done[j * n..(j + 1) * n];
                let dot: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (c, a) in col.iter_mut().zip(q) {
                    *c -= dot * a;
                }
            }
        }
        let norm: f64 = col.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > RANK_TOL * original.max(f64::MIN_POSITIVE)) {
            return None;
        }
        let pivot = col.iter().copied().find(|c| c.abs() > RANK_TOL).unwrap_or(1.0);
        let scale = pivot.signum() / norm;
        for c in col.iter_mut() {
            *c *= scale;
        }
    }
    Some(v)
}
