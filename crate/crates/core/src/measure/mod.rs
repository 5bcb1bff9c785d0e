//! Discrete approximations of compactly supported probability measures.

mod ifs;
pub(crate) mod index;
mod io;

use std::fmt;
use std::ops::Deref;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use index::KdTree;

pub use ifs::{from_ifs, from_ifs_with, AffineMap, IfsOptions, IfsSpec, DEFAULT_ATOM_BUDGET};
pub use io::{read_measure_csv, write_measure_csv, MeasureCsvHeader};

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Coordinates are snapped to this grid before coincident atoms are merged.
pub const MERGE_QUANTUM: f64 = 1e-12;

/// A point of R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

/// Snaps a coordinate onto the [`MERGE_QUANTUM`] grid.
#[inline]
pub fn quantize(c: f64) -> f64 {
    const SCALE: f64 = 1e12;
    let q = (c * SCALE).round() / SCALE;
    if q.is_finite() {
        q
    } else {
        c
    }
}

/// Finite atomic probability measure on R^n with a spatial index.
///
/// Immutable after construction. Atoms are stored in index order (the k-d tree
/// order), coincident atoms are merged, and every weight is positive.
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    bbox: (Point, Point),
    index: KdTree,
    resolution: OnceLock<f64>,
}

impl fmt::Debug for DiscreteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteMeasure")
            .field("dim", &self.dim)
            .field("atoms", &self.len())
            .field("bbox", &self.bbox)
            .finish()
    }
}

impl DiscreteMeasure {
    /// Builds a measure from (point, weight) pairs.
    pub fn from_atoms(dim: usize, atoms: Vec<(Point, f64)>) -> Result<Self> {
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (k, (p, w)) in atoms.into_iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::validation(format!(
                    "atom {k} has dimension {}, expected {dim}",
                    p.dim()
                )));
            }
            coords.extend_from_slice(&p);
            weights.push(w);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Builds a measure from row-major coordinates and weights. Coordinates
    /// are used as given; atoms with identical coordinates are merged.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(dim, coords, weights, false)
    }

    /// Like [`from_flat`](Self::from_flat) but first snaps coordinates onto the
    /// [`MERGE_QUANTUM`] grid so that images computed along different
    /// floating-point paths merge.
    pub fn from_flat_quantized(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(dim, coords, weights, true)
    }

    fn build(dim: usize, mut coords: Vec<f64>, weights: Vec<f64>, snap: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("ambient dimension must be positive"));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::validation(format!(
                "{} coordinates do not match {} atoms of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::validation("a probability measure needs at least one atom"));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::validation(format!("non-finite coordinate {c}")));
        }
        if let Some((k, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::validation(format!("atom {k} has non-positive weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::validation(format!(
                "total mass {total} differs from 1 by more than {MASS_TOLERANCE}"
            )));
        }
        if snap {
            for c in coords.iter_mut() {
                *c = quantize(*c);
            }
        }

        let (coords, weights) = merge_coincident(dim, &coords, &weights);
        let (mut index, perm) = KdTree::build(dim, &coords);
        let mut ordered = Vec::with_capacity(coords.len());
        let mut ordered_w = Vec::with_capacity(weights.len());
        for &i in &perm {
            ordered.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
            ordered_w.push(weights[i]);
        }
        index.set_weights(&ordered, &ordered_w);

        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in ordered.chunks_exact(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Ok(DiscreteMeasure {
            dim,
            coords: ordered,
            weights: ordered_w,
            bbox: (Point(lo), Point(hi)),
            index,
            resolution: OnceLock::new(),
        })
    }

    /// Records the length scale below which the atomic approximation stops
    /// resembling the underlying measure.
    pub fn with_resolution(self, resolution: f64) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(resolution);
        DiscreteMeasure {
            resolution: cell,
            ..self
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn bounding_box(&self) -> (&Point, &Point) {
        (&self.bbox.0, &self.bbox.1)
    }

    /// Diameter of the bounding box of the support.
    pub fn diameter(&self) -> f64 {
        dist(&self.bbox.0, &self.bbox.1)
    }

    /// Length scale of the atomic approximation. Measures generated from an
    /// IFS carry it from construction; otherwise it is the median
    /// nearest-neighbour distance between atoms (0 for a single atom).
    pub fn resolution(&self) -> f64 {
        *self.resolution.get_or_init(|| self.median_nearest_gap())
    }

    fn median_nearest_gap(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let mut gaps: Vec<f64> = (0..self.len())
            .map(|i| self.index.nearest_other_dist2(&self.coords, i).sqrt())
            .collect();
        let mid = gaps.len() / 2;
        *gaps.select_nth_unstable_by(mid, f64::total_cmp).1
    }

    /// μ(B(x, r)) for the closed Euclidean ball, through the spatial index.
    /// Bit-identical to [`ball_mass_brute_force`](Self::ball_mass_brute_force).
    pub fn ball_mass(&self, x: &[f64], r: f64) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.index
            .ball_sum_exact(&self.coords, &self.weights, x, r * r)
    }

    /// μ(B(x, r)) by an O(#atoms) scan in ascending atom order.
    pub fn ball_mass_brute_force(&self, x: &[f64], r: f64) -> f64 {
        let r2 = r * r;
        let mut sum = 0.0;
        for (p, w) in self.atoms() {
            if index::dist2(p, x) <= r2 {
                sum += w;
            }
        }
        sum
    }

    /// μ(B(x, r)) with whole index cells added at once. Same atom set as
    /// [`ball_mass`](Self::ball_mass), different summation order.
    pub fn ball_mass_fast(&self, x: &[f64], r: f64) -> f64 {
        self.index
            .ball_sum_fast(&self.coords, &self.weights, x, r * r)
    }

    /// Indices of atoms inside the closed ball, ascending.
    pub fn ball_indices(&self, x: &[f64], r: f64, out: &mut Vec<usize>) {
        self.index.ball_indices(&self.coords, x, r * r, out);
    }

    pub(crate) fn index(&self) -> &KdTree {
        &self.index
    }

    /// The whole support as a view.
    pub fn view(&self) -> MeasureView<'_> {
        MeasureView {
            measure: self,
            subset: None,
        }
    }
}

/// Euclidean distance.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    index::dist2(a, b).sqrt()
}

fn merge_coincident(dim: usize, coords: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = weights.len();
    let mut order: Vec<usize> = (0..n).collect();
    let point = |i: usize| &coords[i * dim..(i + 1) * dim];
    order.sort_by(|&a, &b| index::lex_cmp(point(a), point(b)));
    let mut out_c = Vec::with_capacity(coords.len());
    let mut out_w: Vec<f64> = Vec::with_capacity(n);
    let mut last: Option<usize> = None;
    for &i in &order {
        match last {
            // -0.0 and 0.0 compare unequal under total_cmp, so test with ==
            Some(j) if point(j).iter().zip(point(i)).all(|(a, b)| a == b) => {
                *out_w.last_mut().expect("merged atom present") += weights[i];
            }
            _ => {
                out_c.extend(point(i).iter().map(|&c| if c == 0.0 { 0.0 } else { c }));
                out_w.push(weights[i]);
                last = Some(i);
            }
        }
    }
    (out_c, out_w)
}

/// Sorted, duplicate-free set of atom indices E ⊆ supp μ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSubset {
    indices: Vec<usize>,
}

impl SupportSubset {
    pub fn new(mut indices: Vec<usize>, atoms: usize) -> Result<Self> {
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return Err(Error::validation("support subset contains duplicate indices"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= atoms) {
            return Err(Error::validation(format!(
                "support subset index {bad} out of range for {atoms} atoms"
            )));
        }
        Ok(SupportSubset { indices })
    }

    pub fn all(atoms: usize) -> Self {
        SupportSubset {
            indices: (0..atoms).collect(),
        }
    }

    pub fn empty() -> Self {
        SupportSubset { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A measure together with the set E of admissible centres / integration
/// points. Ball masses are always evaluated against the full measure.
#[derive(Debug, Clone, Copy)]
pub struct MeasureView<'a> {
    measure: &'a DiscreteMeasure,
    subset: Option<&'a [usize]>,
}

/// Restricts centre enumeration to `e` without restricting the measure.
pub fn restrict<'a>(mu: &'a DiscreteMeasure, e: &'a SupportSubset) -> Result<MeasureView<'a>> {
    if let Some(&last) = e.indices().last() {
        if last >= mu.len() {
            return Err(Error::validation(format!(
                "support subset index {last} out of range for {} atoms",
                mu.len()
            )));
        }
    }
    Ok(MeasureView {
        measure: mu,
        subset: Some(e.indices()),
    })
}

impl<'a> MeasureView<'a> {
    pub fn measure(&self) -> &'a DiscreteMeasure {
        self.measure
    }

    pub fn len(&self) -> usize {
        self.subset.map_or(self.measure.len(), <[usize]>::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.subset.is_none() || self.len() == self.measure.len()
    }

    /// Atom indices of E in ascending order.
    pub fn indices(&self) -> Box<dyn Iterator<Item = usize> + 'a> {
        match self.subset {
            Some(s) => Box::new(s.iter().copied()),
            None => Box::new(0..self.measure.len()),
        }
    }

    pub fn index_vec(&self) -> Vec<usize> {
        self.indices().collect()
    }

    /// μ(E).
    pub fn mass(&self) -> f64 {
        self.indices().map(|i| self.measure.weight(i)).sum()
    }

    /// Diameter of the bounding box of E.
    pub fn diameter(&self) -> f64 {
        if self.is_full() {
            return self.measure.diameter();
        }
        let dim = self.measure.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut any = false;
        for i in self.indices() {
            any = true;
            for (k, &c) in self.measure.point(i).iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        if any {
            dist(&lo, &hi)
        } else {
            0.0
        }
    }
}
