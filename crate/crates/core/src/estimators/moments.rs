//! Packing, integral and kernel-convolution moments at a single radius.
//!
//! Ball masses are always taken against the full measure; the view only
//! selects which atoms may serve as centres / integration points.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{potential_accelerated, potential_unchecked};
use crate::measure::index::{dist2, lex_cmp};
use crate::measure::{DiscreteMeasure, MeasureView};

/// Largest centre set accepted by the exact packing oracle.
pub const EXACT_PACKING_LIMIT: usize = 20;

/// Above this dimension the greedy packing drops its hash grid (3^d
/// neighbour cells) for a linear scan of accepted centres.
const GRID_MAX_DIM: usize = 6;

/// μ(B(x_i, r/3)) for every centre i of a view; NaN at atoms outside E.
#[derive(Debug, Clone)]
pub struct MassTable {
    radius: f64,
    centres: Vec<usize>,
    masses: Vec<f64>,
}

impl MassTable {
    /// `exact` selects the index path that reproduces the brute-force sum;
    /// otherwise whole index cells are added at once (same atoms, different
    /// summation order).
    pub fn new(view: &MeasureView<'_>, r: f64, exact: bool) -> Self {
        let mu = view.measure();
        let centres = view.index_vec();
        let third = r / 3.0;
        let values: Vec<f64> = centres
            .par_iter()
            .map(|&i| {
                let x = mu.point(i);
                if exact {
                    mu.ball_mass(x, third)
                } else {
                    mu.ball_mass_fast(x, third)
                }
            })
            .collect();
        let mut masses = vec![f64::NAN; mu.len()];
        for (&i, v) in centres.iter().zip(values) {
            masses[i] = v;
        }
        MassTable {
            radius: r,
            centres,
            masses,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centres(&self) -> &[usize] {
        &self.centres
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }
}

/// The greedy packings of a centre set at one radius: centres visited in
/// decreasing order of the term μ(B(·, r/3))^q, each accepted when it lies
/// more than 2r from all previously accepted ones.
///
/// That order depends on q only through its sign: decreasing mass for q > 0,
/// increasing mass for q < 0, and for q = 0 every term is 1. Ties go to the
/// lexicographically smaller point, which scans a region row by row and
/// packs it the same way at every scale.
#[derive(Debug)]
pub struct GreedyPackings<'a> {
    mu: &'a DiscreteMeasure,
    table: &'a MassTable,
    centres: Vec<usize>,
    orders: [OnceLock<Vec<usize>>; 3],
}

impl<'a> GreedyPackings<'a> {
    pub fn new(mu: &'a DiscreteMeasure, table: &'a MassTable, centres: Vec<usize>) -> Self {
        GreedyPackings {
            mu,
            table,
            centres,
            orders: Default::default(),
        }
    }

    /// Accepted centres, in acceptance order, for the sign of `q`.
    pub fn centres_for(&self, q: f64) -> &[usize] {
        let class = if q > 0.0 {
            0
        } else if q < 0.0 {
            1
        } else {
            2
        };
        self.orders[class].get_or_init(|| {
            let mut order = self.centres.clone();
            let m = |i: usize| self.table.mass(i);
            let lex = |a: usize, b: usize| lex_cmp(self.mu.point(a), self.mu.point(b));
            match class {
                0 => order.sort_by(|&a, &b| m(b).total_cmp(&m(a)).then_with(|| lex(a, b))),
                1 => order.sort_by(|&a, &b| m(a).total_cmp(&m(b)).then_with(|| lex(a, b))),
                _ => order.sort_by(|&a, &b| lex(a, b)),
            }
            greedy_accept(self.mu, &order, self.table.radius())
        })
    }

    /// Σ μ(B(x_i, r/3))^q over the accepted centres; 0 when E is empty.
    pub fn moment(&self, q: f64) -> f64 {
        self.centres_for(q)
            .iter()
            .map(|&i| self.table.mass(i).powf(q))
            .sum()
    }
}

pub(crate) fn greedy_accept(mu: &DiscreteMeasure, order: &[usize], r: f64) -> Vec<usize> {
    let dim = mu.dim();
    let sep2 = (2.0 * r) * (2.0 * r);
    let mut accepted = Vec::new();
    if dim > GRID_MAX_DIM {
        for &i in order {
            let x = mu.point(i);
            if accepted.iter().all(|&j| dist2(x, mu.point(j)) > sep2) {
                accepted.push(i);
            }
        }
        return accepted;
    }
    let cell = 2.0 * r;
    let mut grid: HashMap<[i64; GRID_MAX_DIM], Vec<usize>> = HashMap::new();
    let mut base = [0i64; GRID_MAX_DIM];
    let mut probe = [0i64; GRID_MAX_DIM];
    let neighbours = 3usize.pow(dim as u32);
    for &i in order {
        let x = mu.point(i);
        for (b, &c) in base.iter_mut().zip(x) {
            *b = (c / cell).floor() as i64;
        }
        let mut ok = true;
        'cells: for code in 0..neighbours {
            let mut c = code;
            for k in 0..dim {
                probe[k] = base[k] + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(bucket) = grid.get(&probe) {
                for &j in bucket {
                    if dist2(x, mu.point(j)) <= sep2 {
                        ok = false;
                        break 'cells;
                    }
                }
            }
        }
        if ok {
            accepted.push(i);
            grid.entry(base).or_default().push(i);
        }
    }
    accepted
}

/// M^q_{μ,r}(E) by greedy packing with exact ball masses.
pub fn packing_moment(view: &MeasureView<'_>, q: f64, r: f64) -> f64 {
    let table = MassTable::new(view, r, true);
    GreedyPackings::new(view.measure(), &table, view.index_vec()).moment(q)
}

/// The true supremum of Σ μ(B(x_i, r/3))^q over packings of E by branch
/// and bound; E may hold at most [`EXACT_PACKING_LIMIT`] atoms.
pub fn packing_moment_exact(view: &MeasureView<'_>, q: f64, r: f64) -> Result<f64> {
    let centres = view.index_vec();
    if centres.len() > EXACT_PACKING_LIMIT {
        return Err(Error::validation(format!(
            "exact packing oracle handles at most {EXACT_PACKING_LIMIT} centres, got {}",
            centres.len()
        )));
    }
    let mu = view.measure();
    let terms: Vec<f64> = centres
        .iter()
        .map(|&i| mu.ball_mass(mu.point(i), r / 3.0).powf(q))
        .collect();
    let sep2 = (2.0 * r) * (2.0 * r);
    let conflicts: Vec<u32> = centres
        .iter()
        .map(|&i| {
            centres.iter().enumerate().fold(0u32, |acc, (b, &j)| {
                if i != j && dist2(mu.point(i), mu.point(j)) <= sep2 {
                    acc | (1 << b)
                } else {
                    acc
                }
            })
        })
        .collect();
    let mut suffix = vec![0.0; terms.len() + 1];
    for k in (0..terms.len()).rev() {
        suffix[k] = suffix[k + 1] + terms[k];
    }

    fn search(k: usize, taken: u32, value: f64, t: &[f64], c: &[u32], suffix: &[f64], best: &mut f64) {
        if value > *best {
            *best = value;
        }
        if k == t.len() || value + suffix[k] <= *best {
            return;
        }
        if taken & c[k] == 0 {
            search(k + 1, taken | (1 << k), value + t[k], t, c, suffix, best);
        }
        search(k + 1, taken, value, t, c, suffix, best);
    }

    let mut best = 0.0;
    search(0, 0, 0.0, &terms, &conflicts, &suffix, &mut best);
    Ok(best)
}

/// Σ_{x_i ∈ E} w_i · μ(B(x_i, r/3))^{q−1} from a precomputed table, ascending
/// atom order.
pub fn integral_from_table(mu: &DiscreteMeasure, table: &MassTable, centres: &[usize], q: f64) -> f64 {
    centres
        .iter()
        .map(|&i| mu.weight(i) * table.mass(i).powf(q - 1.0))
        .sum()
}

/// ∫_E μ(B(x, r/3))^{q−1} dμ(x), defined for q > 1.
pub fn integral_moment(view: &MeasureView<'_>, q: f64, r: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::domain(format!("integral moment needs q > 1, got {q}")));
    }
    let mu = view.measure();
    Ok(view
        .indices()
        .map(|i| mu.weight(i) * mu.ball_mass(mu.point(i), r / 3.0).powf(q - 1.0))
        .sum())
}

/// μ∗φ^s_{r/3}(x_i) for every centre of a view; NaN outside E.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    radius: f64,
    s: f64,
    values: Vec<f64>,
}

impl PotentialTable {
    /// `rel_tol = None` evaluates the exact sums; `Some(t)` uses the certified
    /// index-accelerated potential.
    pub fn new(view: &MeasureView<'_>, r: f64, s: f64, rel_tol: Option<f64>) -> Result<Self> {
        let mu = view.measure();
        if !(s >= 1.0 && s.is_finite()) {
            return Err(Error::domain(format!("kernel exponent must be >= 1, got {s}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("radius must be positive, got {r}")));
        }
        let centres = view.index_vec();
        let third = r / 3.0;
        let values: Vec<f64> = centres
            .par_iter()
            .map(|&i| match rel_tol {
                None => Ok(potential_unchecked(mu, mu.point(i), third, s)),
                Some(t) => potential_accelerated(mu, mu.point(i), third, s, t),
            })
            .collect::<Result<_>>()?;
        let mut out = vec![f64::NAN; mu.len()];
        for (&i, v) in centres.iter().zip(values) {
            out[i] = v;
        }
        Ok(PotentialTable {
            radius: r,
            s,
            values: out,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Σ_{x_i ∈ centres} w_i · μ∗φ(x_i)^{q−1}.
    pub fn moment(&self, mu: &DiscreteMeasure, centres: &[usize], q: f64) -> f64 {
        centres
            .iter()
            .map(|&i| mu.weight(i) * self.values[i].powf(q - 1.0))
            .sum()
    }
}

/// N^{q,s}_{μ,r}(E) = ∫_E (μ∗φ^s_{r/3})^{q−1} dμ, defined for q > 1, s ≥ 1.
pub fn convolution_moment(view: &MeasureView<'_>, q: f64, s: f64, r: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::domain(format!("convolution moment needs q > 1, got {q}")));
    }
    let table = PotentialTable::new(view, r, s, None)?;
    Ok(table.moment(view.measure(), &view.index_vec(), q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{restrict, Point, SupportSubset};

    fn corners() -> DiscreteMeasure {
        DiscreteMeasure::from_atoms(
            2,
            vec![
                ([0.0, 0.0].into(), 0.25),
                ([1.0, 0.0].into(), 0.25),
                ([0.0, 1.0].into(), 0.25),
                ([1.0, 1.0].into(), 0.25),
            ],
        )
        .unwrap()
    }

    fn pair() -> DiscreteMeasure {
        DiscreteMeasure::from_atoms(1, vec![([0.0].into(), 0.5), ([1.0].into(), 0.5)]).unwrap()
    }

    fn index_of(mu: &DiscreteMeasure, p: &[f64]) -> usize {
        (0..mu.len()).find(|&i| mu.point(i) == p).unwrap()
    }

    #[test]
    fn single_atom_packing() {
        let mu = DiscreteMeasure::from_atoms(2, vec![(Point::origin(2), 1.0)]).unwrap();
        for q in [-2.0, 0.0, 1.0, 3.0] {
            assert_eq!(packing_moment(&mu.view(), q, 0.7), 1.0);
        }
    }

    #[test]
    fn corner_packing_matches_oracle() {
        let mu = corners();
        assert_eq!(packing_moment(&mu.view(), 2.0, 0.1), 0.25);
        assert_eq!(packing_moment_exact(&mu.view(), 2.0, 0.1).unwrap(), 0.25);
        // radius 0.6: centres must be > 1.2 apart, only diagonal pairs qualify
        assert_eq!(packing_moment_exact(&mu.view(), 0.0, 0.6).unwrap(), 2.0);
        assert_eq!(packing_moment(&mu.view(), 0.0, 0.6), 2.0);
    }

    #[test]
    fn empty_subset_moments_vanish() {
        let mu = corners();
        let e = SupportSubset::empty();
        let v = restrict(&mu, &e).unwrap();
        assert_eq!(packing_moment(&v, 2.0, 0.1), 0.0);
        assert_eq!(integral_moment(&v, 2.0, 0.1).unwrap(), 0.0);
        assert_eq!(convolution_moment(&v, 2.0, 1.0, 0.1).unwrap(), 0.0);
        assert_eq!(packing_moment_exact(&v, 2.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn integral_over_single_corner() {
        let mu = corners();
        let e = SupportSubset::new(vec![index_of(&mu, &[0.0, 0.0])], 4).unwrap();
        let v = restrict(&mu, &e).unwrap();
        assert_eq!(integral_moment(&v, 2.0, 0.3).unwrap(), 0.0625);
    }

    #[test]
    fn pair_moments() {
        let mu = pair();
        assert_eq!(integral_moment(&mu.view(), 2.0, 0.3).unwrap(), 0.5);
        let n = convolution_moment(&mu.view(), 2.0, 1.0, 0.3).unwrap();
        assert!((n - 0.55).abs() < 1e-15);
        assert!(integral_moment(&mu.view(), 1.0, 0.3).is_err());
        assert!(convolution_moment(&mu.view(), 2.0, 0.5, 0.3).is_err());
        let tight = DiscreteMeasure::from_atoms(1, vec![([0.0].into(), 0.5), ([0.01].into(), 0.5)])
            .unwrap();
        assert_eq!(integral_moment(&tight.view(), 2.0, 0.3).unwrap(), 1.0);
        assert_eq!(convolution_moment(&tight.view(), 3.0, 1.0, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn exact_oracle_limit() {
        let atoms = (0..21).map(|k| (Point::from([k as f64]), 1.0 / 21.0)).collect();
        let mu = DiscreteMeasure::from_atoms(1, atoms).unwrap();
        assert!(packing_moment_exact(&mu.view(), 1.0, 0.1).is_err());
    }
}
