use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::measure::index::dist2;
use crate::measure::DiscreteMeasure;

/// φ^s_r(x) = min{1, (r/|x|)^s}; equals 1 at the origin.
#[inline]
pub fn kernel_value(x: &[f64], r: f64, s: f64) -> f64 {
    let norm2: f64 = x.iter().map(|c| c * c).sum();
    kernel_from_dist2(norm2, r, s)
}

#[inline]
fn kernel_from_dist2(d2: f64, r: f64, s: f64) -> f64 {
    if d2 <= r * r {
        1.0
    } else {
        (r / d2.sqrt()).powf(s)
    }
}

fn check_args(mu: &DiscreteMeasure, x: &[f64], r: f64, s: f64) -> Result<()> {
    if x.len() != mu.dim() {
        return Err(Error::validation(format!(
            "point of dimension {} against a measure in R^{}",
            x.len(),
            mu.dim()
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::domain(format!("kernel exponent must be >= 1, got {s}")));
    }
    Ok(())
}

/// μ∗φ^s_r(x): the exact kernel sum over all atoms, ascending atom order.
pub fn potential(mu: &DiscreteMeasure, x: &[f64], r: f64, s: f64) -> Result<f64> {
    check_args(mu, x, r, s)?;
    Ok(potential_unchecked(mu, x, r, s))
}

pub(crate) fn potential_unchecked(mu: &DiscreteMeasure, x: &[f64], r: f64, s: f64) -> f64 {
    let mut sum = 0.0;
    for (y, w) in mu.atoms() {
        sum += w * kernel_from_dist2(dist2(x, y), r, s);
    }
    sum
}

/// Σ w·φ(farthest point) over the tree nodes a few levels down: a lower
/// bound on μ∗φ(x) much tighter than the root's.
fn kernel_lower_bound(mu: &DiscreteMeasure, x: &[f64], r: f64, s: f64) -> f64 {
    let tree = mu.index();
    let mut front = vec![0u32];
    for _ in 0..LOWER_BOUND_LEVELS {
        let mut next = Vec::with_capacity(front.len() * 2);
        for &id in &front {
            match tree.node(id).children {
                Some((l, rr)) => next.extend([l, rr]),
                None => next.push(id),
            }
        }
        front = next;
    }
    front.iter().map(|&id| tree.node(id).weight * kernel_from_dist2(tree.max_dist2(id, x), r, s)).sum()
}

const LOWER_BOUND_LEVELS: u32 = 6;

/// μ∗φ^s_r(x) through the spatial index, with relative error at most
/// `rel_tol`.
///
/// A cell is summarised by the midpoint of the kernel range over its
/// bounding box once that range is at most `2ε`, with `ε = rel_tol · L` and
/// `L ≤ μ∗φ(x)` the larger of μ(B(x, r)) and the cell-wise floor of
/// [`kernel_lower_bound`]. A cell lying where the kernel is smooth may
/// instead be replaced by its centroid once the second-order Taylor bound is
/// at most `ε`. The absolute error is then at most `ε · Σ w = ε`.
pub fn potential_accelerated(
    mu: &DiscreteMeasure,
    x: &[f64],
    r: f64,
    s: f64,
    rel_tol: f64,
) -> Result<f64> {
    check_args(mu, x, r, s)?;
    if !(rel_tol > 0.0) {
        return Err(Error::domain(format!("relative tolerance must be positive, got {rel_tol}")));
    }
    let tree = mu.index();
    let floor = kernel_lower_bound(mu, x, r, s).max(mu.ball_mass_fast(x, r));
    let eps = rel_tol * floor;
    let dim = mu.dim();
    let coords = mu.coords();
    let weights = mu.weights();
    let mut sum = 0.0;
    let mut stack = vec![0u32];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        let near2 = tree.min_dist2(id, x);
        let hi = kernel_from_dist2(near2, r, s);
        let lo = kernel_from_dist2(tree.max_dist2(id, x), r, s);
        if hi - lo <= 2.0 * eps {
            sum += node.weight * 0.5 * (hi + lo);
            continue;
        }
        if near2 > r * r {
            // the box lies where φ = (r/d)^s is smooth: the centroid value
            // is off by at most ½·sup‖∇²φ‖·spread² per unit weight
            let hess = s * (s + 1.0) * r.powf(s) * near2.powf(-(s + 2.0) / 2.0);
            if 0.5 * hess * tree.centroid_spread2(id) <= eps {
                sum += node.weight * kernel_from_dist2(dist2(x, tree.centroid(id)), r, s);
                continue;
            }
        }
        match node.children {
            Some((l, rr)) => {
                stack.push(rr);
                stack.push(l);
            }
            None => {
                for i in node.start..node.end {
                    sum += weights[i] * kernel_from_dist2(dist2(x, &coords[i * dim..(i + 1) * dim]), r, s);
                }
            }
        }
    }
    Ok(sum)
}

/// Probability, over V distributed by the invariant measure on G(n, m), that
/// |π_V z| ≤ r when |z| = `norm`. The coordinates of a uniform unit vector
/// give |π_V z|²/|z|² ~ Beta(m/2, (n−m)/2).
pub fn haar_ball_probability(n: usize, m: usize, norm: f64, r: f64) -> f64 {
    if norm <= r {
        return 1.0;
    }
    if m >= n {
        return 0.0;
    }
    let t = (r / norm).powi(2);
    beta_reg(m as f64 / 2.0, (n - m) as f64 / 2.0, t)
}

/// The exact Haar average ∫ μ_V(B(π_V x, r)) dV for a discrete measure.
pub fn haar_projected_ball_mass(mu: &DiscreteMeasure, x: &[f64], r: f64, m: usize) -> f64 {
    let n = mu.dim();
    let mut sum = 0.0;
    for (y, w) in mu.atoms() {
        sum += w * haar_ball_probability(n, m, dist2(x, y).sqrt(), r);
    }
    sum
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a − F_b|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level 1%.
pub fn ks_critical_1pct(na: usize, nb: usize) -> f64 {
    let (a, b) = (na as f64, nb as f64);
    1.628 * ((a + b) / (a * b)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Point;

    fn pair(d: f64) -> DiscreteMeasure {
        DiscreteMeasure::from_atoms(1, vec![([0.0].into(), 0.5), ([d].into(), 0.5)]).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_value(&[0.0, 0.0], 1.0, 1.0), 1.0);
        assert_eq!(kernel_value(&[0.6, 0.8], 1.0, 2.0), 1.0);
        assert_eq!(kernel_value(&[2.0], 1.0, 1.0), 0.5);
        assert_eq!(kernel_value(&[0.0, 2.0], 1.0, 2.0), 0.25);
    }

    #[test]
    fn two_term_potential() {
        let mu = DiscreteMeasure::from_atoms(
            1,
            vec![([1.0].into(), 0.5), ([2.0].into(), 0.5)],
        )
        .unwrap();
        assert_eq!(potential(&mu, &[0.0], 1.0, 1.0).unwrap(), 0.75);
        assert_eq!(potential(&pair(0.05), &[0.0], 0.1, 1.0).unwrap(), 1.0);
        assert!(potential(&mu, &[0.0], 1.0, 0.5).is_err());
        assert!(potential(&mu, &[0.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn accelerated_within_tolerance() {
        let atoms: Vec<(Point, f64)> = (0..4000)
            .map(|k| {
                let t = k as f64 / 4000.0;
                (Point::from([t, (7.0 * t).fract()]), 1.0 / 4000.0)
            })
            .collect();
        let mu = DiscreteMeasure::from_atoms(2, atoms).unwrap();
        for (x, r, s) in [([0.3, 0.2], 0.01, 1.0), ([0.9, 0.9], 0.1, 2.0), ([2.0, -1.0], 0.05, 1.5)] {
            let exact = potential(&mu, &x, r, s).unwrap();
            let fast = potential_accelerated(&mu, &x, r, s, 1e-6).unwrap();
            assert!(((fast - exact) / exact).abs() <= 1e-6, "{x:?}: {fast} vs {exact}");
        }
    }

    #[test]
    fn haar_probability_line_in_plane() {
        for t in [0.1, 0.5, 0.9] {
            let p = haar_ball_probability(2, 1, 1.0, t);
            assert!((p - 2.0 / std::f64::consts::PI * t.asin()).abs() < 1e-10);
        }
        assert_eq!(haar_ball_probability(3, 3, 2.0, 1.0), 0.0);
        assert_eq!(haar_ball_probability(3, 1, 0.5, 1.0), 1.0);
        // onto a plane in R^3 the squared ratio is Beta(1, 1/2): CDF 1 − sqrt(1 − t²)
        let p = haar_ball_probability(3, 2, 1.0, 0.6);
        assert!((p - (1.0 - (1.0f64 - 0.36).sqrt())).abs() < 1e-10);
    }

    #[test]
    fn ks_basics() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
        assert!((ks_statistic(&[0.0, 2.0], &[1.0, 3.0]) - 0.5).abs() < 1e-15);
    }
}
