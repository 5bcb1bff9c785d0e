use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::index::dist2;
use crate::measure::DiscreteMeasure;

/// I_s(μ) = Σ_{i≠j} w_i w_j |x_i − x_j|^{−s}.
///
/// The diagonal is excluded: on an atomic approximation of a diffuse measure
/// the i = j terms are infinite artefacts of discretisation. O(#atoms²).
pub fn s_energy(mu: &DiscreteMeasure, s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain(format!("energy exponent must be positive, got {s}")));
    }
    let n = mu.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = mu.point(i);
            let mut row = 0.0;
            for j in i + 1..n {
                row += mu.weight(j) * dist2(x, mu.point(j)).powf(-0.5 * s);
            }
            mu.weight(i) * row
        })
        .collect();
    Ok(2.0 * rows.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Point;

    #[test]
    fn energy_examples() {
        let one = DiscreteMeasure::from_atoms(2, vec![(Point::origin(2), 1.0)]).unwrap();
        assert_eq!(s_energy(&one, 1.5).unwrap(), 0.0);
        let pair = DiscreteMeasure::from_atoms(1, vec![([0.0].into(), 0.5), ([1.0].into(), 0.5)])
            .unwrap();
        for s in [0.3, 1.0, 2.7] {
            assert_eq!(s_energy(&pair, s).unwrap(), 0.5);
        }
        let corners = DiscreteMeasure::from_atoms(
            2,
            vec![
                ([0.0, 0.0].into(), 0.25),
                ([1.0, 0.0].into(), 0.25),
                ([0.0, 1.0].into(), 0.25),
                ([1.0, 1.0].into(), 0.25),
            ],
        )
        .unwrap();
        let expected = (8.0 + 2.0 * 2f64.sqrt()) / 16.0;
        assert!((s_energy(&corners, 1.0).unwrap() - expected).abs() < 1e-12);
        assert!(s_energy(&corners, 0.0).is_err());
    }
}
