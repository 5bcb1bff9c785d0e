//! Monte-Carlo error of the projected-ball average shrinks like count^{-1/2}.

use mfdim::experiments::mc_projected_masses;
use mfdim::geometry::{haar_projected_ball_mass, sample_grassmannian};
use mfdim::{DiscreteMeasure, Point, RandomSource};

fn measure() -> DiscreteMeasure {
    let atoms = (0..40)
        .map(|k| {
            let t = k as f64 / 40.0;
            (Point::new(vec![t, (7.0 * t).sin() * 0.4, (3.0 * t).cos() * 0.3]), 1.0 / 40.0)
        })
        .collect();
    DiscreteMeasure::from_atoms(3, atoms).unwrap()
}

/// Root-mean-square error over independent replicates.
fn rms_error(mu: &DiscreteMeasure, x: &Point, r: f64, count: usize, reps: u64) -> f64 {
    let exact = haar_projected_ball_mass(mu, x, r, 1);
    let mut sq = 0.0;
    for rep in 0..reps {
        let vs = sample_grassmannian(3, 1, count, &RandomSource::new(rep, count as u64)).unwrap();
        let est = mc_projected_masses(mu, std::slice::from_ref(x), &[r], &vs)[0] / count as f64;
        sq += (est - exact).powi(2);
    }
    (sq / reps as f64).sqrt()
}

#[test]
fn error_decreases_at_root_rate() {
    let mu = measure();
    let x = Point::new(mu.point(10).to_vec());
    let coarse = rms_error(&mu, &x, 0.1, 100, 40);
    let fine = rms_error(&mu, &x, 0.1, 1600, 40);
    // four doublings: expected ratio 4
    assert!(coarse / fine >= 3.0, "rms {coarse} -> {fine}");
}

#[test]
fn exact_average_is_the_limit() {
    let mu = measure();
    let x = Point::new(mu.point(25).to_vec());
    let vs = sample_grassmannian(3, 1, 20_000, &RandomSource::new(1, 0)).unwrap();
    let est = mc_projected_masses(&mu, std::slice::from_ref(&x), &[0.15], &vs)[0] / 20_000.0;
    let exact = haar_projected_ball_mass(&mu, &x, 0.15, 1);
    assert!((est - exact).abs() <= 0.02 * exact, "{est} vs {exact}");
}
