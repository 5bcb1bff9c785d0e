//! Grassmannian sampling, orthogonal projections and the kernel potential.

mod kernel;
mod random;
mod subspace;

pub use kernel::{
    haar_ball_probability, haar_projected_ball_mass, kernel_value, ks_critical_1pct,
    ks_statistic, potential, potential_accelerated,
};
pub(crate) use kernel::potential_unchecked;
pub use random::RandomSource;
pub(crate) use subspace::projected_coords;
pub use subspace::{
    project_measure, project_measure_with_map, project_point, sample_grassmannian, Subspace,
    ORTHONORMALITY_TOLERANCE,
};
