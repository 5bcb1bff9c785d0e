//! Multifractal Hewitt–Stromberg dimensions of discrete measures and of their
//! orthogonal projections.
//!
//! The pieces: [`measure`] builds atomic measures (directly, from CSV, or from
//! an iterated function system) with an exact spatial index; [`geometry`]
//! samples subspaces and projects; [`estimators`] turns scale series of
//! packing and kernel moments into dimension estimates and spectra;
//! [`experiments`] checks projection laws against closed-form oracles.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod measure;
pub mod provenance;
mod serde_ext;

pub use serde_ext::csv_f64;

pub use error::{Error, Result};
pub use geometry::{RandomSource, Subspace};
pub use measure::{DiscreteMeasure, IfsSpec, MeasureView, Point, SupportSubset};
