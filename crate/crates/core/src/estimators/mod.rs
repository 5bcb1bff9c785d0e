//! Moments over scale grids and the dimension quantities extracted from them.

mod cover;
mod energy;
mod moments;
mod output;
mod scale;
mod slope;
mod spectrum;
mod tau;

pub use cover::{cover_proxy_dim, cover_proxy_with, dyadic_pieces, CoverProxy, DepthProxy, ProxyKind, ProxyTables};
pub use energy::s_energy;
pub use moments::{
    convolution_moment, integral_from_table, integral_moment, packing_moment,
    packing_moment_exact, GreedyPackings, MassTable, PotentialTable, EXACT_PACKING_LIMIT,
};
pub use output::{
    to_json_with_meta, write_estimates_csv, write_proxies_csv, write_series_csv,
    write_spectrum_csv, ESTIMATE_HEADER,
};
pub use scale::{
    ScaleGrid, ScaleSample, ScaleSeries, ScaleSpec, DEFAULT_LADDER, DEFAULT_RESOLUTION_GUARD, DEFAULT_TRIM,
    MIN_WINDOW,
};
pub use slope::{slope_estimate, DimensionEstimate, EstimateKind};
pub use spectrum::{coarse_spectrum, legendre_transform, HolderBall, SpectrumCurve, SpectrumPoint};
pub use tau::{box_series, conv_series, tau_box, tau_conv, BoxTables, ConvTables, MomentMode, TauOptions};
