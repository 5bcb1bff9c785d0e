//! Checks of the projection laws on measures with known dimension functions.

mod catalog;
mod checks;
mod suite;

pub use catalog::{catalog_entry, AnalyticTau, CatalogEntry, MeasureSpec, CATALOG_NAMES, SHIPPED};
pub use checks::{
    check_formalism, check_kernel_identity, check_th1, check_th2, check_th3, check_thbb,
    check_thld, mc_projected_masses, sample_atoms, CheckContext, CheckOutcome, CheckRecord,
    Diagnostics, EnergyThreshold, Hypothesis, LawScope, OracleRow,
};
pub use suite::{
    run_check, run_suite, spec_rng, CheckId, CheckReport, CheckSpec, LawSummary, SuiteReport,
    SuiteSpec, SuiteSummary, Verdict, DEFAULT_QUOTA,
};
