//! End-to-end pipelines: each run generates a set, walks an inequality chain
//! with measured quantities and records every step in a [`Ledger`].
//!
//! Exact invariants are hard entries; steps that only hold up to
//! `δ^{-O(ε)}` factors are logged with their slack exponent.

mod common;
mod config;
mod content;
mod difference;
mod energy_check;
mod incidence_run;
mod ledger;
mod report;
mod sum;

pub use common::upsilon;
pub use config::{ExperimentConfig, Mode};
pub use content::run_elekes_content;
pub use difference::run_difference_product;
pub use energy_check::{
    dyadic_reconstruction, energy_bound_entries, run_energy_bound_check, BoundInputs, DyadicClass,
    DyadicReconstruction, RECONSTRUCTION_FACTOR,
};
pub use incidence_run::run_incidence_ratio;
pub use ledger::{Check, Ledger, LedgerEntry, Measure};
pub use report::{emit_report, InputSummary, Report, REPORT_SCHEMA};
pub use sum::run_sum_product;

use crate::error::{Error, Result};

/// Runs the pipeline selected by `config.mode`, on a dedicated thread pool
/// when `config.threads` is set.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let go = || match config.mode {
        Mode::DifferenceProduct => run_difference_product(config),
        Mode::SumProduct => run_sum_product(config),
        Mode::ElekesContent => run_elekes_content(config),
        Mode::EnergyBounds => run_energy_bound_check(config),
        Mode::IncidenceRatio => run_incidence_ratio(config),
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(go),
        None => go(),
    }
}
