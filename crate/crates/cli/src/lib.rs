//! Manifest-driven ensemble runs of the spin-register simulator.
//!
//! A [`RunManifest`] names one command, a register and an ensemble size.
//! [`run_ensemble`] executes it on a thread pool and writes CSV tables plus
//! `summary.json`. Output bytes depend only on the manifest, never on the
//! thread count.

pub mod manifest;
pub mod run;

pub use manifest::{
    parse_manifest, parse_manifest_str, parse_manifest_with, Command, Grid, ManifestError, Overrides, RunManifest,
};
pub use run::{format_float, run_ensemble, EnsembleSummary, RealizationFailure, RunError, VERSION};
