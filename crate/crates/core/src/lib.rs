//! Leakage-aware evaluation toolkit for vibration-based bearing fault
//! diagnosis: dataset manifests, bearing-wise (and deliberately leaky)
//! split generation with a provenance auditor, envelope-spectrum feature
//! extraction, shallow multi-label classifiers, and Macro-AUROC evaluation
//! under a double cross-validation protocol.
//!
//! Start from the runnable programs in `examples/` — there is one per major
//! capability — or from the `bearing-eval` binary for file-based workflows.

pub mod cli;
pub mod datamodel;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod splits;
pub mod synthetic;
pub mod toy;

pub use error::{Error, Result};
