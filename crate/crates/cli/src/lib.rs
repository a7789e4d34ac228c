//! Command-line driver for the weighted Hardy identity verifier: config
//! parsing, the verification and sharpness runs, and report bundles.

// Negated float comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod run;

pub use bundle::ReportBundle;
pub use config::{Check, ConfigError, RunConfig};
pub use run::{CliError, Outcome, EXIT_CONFIG, EXIT_FAILURE, EXIT_HYPOTHESIS, EXIT_OK};
