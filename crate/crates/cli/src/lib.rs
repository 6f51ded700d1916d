//! Configuration, run pipeline, sweeps, oracle checks and reports for the
//! `berger-flow` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod oracle_check;
pub mod output;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
