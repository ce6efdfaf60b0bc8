//! IO, reporting, and orchestration around `qdecomp-core`: CSV ingestion
//! with survey weights, a rayon-parallel bootstrap driver, report files with
//! a reproducible run manifest, and the `qdecomp` CLI commands.

pub mod config;
pub mod diagnose;
pub mod error;
pub mod ingest;
pub mod parallel;
pub mod report;
pub mod run;
pub mod simulate;

pub use error::{CliError, ExitCode};
