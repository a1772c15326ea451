//! Batch front end for the `simflow-core` pipelines: TOML configuration,
//! JSON reports, CSV tables and SVG figures.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod registry;
pub mod report;
pub mod svg;

pub use error::{CliError, Exit};
