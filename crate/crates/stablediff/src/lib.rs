//! Parallel runners, file formats and the `stablediff` command-line tool on
//! top of `stablediff-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod parallel;

pub use error::{CliError, Result};
