//! Companion to `wqed-core`: dense-diagonalization oracle, parallel sweeps,
//! configuration, file formats and the `wqed` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod oracle;
pub mod output;

pub use error::{Error, Result};
