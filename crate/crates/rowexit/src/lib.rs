//! File formats, run configuration and the command line around `rowexit-core`.
//!
//! - [`io`]: PNG colour and 16-bit depth frames
//! - [`config`]: the flat `key = value` run configuration
//! - [`records`]: trial CSV rows, JSON-lines event logs, replay manifests
//! - [`simulate`], [`replay`], [`match_cmd`], [`report`]: the subcommands
//! - [`cli`]: argument parsing and exit codes

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod match_cmd;
pub mod records;
pub mod replay;
pub mod report;
pub mod simulate;

pub use error::{CliError, Result};
