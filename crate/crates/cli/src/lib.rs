//! File formats, report emission and the command-line driver for
//! `adchart-core`.

pub mod commands;
mod error;
pub mod parallel;
pub mod report;
pub mod spec_doc;

pub use commands::{run, Cli, CommandKind, Options, RunOutput};
pub use error::{CliError, Result};
