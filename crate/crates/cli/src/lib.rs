//! Library side of the `evitest` command-line tool.

pub mod error;
pub mod ingest;
pub mod report;
pub mod svg;
pub mod sweep;

pub use error::{CliError, Result};
