//! Command implementations behind the `ges2n` binary.

pub mod config;
pub mod error;
pub mod run;
pub mod sweep;
pub mod synth;

pub use error::{CliError, CliResult};
