//! File formats, batch drivers and the command implementations behind the
//! `cm-spaces` binary.

pub mod commands;
pub mod error;
pub mod format;
pub mod parallel;

pub use commands::Outcome;
pub use error::CliError;
