//! Command-line front end for `nilkl`: structure files, analysis reports and
//! the acceptance suite.

pub mod commands;
pub mod error;
pub mod input;
pub mod report;
pub mod selftest;

pub use commands::run;
pub use error::{CliError, Result};
