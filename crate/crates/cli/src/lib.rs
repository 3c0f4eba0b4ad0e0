//! Command-line front end and HTTP service for the kbqa engine.

pub mod commands;
pub mod config;
pub mod error;
pub mod service;

pub use commands::{run, Cli};
pub use error::CliError;
