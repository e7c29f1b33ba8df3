//! Command-line interface and HTTP service over workspaces of CIM models.

pub mod commands;
pub mod report;
pub mod service;
pub mod workspace;

pub use commands::{run, Cli};
