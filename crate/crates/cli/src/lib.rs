//! Sweeps, tables and figure datasets on top of `imdd-core`.

pub mod commands;
pub mod config;
pub mod table;

pub use commands::{reproduce, run, Figure, Summary};
pub use config::{AlphaGrid, CliError, Command, RunConfig, OUT_DIR_ENV};
pub use table::{Format, Table, VERSION_LINE};
