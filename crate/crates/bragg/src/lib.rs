//! Command-line front end for `bragg-core`: commented JSON configs, scan and
//! cloud CSV files, and the `bragg` subcommands.
//!
//! Values cross this boundary in nm, um and degrees; every output column or
//! key carries its unit as a suffix (`_nm`, `_deg`, `_m`, `_sr`, `_per_m`).

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{Format, RunConfig};
pub use error::CliError;
