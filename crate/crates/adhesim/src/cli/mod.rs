//! Configuration-driven entry points: plain-text run configuration,
//! snapshot format, PNG rendering, and the four subcommand drivers.

pub mod commands;
pub mod config;
pub mod heatmap;
pub mod snapshot;
