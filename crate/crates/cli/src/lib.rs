//! Experiment runner for the spheroidal Rydberg Toffoli gate: parameter
//! sweeps, full-register gate runs and truth tables, written as CSV tables
//! with gnuplot scripts and JSON run records.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::Outcome;
pub use config::RunConfig;
