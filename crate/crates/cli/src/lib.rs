//! Command-line front end for random attention model analysis: dataset
//! ingestion, tests and confidence sets, Monte Carlo grids and benchmarks.

pub mod bench;
pub mod commands;
pub mod config;
pub mod io;
pub mod mc;
