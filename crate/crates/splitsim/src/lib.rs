//! IO, configuration, sweeps and the command-line interface around
//! `splitsim-core`.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod parallel;
pub mod plot;
pub mod sweep;
