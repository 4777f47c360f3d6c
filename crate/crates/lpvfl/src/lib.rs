//! File formats, experiments and the command line for `lpvfl-core`.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod experiment;
pub mod formats;
