//! IO, file formats, and the `feedfx` command-line tool on top of
//! `feedfx-core`.

pub mod artifact;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod runner;
