//! Library surface of the command-line tool, kept separate from `main` so
//! integration tests can drive configuration loading, CSV I/O, and the
//! scenario runners directly.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod report;
