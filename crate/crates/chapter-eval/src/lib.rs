//! File formats, the external similarity client, run configuration and
//! reporting for the `chapter-eval` command line tool.

pub mod cli;
pub mod config;
pub mod eval;
pub mod formats;
pub mod report;
pub mod scorer;
