//! Experiment orchestration: configuration, convergence studies, the
//! critical half-width search, the linear-algebra validation suite, and the
//! command-line driver that writes each result as CSV or JSON.

pub mod cli;
pub mod config;
pub mod io;
pub mod studies;
pub mod validate;
