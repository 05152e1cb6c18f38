//! Support code for the `diagest` command-line tool.

pub mod rows;
pub mod runner;
pub mod suites;
