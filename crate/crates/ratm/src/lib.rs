//! Text formats, reports and the command-line front end over `ratm-core`.

pub mod dsl;

pub mod cli;
pub mod parallel;
pub mod report;
