//! Configuration, file formats and run drivers for the `iks` command.

pub mod config;
pub mod output;
pub mod run;
