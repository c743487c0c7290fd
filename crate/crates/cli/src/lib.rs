//! File formats and subcommands behind the `qqt` binary.
//!
//! Every command reads its inputs, hands them to `qqt-core`, and writes
//! results through [`output::write_atomic`]. Inputs are fully validated
//! before anything is written.

pub mod budgets;
pub mod cli;
pub mod commands;
pub mod error;
pub mod fitfile;
pub mod manifest;
pub mod numfmt;
pub mod obslog;
pub mod output;
