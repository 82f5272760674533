//! File formats, configuration and subcommands behind the `coderank` binary.

pub mod commands;
pub mod config;
pub mod formats;
