//! Command-line plumbing for the `ksgd` simulator: the flat config format,
//! `KSGD1` snapshots, CSV emitters, quick-look plots and the subcommands.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod snapshot;
