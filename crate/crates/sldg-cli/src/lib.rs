//! Command-line companion for the `sldg-core` solver: benchmark and
//! accuracy drivers, a Vlasov–Poisson demonstrator, snapshot IO, and the
//! configuration plumbing (flags, config files, `SLDG_THREADS`).
//!
//! Everything the binary does is reachable through this library so the
//! integration tests can exercise commands without spawning a process.

pub mod bench;
pub mod commands;
pub mod config;
pub mod ic;
pub mod snapshot;
