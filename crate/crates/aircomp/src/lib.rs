//! Simulation driver for digital over-the-air sum computation.
//!
//! Parses experiment files, runs sweeps through [`aircomp_core`], and writes
//! CSV results with JSON metadata. The `aircomp` binary wraps all of it.

pub mod config;
pub mod demo;
pub mod dump;
pub mod output;
pub mod verify;
