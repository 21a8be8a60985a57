//! Library side of the `qnn` command-line harness: experiment configs,
//! benchmark plumbing, boundary export, and the gradient-check driver.
//! The binary in `main.rs` is a thin clap wrapper over these functions.

pub mod config;
pub mod harness;
