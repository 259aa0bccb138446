//! Std companion of `afa-core`: image and label-map files, TOML
//! configuration, timed multi-threaded runs, dataset benchmarking and the
//! `afa` command line.

pub mod bench;
pub mod config;
pub mod error;
pub mod imgio;
pub mod run;

pub use afa_core as core;
pub use error::{AfaError, Result};
