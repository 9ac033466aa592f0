//! Experiment runner for the radial Gelfand laboratory.
//!
//! A run is described by a [`RunConfig`]; [`run`] validates it, computes every artifact
//! in memory and only then writes the output directory, so a rejected configuration
//! leaves nothing behind.

pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod run;
pub mod suite;

pub use config::{Command, RunConfig};
pub use error::LabError;
pub use parallel::Rayon;
pub use run::{execute, run, Artifact, RunOutcome};
