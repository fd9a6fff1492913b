//! Experiment harness for the historypca solvers: scenario specs and
//! presets, a parallel runner, CSV traces with per-seed summaries, and SVG
//! plots.

pub mod config;
mod error;
pub mod presets;
pub mod runner;
pub mod spec;
pub mod svg;
pub mod trace;

pub use error::{BenchError, Result};
