//! Files, processes and rendering around [`fale_core`].
//!
//! `fale_core` holds the estimators and has no I/O. This crate adds CSV and
//! schema loading, model persistence, the subprocess oracle, JSON reports,
//! SVG plots, bin-parallel execution and the `fale` command line.

#![forbid(unsafe_code)]

pub mod cli;
mod error;
pub mod external;
pub mod io;
pub mod model_io;
pub mod parallel;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
pub use external::ExternalOracle;
pub use report::{Report, RunMetadata, FORMAT};
pub use svg::{BarMode, PlotSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
