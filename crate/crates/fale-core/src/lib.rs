//! Fairness-aware accumulated local effects (FALE) for black-box tabular models.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, processes or rendering lives in the `fale` companion crate.
//!
//! The main pieces:
//!
//! - [`data`]: schema-typed datasets and protected-group splitting.
//! - [`binning`]: ordered bin partitions of one feature's domain.
//! - [`oracle`]: the black-box scoring interface plus a small logistic model.
//! - [`ale`]: classical accumulated local effects.
//! - [`measure`]: unfairness functionals over two prediction multisets.
//! - [`fale`]: per-bin unfairness deltas on hypothetical boundary groups.
//! - [`synth`]: synthetic data with a known injected bias and its closed-form curve.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ale;
pub mod binning;
mod centering;
pub mod data;
mod error;
pub mod fale;
pub mod measure;
pub mod oracle;
pub mod synth;

pub use ale::{ale_curve, bin_local_effect, AleCurve, AleEstimator, LocalEffect};
pub use binning::{BinPartition, BinStrategy, Bins};
pub use centering::Centering;
pub use data::{
    Dataset, FeatureKind, FeatureSchema, GroupSplit, Instance, ProtectedSpec, Role, Schema, Value,
};
pub use error::{Error, ErrorKind, OracleError, Result};
pub use fale::{
    bin_effect, fale_curve, global_unfairness, BinEffect, BinResult, FaleCurve, FaleEstimator,
};
pub use measure::{GroupPredictions, Orientation, UnfairnessMeasure};
pub use oracle::{BuiltinModel, OutputMode, PredictionOracle, TrainConfig};
