//! Accumulated local effects.
//!
//! For bin `k` every member instance is evaluated twice, with the examined
//! feature set to the low and to the high boundary of the bin. The mean of
//! the differences is the bin's local effect; effects are summed cumulatively
//! and shifted to mean zero.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::binning::{BinMembers, BinPartition};
use crate::centering::{accumulate, order_free_mean, Centering};
use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::oracle::{score, PredictionOracle};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalEffect {
    pub mean_effect: f64,
    pub count: usize,
    /// The bin had no instances.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AleCurve {
    pub feature: String,
    pub partition: BinPartition,
    pub centering: Centering,
    pub bin_counts: Vec<usize>,
    pub mean_effects: Vec<f64>,
    /// Accumulated effect at each right boundary.
    pub uncentered: Vec<f64>,
    pub centered: Vec<f64>,
    pub center_offset: f64,
    pub empty_bins: Vec<bool>,
}

impl AleCurve {
    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }
}

/// Bins, members and batch builders for one feature of one dataset.
pub struct AleEstimator<'a> {
    ds: &'a Dataset,
    partition: &'a BinPartition,
    column: usize,
    members: BinMembers,
}

impl<'a> AleEstimator<'a> {
    pub fn new(ds: &'a Dataset, partition: &'a BinPartition) -> Result<Self> {
        partition.validate()?;
        let column = ds.column_index(&partition.feature)?;
        let kind = ds.schema().features[column].kind;
        if kind != partition.kind() {
            return Err(Error::Config(format!(
                "partition kind does not match column `{}`",
                partition.feature
            )));
        }
        let members = BinMembers::compute(ds, partition, column, 0..ds.row_count())?;
        Ok(Self {
            ds,
            partition,
            column,
            members,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.partition.len()
    }

    pub fn members(&self) -> &BinMembers {
        &self.members
    }

    fn perturbed(&self, rows: &[usize], value: &crate::data::Value) -> Vec<Instance> {
        rows.iter()
            .map(|&r| self.ds.rows()[r].with_value(self.column, value))
            .collect()
    }

    /// Mean local effect of bin `k` (1-based). Issues one low-boundary and one
    /// high-boundary batch.
    pub fn local_effect<O>(&self, oracle: &O, k: usize) -> Result<LocalEffect>
    where
        O: PredictionOracle + ?Sized,
    {
        if k == 0 || k > self.bin_count() {
            return Err(Error::Config(format!(
                "bin index {k} outside 1..={}",
                self.bin_count()
            )));
        }
        let rows = &self.members.per_bin[k - 1];
        if rows.is_empty() {
            return Ok(LocalEffect {
                mean_effect: 0.0,
                count: 0,
                degenerate: true,
            });
        }
        let low = score(oracle, &self.perturbed(rows, &self.partition.low(k)))?;
        let high = score(oracle, &self.perturbed(rows, &self.partition.high(k)))?;
        let diffs: Vec<f64> = high.iter().zip(&low).map(|(h, l)| h - l).collect();
        Ok(LocalEffect {
            mean_effect: order_free_mean(&diffs),
            count: rows.len(),
            degenerate: false,
        })
    }

    /// Accumulates and centers per-bin effects given in bin order.
    pub fn assemble(&self, effects: &[LocalEffect], centering: Centering) -> Result<AleCurve> {
        if effects.len() != self.bin_count() {
            return Err(Error::Config(format!(
                "expected {} bin effects, got {}",
                self.bin_count(),
                effects.len()
            )));
        }
        let bin_counts: Vec<usize> = effects.iter().map(|e| e.count).collect();
        if bin_counts.iter().all(|&c| c == 0) {
            return Err(Error::AllBinsEmpty);
        }
        let mean_effects: Vec<f64> = effects.iter().map(|e| e.mean_effect).collect();
        let uncentered = accumulate(&mean_effects);
        let center_offset = centering
            .offset(&uncentered, &bin_counts)
            .ok_or(Error::AllBinsEmpty)?;
        let centered = uncentered.iter().map(|v| v - center_offset).collect();
        Ok(AleCurve {
            feature: self.partition.feature.clone(),
            partition: self.partition.clone(),
            centering,
            bin_counts,
            mean_effects,
            uncentered,
            centered,
            center_offset,
            empty_bins: effects.iter().map(|e| e.degenerate).collect(),
        })
    }

    pub fn run<O>(&self, oracle: &O, centering: Centering) -> Result<AleCurve>
    where
        O: PredictionOracle + ?Sized,
    {
        let effects = (1..=self.bin_count())
            .map(|k| self.local_effect(oracle, k))
            .collect::<Result<Vec<_>>>()?;
        self.assemble(&effects, centering)
    }
}

pub fn bin_local_effect<O>(
    ds: &Dataset,
    oracle: &O,
    partition: &BinPartition,
    k: usize,
) -> Result<LocalEffect>
where
    O: PredictionOracle + ?Sized,
{
    AleEstimator::new(ds, partition)?.local_effect(oracle, k)
}

pub fn ale_curve<O>(
    ds: &Dataset,
    oracle: &O,
    partition: &BinPartition,
    centering: Centering,
) -> Result<AleCurve>
where
    O: PredictionOracle + ?Sized,
{
    AleEstimator::new(ds, partition)?.run(oracle, centering)
}
