//! Fairness-aware accumulated local effects.
//!
//! For bin `k` the in-bin members of each group are copied twice, once with
//! the examined feature overwritten by the low boundary and once by the high
//! boundary. Every other feature, the protected attribute included, keeps its
//! value. The bin's delta is `u(G0_high, G1_high) - u(G0_low, G1_low)`; deltas
//! are summed cumulatively (no per-bin normalisation) and shifted to mean
//! zero using the in-bin populations `n0 + n1` as weights.
//!
//! A bin where one group is empty has no defined unfairness; it contributes a
//! zero delta and is flagged `degenerate`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::binning::{BinMembers, BinPartition};
use crate::centering::{accumulate, Centering};
use crate::data::{split_by_protected, Dataset, Group, GroupSplit, Instance, ProtectedSpec, Value};
use crate::error::{Error, Result};
use crate::measure::{GroupPredictions, UnfairnessMeasure};
use crate::oracle::{score, PredictionOracle};

/// Per-bin result before accumulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinEffect {
    pub bin_index: usize,
    pub low: Value,
    pub high: Value,
    pub n0: usize,
    pub n1: usize,
    pub u_low: Option<f64>,
    pub u_high: Option<f64>,
    pub delta: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub bin_index: usize,
    pub low: Value,
    pub high: Value,
    pub n0: usize,
    pub n1: usize,
    pub u_low: Option<f64>,
    pub u_high: Option<f64>,
    pub delta: f64,
    pub accumulated: f64,
    pub centered: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaleCurve {
    pub feature: String,
    pub partition: BinPartition,
    pub protected: ProtectedSpec,
    pub measure: UnfairnessMeasure,
    pub centering: Centering,
    pub per_bin: Vec<BinResult>,
    /// Absolute unfairness of the unperturbed predictions over all audited rows.
    pub global_unfairness: f64,
    pub center_offset: f64,
}

impl FaleCurve {
    pub fn len(&self) -> usize {
        self.per_bin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_bin.is_empty()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.per_bin.iter().map(|b| b.delta).collect()
    }

    pub fn accumulated(&self) -> Vec<f64> {
        self.per_bin.iter().map(|b| b.accumulated).collect()
    }

    pub fn centered(&self) -> Vec<f64> {
        self.per_bin.iter().map(|b| b.centered).collect()
    }

    /// Up to `n` bins ordered by descending `|centered|`, ties by bin index.
    pub fn top_bins(&self, n: usize) -> Vec<&BinResult> {
        let mut bins: Vec<&BinResult> = self.per_bin.iter().collect();
        bins.sort_by(|a, b| {
            libm::fabs(b.centered)
                .total_cmp(&libm::fabs(a.centered))
                .then(a.bin_index.cmp(&b.bin_index))
        });
        bins.truncate(n);
        bins
    }
}

/// Bin membership per protected group for one examined feature.
pub struct FaleEstimator<'a> {
    ds: &'a Dataset,
    partition: &'a BinPartition,
    column: usize,
    measure: UnfairnessMeasure,
    spec: ProtectedSpec,
    split: GroupSplit,
    labels: Option<Vec<bool>>,
    /// `(non-protected rows, protected rows)` per bin.
    bins: Vec<(Vec<usize>, Vec<usize>)>,
}

impl<'a> FaleEstimator<'a> {
    pub fn new(
        ds: &'a Dataset,
        partition: &'a BinPartition,
        measure: UnfairnessMeasure,
        spec: &ProtectedSpec,
    ) -> Result<Self> {
        partition.validate()?;
        if partition.feature == spec.attribute {
            return Err(Error::FeatureIsProtected(partition.feature.clone()));
        }
        let column = ds.column_index(&partition.feature)?;
        if ds.schema().features[column].kind != partition.kind() {
            return Err(Error::Config(format!(
                "partition kind does not match column `{}`",
                partition.feature
            )));
        }
        let split = split_by_protected(ds, spec)?;
        let labels = if measure.needs_labels() {
            let target = ds.schema().target().ok_or_else(|| {
                Error::Config(format!("{measure} needs a column with role `target`"))
            })?;
            Some(ds.binary_column(target)?)
        } else {
            None
        };
        let retained = (0..ds.row_count()).filter(|&r| split.group_of(r).is_some());
        let members = BinMembers::compute(ds, partition, column, retained)?;
        let bins = members
            .per_bin
            .into_iter()
            .map(|rows| {
                rows.into_iter()
                    .partition(|&r| split.group_of(r) == Some(Group::NonProtected))
            })
            .collect();
        Ok(Self {
            ds,
            partition,
            column,
            measure,
            spec: spec.clone(),
            split,
            labels,
            bins,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.partition.len()
    }

    pub fn split(&self) -> &GroupSplit {
        &self.split
    }

    pub fn measure(&self) -> UnfairnessMeasure {
        self.measure
    }

    fn labels_of(&self, rows: &[usize]) -> Option<Vec<bool>> {
        self.labels
            .as_ref()
            .map(|l| rows.iter().map(|&r| l[r]).collect())
    }

    fn evaluate(
        &self,
        measure: UnfairnessMeasure,
        scores: &[f64],
        n0: usize,
        labels0: &Option<Vec<bool>>,
        labels1: &Option<Vec<bool>>,
    ) -> Result<f64> {
        let g0 = GroupPredictions {
            scores: &scores[..n0],
            labels: labels0.as_deref(),
        };
        let g1 = GroupPredictions {
            scores: &scores[n0..],
            labels: labels1.as_deref(),
        };
        measure.evaluate(&g0, &g1)
    }

    /// Unfairness delta of bin `k` (1-based). One batch per boundary.
    pub fn bin_effect<O>(&self, oracle: &O, k: usize) -> Result<BinEffect>
    where
        O: PredictionOracle + ?Sized,
    {
        if k == 0 || k > self.bin_count() {
            return Err(Error::Config(format!(
                "bin index {k} outside 1..={}",
                self.bin_count()
            )));
        }
        let (rows0, rows1) = &self.bins[k - 1];
        let (low, high) = (self.partition.low(k), self.partition.high(k));
        let mut effect = BinEffect {
            bin_index: k,
            low,
            high,
            n0: rows0.len(),
            n1: rows1.len(),
            u_low: None,
            u_high: None,
            delta: 0.0,
            degenerate: true,
        };
        if rows0.is_empty() || rows1.is_empty() {
            return Ok(effect);
        }
        let labels0 = self.labels_of(rows0);
        let labels1 = self.labels_of(rows1);
        if !has_positive(&labels0) || !has_positive(&labels1) {
            // equal opportunity is undefined without positive-label members
            return Ok(effect);
        }
        let perturbed = |value: &Value| -> Vec<Instance> {
            rows0
                .iter()
                .chain(rows1)
                .map(|&r| self.ds.rows()[r].with_value(self.column, value))
                .collect()
        };
        let low_scores = score(oracle, &perturbed(&effect.low))?;
        let high_scores = score(oracle, &perturbed(&effect.high))?;
        let n0 = rows0.len();
        let u_low = self.evaluate(self.measure, &low_scores, n0, &labels0, &labels1)?;
        let u_high = self.evaluate(self.measure, &high_scores, n0, &labels0, &labels1)?;
        effect.u_low = Some(u_low);
        effect.u_high = Some(u_high);
        effect.delta = u_high - u_low;
        effect.degenerate = false;
        Ok(effect)
    }

    /// `measure` on the unperturbed predictions of every audited row.
    pub fn global_unfairness<O>(&self, oracle: &O, measure: UnfairnessMeasure) -> Result<f64>
    where
        O: PredictionOracle + ?Sized,
    {
        let rows: Vec<usize> = self
            .split
            .non_protected
            .iter()
            .chain(&self.split.protected)
            .copied()
            .collect();
        let batch: Vec<Instance> = rows.iter().map(|&r| self.ds.rows()[r].clone()).collect();
        let scores = score(oracle, &batch)?;
        let n0 = self.split.non_protected.len();
        let labels0 = self.labels_of(&self.split.non_protected);
        let labels1 = self.labels_of(&self.split.protected);
        self.evaluate(measure, &scores, n0, &labels0, &labels1)
    }

    /// Accumulates and centers bin effects given in bin order.
    pub fn assemble(
        &self,
        effects: &[BinEffect],
        global_unfairness: f64,
        centering: Centering,
    ) -> Result<FaleCurve> {
        if effects.len() != self.bin_count() {
            return Err(Error::Config(format!(
                "expected {} bin effects, got {}",
                self.bin_count(),
                effects.len()
            )));
        }
        if effects.iter().all(|e| e.degenerate) {
            return Err(Error::NoAuditableBins);
        }
        let deltas: Vec<f64> = effects.iter().map(|e| e.delta).collect();
        let accumulated = accumulate(&deltas);
        let weights: Vec<usize> = effects.iter().map(|e| e.n0 + e.n1).collect();
        let center_offset = centering
            .offset(&accumulated, &weights)
            .ok_or(Error::NoAuditableBins)?;
        let per_bin = effects
            .iter()
            .zip(&accumulated)
            .map(|(e, &acc)| BinResult {
                bin_index: e.bin_index,
                low: e.low.clone(),
                high: e.high.clone(),
                n0: e.n0,
                n1: e.n1,
                u_low: e.u_low,
                u_high: e.u_high,
                delta: e.delta,
                accumulated: acc,
                centered: acc - center_offset,
                degenerate: e.degenerate,
            })
            .collect();
        Ok(FaleCurve {
            feature: self.partition.feature.clone(),
            partition: self.partition.clone(),
            protected: self.spec.clone(),
            measure: self.measure,
            centering,
            per_bin,
            global_unfairness,
            center_offset,
        })
    }

    pub fn run<O>(&self, oracle: &O, centering: Centering) -> Result<FaleCurve>
    where
        O: PredictionOracle + ?Sized,
    {
        let effects = (1..=self.bin_count())
            .map(|k| self.bin_effect(oracle, k))
            .collect::<Result<Vec<_>>>()?;
        let global = self.global_unfairness(oracle, self.measure.absolute())?;
        self.assemble(&effects, global, centering)
    }
}

fn has_positive(labels: &Option<Vec<bool>>) -> bool {
    labels.as_ref().is_none_or(|l| l.iter().any(|&x| x))
}

pub fn bin_effect<O>(
    ds: &Dataset,
    oracle: &O,
    measure: UnfairnessMeasure,
    partition: &BinPartition,
    k: usize,
    spec: &ProtectedSpec,
) -> Result<BinEffect>
where
    O: PredictionOracle + ?Sized,
{
    FaleEstimator::new(ds, partition, measure, spec)?.bin_effect(oracle, k)
}

pub fn fale_curve<O>(
    ds: &Dataset,
    oracle: &O,
    measure: UnfairnessMeasure,
    partition: &BinPartition,
    spec: &ProtectedSpec,
    centering: Centering,
) -> Result<FaleCurve>
where
    O: PredictionOracle + ?Sized,
{
    FaleEstimator::new(ds, partition, measure, spec)?.run(oracle, centering)
}

/// `measure`, as given, on unperturbed predictions of all rows matching `spec`.
pub fn global_unfairness<O>(
    ds: &Dataset,
    oracle: &O,
    measure: UnfairnessMeasure,
    spec: &ProtectedSpec,
) -> Result<f64>
where
    O: PredictionOracle + ?Sized,
{
    let split = split_by_protected(ds, spec)?;
    let labels = if measure.needs_labels() {
        let target = ds
            .schema()
            .target()
            .ok_or_else(|| Error::Config(format!("{measure} needs a column with role `target`")))?;
        Some(ds.binary_column(target)?)
    } else {
        None
    };
    let pick =
        |rows: &[usize]| -> Vec<Instance> { rows.iter().map(|&r| ds.rows()[r].clone()).collect() };
    let s0 = score(oracle, &pick(&split.non_protected))?;
    let s1 = score(oracle, &pick(&split.protected))?;
    let l0: Option<Vec<bool>> = labels
        .as_ref()
        .map(|l| split.non_protected.iter().map(|&r| l[r]).collect());
    let l1: Option<Vec<bool>> = labels
        .as_ref()
        .map(|l| split.protected.iter().map(|&r| l[r]).collect());
    measure.evaluate(
        &GroupPredictions {
            scores: &s0,
            labels: l0.as_deref(),
        },
        &GroupPredictions {
            scores: &s1,
            labels: l1.as_deref(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, Role, Schema};
    use crate::oracle::FnOracle;
    use alloc::vec;

    fn schema() -> Schema {
        Schema::new(vec![
            FeatureSchema::numeric("x", Role::Feature),
            FeatureSchema::categorical("a", Role::Protected),
            FeatureSchema::numeric("y", Role::Target),
        ])
        .unwrap()
    }

    fn dataset(rows: &[(f64, &str, f64)]) -> Dataset {
        let rows = rows
            .iter()
            .map(|&(x, a, y)| {
                Instance::new(vec![Value::Num(x), Value::Cat(a.into()), Value::Num(y)])
            })
            .collect();
        Dataset::new(schema(), rows).unwrap()
    }

    fn spec() -> ProtectedSpec {
        ProtectedSpec::new("a", "1", "0")
    }

    fn x_of(i: &Instance) -> f64 {
        i.values[0].as_num().unwrap()
    }

    fn a_of(i: &Instance) -> f64 {
        if i.values[1].matches_label("1") {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn hand_evaluated_bin_delta() {
        let ds = dataset(&[(0.2, "0", 0.0), (0.6, "1", 1.0), (0.9, "0", 1.0)]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 1.0]).unwrap();
        let f = FnOracle(|i: &Instance| x_of(i) * (1.0 - a_of(i)));
        let e = bin_effect(
            &ds,
            &f,
            UnfairnessMeasure::SignedStatisticalParity,
            &p,
            1,
            &spec(),
        )
        .unwrap();
        assert_eq!(e.u_high, Some(1.0));
        assert_eq!(e.u_low, Some(0.0));
        assert_eq!(e.delta, 1.0);
        assert_eq!((e.n0, e.n1), (2, 1));
        assert!(!e.degenerate);
    }

    #[test]
    fn feature_independent_model_has_zero_delta() {
        let ds = dataset(&[(0.2, "0", 0.0), (0.6, "1", 1.0), (0.9, "0", 1.0)]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 1.0]).unwrap();
        let f = FnOracle(|i: &Instance| 0.3 + 0.4 * a_of(i));
        let e = bin_effect(
            &ds,
            &f,
            UnfairnessMeasure::StatisticalParity,
            &p,
            1,
            &spec(),
        )
        .unwrap();
        assert_eq!(e.u_high, e.u_low);
        assert_eq!(e.delta, 0.0);
    }

    #[test]
    fn single_group_bin_is_degenerate() {
        let ds = dataset(&[(0.2, "1", 0.0), (0.4, "1", 1.0), (0.9, "0", 1.0)]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 0.5, 1.0]).unwrap();
        let f = FnOracle(x_of);
        let e = bin_effect(
            &ds,
            &f,
            UnfairnessMeasure::StatisticalParity,
            &p,
            1,
            &spec(),
        )
        .unwrap();
        assert!(e.degenerate);
        assert_eq!(e.delta, 0.0);
        assert_eq!((e.n0, e.n1), (0, 2));
    }

    #[test]
    fn feature_equal_to_protected_rejected() {
        let ds = dataset(&[(0.2, "0", 0.0), (0.6, "1", 1.0)]);
        let p = BinPartition::for_column(&ds, "a", Default::default(), 2, None).unwrap();
        let f = FnOracle(x_of);
        let err = fale_curve(
            &ds,
            &f,
            UnfairnessMeasure::StatisticalParity,
            &p,
            &spec(),
            Centering::Weighted,
        )
        .unwrap_err();
        assert_eq!(err, Error::FeatureIsProtected("a".into()));
    }

    #[test]
    fn two_bins_accumulate_and_center() {
        let ds = dataset(&[
            (0.5, "0", 0.0),
            (0.5, "1", 0.0),
            (1.5, "0", 0.0),
            (1.5, "1", 0.0),
        ]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 1.0, 2.0]).unwrap();
        let est = FaleEstimator::new(&ds, &p, UnfairnessMeasure::SignedStatisticalParity, &spec())
            .unwrap();
        let effects: Vec<BinEffect> = [1.0, -1.0]
            .iter()
            .enumerate()
            .map(|(i, &d)| BinEffect {
                bin_index: i + 1,
                low: p.low(i + 1),
                high: p.high(i + 1),
                n0: 1,
                n1: 1,
                u_low: Some(0.0),
                u_high: Some(d),
                delta: d,
                degenerate: false,
            })
            .collect();
        let c = est.assemble(&effects, 0.0, Centering::Weighted).unwrap();
        assert_eq!(c.accumulated(), [1.0, 0.0]);
        assert_eq!(c.center_offset, 0.5);
        assert_eq!(c.centered(), [0.5, -0.5]);
    }

    #[test]
    fn constant_model_curve_is_zero() {
        let ds = dataset(&[
            (0.1, "0", 0.0),
            (0.3, "1", 0.0),
            (0.6, "0", 0.0),
            (0.8, "1", 1.0),
        ]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 0.5, 1.0]).unwrap();
        let f = FnOracle(|_: &Instance| 0.42);
        let c = fale_curve(
            &ds,
            &f,
            UnfairnessMeasure::StatisticalParity,
            &p,
            &spec(),
            Centering::Weighted,
        )
        .unwrap();
        assert!(c.centered().iter().all(|&v| v == 0.0));
        assert_eq!(c.global_unfairness, 0.0);
    }

    #[test]
    fn all_degenerate_is_an_error() {
        let ds = dataset(&[(0.1, "0", 0.0), (0.9, "1", 0.0)]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 0.5, 1.0]).unwrap();
        let f = FnOracle(x_of);
        let err = fale_curve(
            &ds,
            &f,
            UnfairnessMeasure::StatisticalParity,
            &p,
            &spec(),
            Centering::Weighted,
        )
        .unwrap_err();
        assert_eq!(err, Error::NoAuditableBins);
    }

    #[test]
    fn global_baseline_examples() {
        let ds = dataset(&[(0.6, "0", 0.0), (0.4, "1", 0.0)]);
        let f = FnOracle(x_of);
        let g = global_unfairness(&ds, &f, UnfairnessMeasure::StatisticalParity, &spec()).unwrap();
        assert!((g - 0.2).abs() < 1e-15);
        let c = FnOracle(|_: &Instance| 1.0);
        assert_eq!(
            global_unfairness(&ds, &c, UnfairnessMeasure::StatisticalParity, &spec()).unwrap(),
            0.0
        );
    }

    #[test]
    fn equal_opportunity_uses_target_labels() {
        let ds = dataset(&[
            (0.2, "0", 1.0),
            (0.6, "1", 1.0),
            (0.9, "0", 0.0),
            (0.3, "1", 0.0),
        ]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 1.0]).unwrap();
        let f = FnOracle(|i: &Instance| x_of(i) * (1.0 - a_of(i)));
        let c = fale_curve(
            &ds,
            &f,
            UnfairnessMeasure::EqualOpportunity,
            &p,
            &spec(),
            Centering::Weighted,
        )
        .unwrap();
        assert_eq!(c.per_bin[0].u_high, Some(1.0));
        assert_eq!(c.per_bin[0].u_low, Some(0.0));
        assert!((c.global_unfairness - 0.2).abs() < 1e-15);
    }

    #[test]
    fn top_bins_order() {
        let ds = dataset(&[
            (0.5, "0", 0.0),
            (0.5, "1", 0.0),
            (1.5, "0", 0.0),
            (1.5, "1", 0.0),
        ]);
        let p = BinPartition::from_boundaries("x", vec![0.0, 1.0, 2.0]).unwrap();
        let f = FnOracle(|i: &Instance| x_of(i) * (1.0 - a_of(i)));
        let c = fale_curve(
            &ds,
            &f,
            UnfairnessMeasure::SignedStatisticalParity,
            &p,
            &spec(),
            Centering::Weighted,
        )
        .unwrap();
        let top = c.top_bins(3);
        assert_eq!(top.len(), 2);
        assert!(libm::fabs(top[0].centered) >= libm::fabs(top[1].centered));
    }
}
