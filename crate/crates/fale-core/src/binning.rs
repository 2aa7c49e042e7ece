//! Ordered bin partitions of a single feature.
//!
//! Numeric bins follow the half-open convention `(b[k-1], b[k]]`, except that
//! the lowest bin also admits `b[0]`. Builders place `b[0]` a hair below the
//! observed minimum so every observation lands strictly inside a bin.
//!
//! Categorical bins are an ordered label sequence. The "low boundary" of bin
//! `k` is the label of bin `k - 1`; the first bin uses its own label on both
//! sides and therefore contributes no local effect.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, Value};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bins {
    /// `K + 1` strictly increasing boundaries.
    Numeric { boundaries: Vec<f64> },
    /// `K` distinct labels in plotting order.
    Categorical { labels: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinPartition {
    pub feature: String,
    pub bins: Bins,
    /// Set when the feature was constant and only a single zero-width bin exists.
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinStrategy {
    #[default]
    Quantile,
    Fixed,
}

/// Largest value strictly below `min` by a negligible relative margin.
fn lower_edge(min: f64) -> f64 {
    let edge = min - f64::EPSILON * libm::fabs(min).max(1.0);
    debug_assert!(edge < min);
    edge
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Partition("no values to partition".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Partition("non-finite value".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Partition("number of bins must be at least 1".into()));
    }
    Ok(())
}

fn finish_numeric(feature: &str, raw: Vec<f64>, degenerate: bool) -> BinPartition {
    let mut boundaries: Vec<f64> = Vec::with_capacity(raw.len());
    for b in raw {
        if boundaries.last().is_none_or(|&last| b > last) {
            boundaries.push(b);
        }
    }
    BinPartition {
        feature: feature.to_owned(),
        bins: Bins::Numeric { boundaries },
        degenerate,
    }
}

fn constant(feature: &str, v: f64) -> BinPartition {
    finish_numeric(feature, vec![lower_edge(v), v], true)
}

/// Empirical quantiles at levels `j / k`, interpolating linearly between
/// order statistics. Repeated boundaries are merged, so the result may have
/// fewer than `k` bins.
pub fn quantile_partition(feature: &str, values: &[f64], k: usize) -> Result<BinPartition> {
    check_k(k)?;
    let s = sorted(values)?;
    let (min, max) = (s[0], s[s.len() - 1]);
    if min == max {
        return Ok(constant(feature, min));
    }
    let n = s.len();
    let raw = (0..=k)
        .map(|j| match j {
            0 => lower_edge(min),
            j if j == k => max,
            j => {
                let h = ((n - 1) * j) as f64 / k as f64;
                let lo = libm::floor(h) as usize;
                let frac = h - lo as f64;
                if lo + 1 < n {
                    s[lo] + frac * (s[lo + 1] - s[lo])
                } else {
                    s[n - 1]
                }
            }
        })
        .collect();
    Ok(finish_numeric(feature, raw, false))
}

/// `k` equal-width bins over `[min, max]`.
pub fn fixed_width_partition(feature: &str, values: &[f64], k: usize) -> Result<BinPartition> {
    check_k(k)?;
    let s = sorted(values)?;
    let (min, max) = (s[0], s[s.len() - 1]);
    if min == max {
        return Ok(constant(feature, min));
    }
    let width = (max - min) / k as f64;
    let raw = (0..=k)
        .map(|j| match j {
            0 => lower_edge(min),
            j if j == k => max,
            j => min + width * j as f64,
        })
        .collect();
    Ok(finish_numeric(feature, raw, false))
}

/// One bin per distinct label. Without an explicit order, labels are sorted
/// by ascending frequency, ties broken lexicographically.
pub fn categorical_partition<S: AsRef<str>>(
    feature: &str,
    values: &[S],
    order: Option<&[String]>,
) -> Result<BinPartition> {
    if values.is_empty() {
        return Err(Error::Partition("no values to partition".into()));
    }
    let labels = match order {
        Some(order) => {
            let distinct: BTreeSet<&str> = order.iter().map(String::as_str).collect();
            if distinct.len() != order.len() {
                return Err(Error::Partition("category order repeats a label".into()));
            }
            if let Some(missing) = values.iter().find(|v| !distinct.contains(v.as_ref())) {
                return Err(Error::Partition(format!(
                    "category order for `{feature}` is missing observed label `{}`",
                    missing.as_ref()
                )));
            }
            order.to_vec()
        }
        None => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for v in values {
                *counts.entry(v.as_ref()).or_default() += 1;
            }
            let mut by_freq: Vec<(&str, usize)> = counts.into_iter().collect();
            by_freq.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(b.0)));
            by_freq.into_iter().map(|(l, _)| l.to_owned()).collect()
        }
    };
    Ok(BinPartition {
        feature: feature.to_owned(),
        bins: Bins::Categorical { labels },
        degenerate: false,
    })
}

impl BinPartition {
    /// Builds the default partition for a dataset column. For categorical
    /// columns an explicit `order` wins over the schema's `category_order`.
    pub fn for_column(
        ds: &Dataset,
        feature: &str,
        strategy: BinStrategy,
        k: usize,
        order: Option<&[String]>,
    ) -> Result<Self> {
        let column = ds.column_index(feature)?;
        let schema = &ds.schema().features[column];
        match schema.kind {
            FeatureKind::Numeric => {
                let values = ds.numeric_column(column)?;
                match strategy {
                    BinStrategy::Quantile => quantile_partition(feature, &values, k),
                    BinStrategy::Fixed => fixed_width_partition(feature, &values, k),
                }
            }
            FeatureKind::Categorical => {
                let labels = ds.label_column(column)?;
                let order = order.or(schema.category_order.as_deref());
                categorical_partition(feature, &labels, order)
            }
        }
    }

    pub fn from_boundaries(feature: &str, boundaries: Vec<f64>) -> Result<Self> {
        let p = Self {
            feature: feature.to_owned(),
            bins: Bins::Numeric { boundaries },
            degenerate: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.bins {
            Bins::Numeric { boundaries } => {
                if boundaries.len() < 2 {
                    return Err(Error::Partition("need at least two boundaries".into()));
                }
                if boundaries.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Partition("non-finite boundary".into()));
                }
                if boundaries.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Partition(
                        "boundaries not strictly increasing".into(),
                    ));
                }
            }
            Bins::Categorical { labels } => {
                if labels.is_empty() {
                    return Err(Error::Partition("need at least one category".into()));
                }
                let distinct: BTreeSet<&String> = labels.iter().collect();
                if distinct.len() != labels.len() {
                    return Err(Error::Partition("duplicate category".into()));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> FeatureKind {
        match self.bins {
            Bins::Numeric { .. } => FeatureKind::Numeric,
            Bins::Categorical { .. } => FeatureKind::Categorical,
        }
    }

    /// Number of bins `K`.
    pub fn len(&self) -> usize {
        match &self.bins {
            Bins::Numeric { boundaries } => boundaries.len().saturating_sub(1),
            Bins::Categorical { labels } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn boundaries(&self) -> Option<&[f64]> {
        match &self.bins {
            Bins::Numeric { boundaries } => Some(boundaries),
            Bins::Categorical { .. } => None,
        }
    }

    /// Lower boundary value of bin `k` (1-based).
    pub fn low(&self, k: usize) -> Value {
        match &self.bins {
            Bins::Numeric { boundaries } => Value::Num(boundaries[k - 1]),
            Bins::Categorical { labels } => Value::Cat(labels[k.saturating_sub(2)].clone()),
        }
    }

    /// Upper boundary value of bin `k` (1-based).
    pub fn high(&self, k: usize) -> Value {
        match &self.bins {
            Bins::Numeric { boundaries } => Value::Num(boundaries[k]),
            Bins::Categorical { labels } => Value::Cat(labels[k - 1].clone()),
        }
    }

    /// Plot position of bin `k`: the right boundary for numeric bins, the
    /// ordinal position for categories.
    pub fn position(&self, k: usize) -> f64 {
        match &self.bins {
            Bins::Numeric { boundaries } => boundaries[k],
            Bins::Categorical { .. } => k as f64,
        }
    }

    /// The 1-based bin covering `v`.
    pub fn assign(&self, v: &Value) -> Result<usize> {
        match (&self.bins, v) {
            (Bins::Numeric { boundaries }, Value::Num(x)) => {
                let (lo, hi) = (boundaries[0], boundaries[boundaries.len() - 1]);
                if !(lo <= *x && *x <= hi) {
                    return Err(Error::OutOfRange(format!("{x}")));
                }
                Ok(boundaries[1..].partition_point(|b| b < x) + 1)
            }
            (Bins::Categorical { labels }, Value::Cat(label)) => labels
                .iter()
                .position(|l| l == label)
                .map(|p| p + 1)
                .ok_or_else(|| Error::OutOfRange(format!("`{label}`"))),
            _ => Err(Error::Partition(format!(
                "value {v} does not match the {:?} partition of `{}`",
                self.kind(),
                self.feature
            ))),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.bins, Bins::Numeric { .. })
    }
}

/// Row indices grouped by bin; rows outside the partition are counted, not kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinMembers {
    pub per_bin: Vec<Vec<usize>>,
    pub out_of_range: usize,
}

impl BinMembers {
    pub fn compute(
        ds: &Dataset,
        partition: &BinPartition,
        column: usize,
        rows: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut per_bin = vec![Vec::new(); partition.len()];
        let mut out_of_range = 0;
        for r in rows {
            match partition.assign(&ds.rows()[r].values[column]) {
                Ok(k) => per_bin[k - 1].push(r),
                Err(Error::OutOfRange(_)) => out_of_range += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(Self {
            per_bin,
            out_of_range,
        })
    }

    pub fn counts(&self) -> Vec<usize> {
        self.per_bin.iter().map(Vec::len).collect()
    }
}
