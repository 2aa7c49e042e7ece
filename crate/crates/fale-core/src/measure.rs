//! Unfairness functionals `u(G0, G1)` over two prediction multisets.
//!
//! `G0` is the non-protected group, `G1` the protected one. Group means are
//! summed in sorted order so results do not depend on entry order.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::centering::order_free_mean;
use crate::error::{Error, Result};

/// Scores for one group plus optional ground-truth labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupPredictions<'a> {
    pub scores: &'a [f64],
    pub labels: Option<&'a [bool]>,
}

impl<'a> GroupPredictions<'a> {
    pub fn new(scores: &'a [f64]) -> Self {
        Self {
            scores,
            labels: None,
        }
    }

    pub fn with_labels(scores: &'a [f64], labels: &'a [bool]) -> Self {
        Self {
            scores,
            labels: Some(labels),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Absolute,
    /// Positive when the protected group fares worse.
    SignedTowardProtected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnfairnessMeasure {
    StatisticalParity,
    SignedStatisticalParity,
    EqualOpportunity,
}

impl UnfairnessMeasure {
    pub fn needs_labels(self) -> bool {
        matches!(self, UnfairnessMeasure::EqualOpportunity)
    }

    pub fn orientation(self) -> Orientation {
        match self {
            UnfairnessMeasure::SignedStatisticalParity => Orientation::SignedTowardProtected,
            _ => Orientation::Absolute,
        }
    }

    /// The magnitude-only counterpart, used for global baselines.
    pub fn absolute(self) -> Self {
        match self {
            UnfairnessMeasure::SignedStatisticalParity => UnfairnessMeasure::StatisticalParity,
            m => m,
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            UnfairnessMeasure::StatisticalParity => "statistical-parity",
            UnfairnessMeasure::SignedStatisticalParity => "signed-statistical-parity",
            UnfairnessMeasure::EqualOpportunity => "equal-opportunity",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            UnfairnessMeasure::StatisticalParity => "statistical parity",
            UnfairnessMeasure::SignedStatisticalParity => "signed statistical parity",
            UnfairnessMeasure::EqualOpportunity => "equal opportunity",
        }
    }

    pub fn evaluate(self, g0: &GroupPredictions<'_>, g1: &GroupPredictions<'_>) -> Result<f64> {
        match self {
            UnfairnessMeasure::StatisticalParity => statistical_parity(g0, g1),
            UnfairnessMeasure::SignedStatisticalParity => signed_statistical_parity(g0, g1),
            UnfairnessMeasure::EqualOpportunity => equal_opportunity(g0, g1),
        }
    }
}

impl FromStr for UnfairnessMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "statistical-parity" => Ok(UnfairnessMeasure::StatisticalParity),
            "signed-statistical-parity" => Ok(UnfairnessMeasure::SignedStatisticalParity),
            "equal-opportunity" => Ok(UnfairnessMeasure::EqualOpportunity),
            _ => Err(Error::Config(format!("unknown fairness measure `{s}`"))),
        }
    }
}

impl fmt::Display for UnfairnessMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

fn group_mean(scores: &[f64], which: &str) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::UndefinedMeasure(format!(
            "{which} group has no members"
        )));
    }
    Ok(order_free_mean(scores))
}

/// `|mean(g0) - mean(g1)|`.
pub fn statistical_parity(g0: &GroupPredictions<'_>, g1: &GroupPredictions<'_>) -> Result<f64> {
    signed_statistical_parity(g0, g1).map(f64::abs)
}

/// `mean(g0) - mean(g1)`: positive when the protected group receives less.
pub fn signed_statistical_parity(
    g0: &GroupPredictions<'_>,
    g1: &GroupPredictions<'_>,
) -> Result<f64> {
    Ok(group_mean(g0.scores, "non-protected")? - group_mean(g1.scores, "protected")?)
}

/// Gap in mean score among label-1 members of each group.
pub fn equal_opportunity(g0: &GroupPredictions<'_>, g1: &GroupPredictions<'_>) -> Result<f64> {
    let positives = |g: &GroupPredictions<'_>, which: &str| -> Result<Vec<f64>> {
        let labels = g.labels.ok_or_else(|| {
            Error::UndefinedMeasure(format!(
                "equal opportunity needs labels for the {which} group"
            ))
        })?;
        if labels.len() != g.scores.len() {
            return Err(Error::UndefinedMeasure(format!(
                "{which} group has {} labels for {} scores",
                labels.len(),
                g.scores.len()
            )));
        }
        let pos: Vec<f64> = g
            .scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(s, _)| *s)
            .collect();
        if pos.is_empty() {
            return Err(Error::UndefinedMeasure(format!(
                "{which} group has no positive-label members"
            )));
        }
        Ok(pos)
    };
    let p0 = positives(g0, "non-protected")?;
    let p1 = positives(g1, "protected")?;
    Ok(libm::fabs(order_free_mean(&p0) - order_free_mean(&p1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &[f64]) -> GroupPredictions<'_> {
        GroupPredictions::new(s)
    }

    #[test]
    fn parity_examples() {
        let sp = statistical_parity(&g(&[1.0, 1.0, 0.0]), &g(&[0.0, 0.0, 1.0])).unwrap();
        assert!((sp - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            statistical_parity(&g(&[0.3, 0.7]), &g(&[0.5])).unwrap(),
            0.0
        );
        assert_eq!(statistical_parity(&g(&[1.0]), &g(&[0.0])).unwrap(), 1.0);
    }

    #[test]
    fn signed_parity_examples() {
        let a = [1.0, 1.0, 0.0];
        let b = [0.0, 0.0, 1.0];
        let s = signed_statistical_parity(&g(&a), &g(&b)).unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
        let t = signed_statistical_parity(&g(&b), &g(&a)).unwrap();
        assert!((t + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            signed_statistical_parity(&g(&[0.5]), &g(&[0.5])).unwrap(),
            0.0
        );
    }

    #[test]
    fn empty_group_is_undefined() {
        assert!(matches!(
            statistical_parity(&g(&[]), &g(&[1.0])),
            Err(Error::UndefinedMeasure(_))
        ));
    }

    #[test]
    fn equal_opportunity_examples() {
        let g0 = GroupPredictions::with_labels(&[1.0, 0.0], &[true, false]);
        let g1 = GroupPredictions::with_labels(&[0.0, 1.0], &[true, true]);
        assert_eq!(equal_opportunity(&g0, &g1).unwrap(), 0.5);

        let g0 = GroupPredictions::with_labels(&[0.7, 0.1], &[true, false]);
        let g1 = GroupPredictions::with_labels(&[0.7, 0.9], &[true, false]);
        assert_eq!(equal_opportunity(&g0, &g1).unwrap(), 0.0);

        let g1 = GroupPredictions::with_labels(&[0.2], &[false]);
        assert!(equal_opportunity(&g0, &g1).is_err());
        assert!(equal_opportunity(&g(&[1.0]), &g(&[1.0])).is_err());
    }

    #[test]
    fn names_round_trip() {
        for m in [
            UnfairnessMeasure::StatisticalParity,
            UnfairnessMeasure::SignedStatisticalParity,
            UnfairnessMeasure::EqualOpportunity,
        ] {
            assert_eq!(m.cli_name().parse::<UnfairnessMeasure>().unwrap(), m);
        }
        assert!("demographic".parse::<UnfairnessMeasure>().is_err());
        assert!(UnfairnessMeasure::EqualOpportunity.needs_labels());
        assert_eq!(
            UnfairnessMeasure::SignedStatisticalParity.absolute(),
            UnfairnessMeasure::StatisticalParity
        );
    }
}
