//! Synthetic data with a known injected bias.
//!
//! `x ~ U[0, 1]`, `a ~ Bernoulli(p1)` and the oracle scores
//! `clamp(base(x) - beta * [a = 1 and x in region], 0, 1)`. Region membership
//! uses the closed interval `[lo, hi]`. Because the boundary scores of the
//! hypothetical groups depend only on the boundary value and on `a`, the
//! per-bin parity deltas have a closed form, computed by [`analytic_fale`].

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binning::BinPartition;
use crate::centering::{accumulate, Centering};
use crate::data::{Dataset, FeatureSchema, Instance, ProtectedSpec, Role, Schema, Value};
use crate::error::{Error, OracleError, Result};
use crate::measure::UnfairnessMeasure;
use crate::oracle::PredictionOracle;

pub const FEATURE: &str = "x";
pub const PROTECTED: &str = "a";
pub const TARGET: &str = "y";

/// `base(x) = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseScore {
    pub intercept: f64,
    pub slope: f64,
}

impl BaseScore {
    pub fn constant(c: f64) -> Self {
        Self {
            intercept: c,
            slope: 0.0,
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub protected_fraction: f64,
    pub base: BaseScore,
    pub region: (f64, f64),
    pub beta: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 10_000,
            protected_fraction: 0.3,
            base: BaseScore::constant(0.5),
            region: (0.6, 0.8),
            beta: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.region;
        if !(lo < hi && lo >= 0.0 && hi <= 1.0) {
            return Err(Error::Config(format!(
                "bias region {lo}:{hi} must satisfy 0 <= lo < hi <= 1"
            )));
        }
        if !(self.protected_fraction > 0.0 && self.protected_fraction < 1.0) {
            return Err(Error::Config(
                "protected fraction must lie in (0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config("bias magnitude must lie in [0, 1]".into()));
        }
        if !(self.base.intercept.is_finite() && self.base.slope.is_finite()) {
            return Err(Error::Config("base score must be finite".into()));
        }
        Ok(())
    }

    fn in_region(&self, x: f64) -> bool {
        self.region.0 <= x && x <= self.region.1
    }

    /// The oracle's score for a given feature value and group.
    pub fn score(&self, x: f64, protected: bool) -> f64 {
        let penalty = if protected && self.in_region(x) {
            self.beta
        } else {
            0.0
        };
        (self.base.at(x) - penalty).clamp(0.0, 1.0)
    }

    pub fn protected_spec(&self) -> ProtectedSpec {
        ProtectedSpec::new(PROTECTED, "1", "0")
    }

    pub fn schema() -> Schema {
        Schema {
            features: alloc::vec![
                FeatureSchema::numeric(FEATURE, Role::Feature),
                FeatureSchema::categorical(PROTECTED, Role::Protected).with_order(&["0", "1"]),
                FeatureSchema::numeric(TARGET, Role::Target),
            ],
        }
    }
}

/// Deterministic scorer matching [`SynthConfig::score`].
#[derive(Clone, Debug, PartialEq)]
pub struct SynthOracle {
    cfg: SynthConfig,
}

impl SynthOracle {
    pub fn new(cfg: SynthConfig) -> Self {
        Self { cfg }
    }
}

impl PredictionOracle for SynthOracle {
    fn predict_batch(&self, batch: &[Instance]) -> core::result::Result<Vec<f64>, OracleError> {
        batch
            .iter()
            .map(|inst| {
                if inst.arity() != 3 {
                    return Err(OracleError::InstanceArity {
                        expected: 3,
                        actual: inst.arity(),
                    });
                }
                let x = inst.values[0]
                    .as_num()
                    .ok_or_else(|| OracleError::Input("`x` must be numeric".into()))?;
                Ok(self.cfg.score(x, inst.values[1].matches_label("1")))
            })
            .collect()
    }
}

/// Draws the dataset; `y ~ Bernoulli(score)`.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, SynthOracle)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rows = (0..cfg.n_rows)
        .map(|_| {
            let x: f64 = rng.random();
            let protected = rng.random_bool(cfg.protected_fraction);
            let y = rng.random_bool(cfg.score(x, protected));
            Instance::new(alloc::vec![
                Value::Num(x),
                Value::Cat(if protected { "1" } else { "0" }.into()),
                Value::Num(if y { 1.0 } else { 0.0 }),
            ])
        })
        .collect();
    let ds = Dataset::new(SynthConfig::schema(), rows)?;
    Ok((ds, SynthOracle::new(*cfg)))
}

/// Closed-form per-bin parity deltas for the synthetic oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticFale {
    /// Unfairness of the hypothetical groups at each boundary.
    pub boundary_unfairness: Vec<f64>,
    /// `u(b[k]) - u(b[k-1])`, assuming both groups are present in every bin.
    pub deltas: Vec<f64>,
}

impl AnalyticFale {
    /// Accumulated and centered values, applying the zero-delta policy to
    /// bins where one group is absent. `populations[k] = (n0, n1)`.
    pub fn finish(
        &self,
        populations: &[(usize, usize)],
        centering: Centering,
    ) -> (Vec<f64>, Vec<f64>) {
        let deltas: Vec<f64> = self
            .deltas
            .iter()
            .zip(populations)
            .map(|(&d, &(n0, n1))| if n0 == 0 || n1 == 0 { 0.0 } else { d })
            .collect();
        let accumulated = accumulate(&deltas);
        let weights: Vec<usize> = populations.iter().map(|(a, b)| a + b).collect();
        let offset = centering.offset(&accumulated, &weights).unwrap_or(0.0);
        let centered = accumulated.iter().map(|v| v - offset).collect();
        (accumulated, centered)
    }
}

pub fn analytic_fale(
    cfg: &SynthConfig,
    partition: &BinPartition,
    measure: UnfairnessMeasure,
) -> Result<AnalyticFale> {
    let boundaries = partition
        .boundaries()
        .ok_or_else(|| Error::Config("analytic FALE needs a numeric partition".into()))?;
    let gap = |b: f64| cfg.score(b, false) - cfg.score(b, true);
    let boundary_unfairness: Vec<f64> = match measure {
        UnfairnessMeasure::SignedStatisticalParity => boundaries.iter().map(|&b| gap(b)).collect(),
        UnfairnessMeasure::StatisticalParity => {
            boundaries.iter().map(|&b| libm::fabs(gap(b))).collect()
        }
        UnfairnessMeasure::EqualOpportunity => {
            return Err(Error::Config(
                "analytic FALE supports the parity measures only".into(),
            ))
        }
    };
    let deltas = boundary_unfairness
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    Ok(AnalyticFale {
        boundary_unfairness,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn no_injection_means_group_blind_oracle() {
        let cfg = SynthConfig {
            beta: 0.0,
            ..Default::default()
        };
        for x in [0.0, 0.6, 0.7, 1.0] {
            assert_eq!(cfg.score(x, true), cfg.score(x, false));
        }
        let p = BinPartition::from_boundaries("x", vec![0.0, 0.5, 1.0]).unwrap();
        let a = analytic_fale(&cfg, &p, UnfairnessMeasure::SignedStatisticalParity).unwrap();
        assert!(a.deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = SynthConfig {
            n_rows: 50,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap().0, generate(&cfg).unwrap().0);
        let other = SynthConfig { seed: 1, ..cfg };
        assert_ne!(generate(&cfg).unwrap().0, generate(&other).unwrap().0);
    }

    #[test]
    fn penalty_applies_inside_region_only() {
        let cfg = SynthConfig::default();
        assert!((cfg.score(0.7, true) - 0.2).abs() < 1e-15);
        assert_eq!(cfg.score(0.7, false), 0.5);
        assert_eq!(cfg.score(0.5, true), 0.5);
        assert!((cfg.score(0.6, true) - 0.2).abs() < 1e-15);
        assert!((cfg.score(0.8, true) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn analytic_deltas_for_fifths() {
        let cfg = SynthConfig::default();
        let p = BinPartition::from_boundaries("x", vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        let a = analytic_fale(&cfg, &p, UnfairnessMeasure::SignedStatisticalParity).unwrap();
        assert!(close(&a.deltas, &[0.0, 0.0, 0.3, 0.0, -0.3]));
    }

    #[test]
    fn region_covering_everything() {
        let cfg = SynthConfig {
            region: (0.0, 1.0),
            ..Default::default()
        };
        let p = BinPartition::from_boundaries("x", vec![-1e-16, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        let a = analytic_fale(&cfg, &p, UnfairnessMeasure::SignedStatisticalParity).unwrap();
        assert!(close(&a.deltas, &[0.3, 0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn equal_opportunity_unsupported() {
        let p = BinPartition::from_boundaries("x", vec![0.0, 1.0]).unwrap();
        assert!(analytic_fale(
            &SynthConfig::default(),
            &p,
            UnfairnessMeasure::EqualOpportunity
        )
        .is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad_region = SynthConfig {
            region: (0.9, 0.1),
            ..Default::default()
        };
        assert!(generate(&bad_region).is_err());
        let bad_p = SynthConfig {
            protected_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad_p.validate().is_err());
        let bad_beta = SynthConfig {
            beta: 1.5,
            ..Default::default()
        };
        assert!(bad_beta.validate().is_err());
    }
}
