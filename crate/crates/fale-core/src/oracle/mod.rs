//! Black-box scoring.
//!
//! Estimators only ever see a [`PredictionOracle`]: a batch function from
//! schema-ordered instances to real scores. [`BuiltinModel`] is the in-process
//! logistic model; an out-of-process oracle lives in the `fale` crate.

mod logistic;

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use logistic::{
    sigmoid, train_logistic, train_logistic_on, BuiltinModel, EncodedFeature, Encoding, OutputMode,
    TrainConfig, TrainedModel,
};

use crate::data::Instance;
use crate::error::OracleError;

pub trait PredictionOracle {
    /// One score per instance, in order.
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError>;

    /// Largest batch the oracle accepts in one call.
    fn batch_limit(&self) -> Option<usize> {
        None
    }

    /// Whether concurrent `predict_batch` calls are allowed.
    fn concurrency_safe(&self) -> bool {
        true
    }
}

impl<O: PredictionOracle + ?Sized> PredictionOracle for &O {
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
        (**self).predict_batch(batch)
    }
    fn batch_limit(&self) -> Option<usize> {
        (**self).batch_limit()
    }
    fn concurrency_safe(&self) -> bool {
        (**self).concurrency_safe()
    }
}

impl<O: PredictionOracle + ?Sized> PredictionOracle for Box<O> {
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
        (**self).predict_batch(batch)
    }
    fn batch_limit(&self) -> Option<usize> {
        (**self).batch_limit()
    }
    fn concurrency_safe(&self) -> bool {
        (**self).concurrency_safe()
    }
}

impl<O: PredictionOracle + ?Sized> PredictionOracle for Arc<O> {
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
        (**self).predict_batch(batch)
    }
    fn batch_limit(&self) -> Option<usize> {
        (**self).batch_limit()
    }
    fn concurrency_safe(&self) -> bool {
        (**self).concurrency_safe()
    }
}

/// Scores `batch`, splitting it to honour the oracle's batch limit and
/// checking that every call returns exactly one score per instance.
pub fn score<O: PredictionOracle + ?Sized>(
    oracle: &O,
    batch: &[Instance],
) -> Result<Vec<f64>, OracleError> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let limit = oracle.batch_limit().unwrap_or(batch.len()).max(1);
    let mut out = Vec::with_capacity(batch.len());
    for chunk in batch.chunks(limit) {
        let scores = oracle.predict_batch(chunk)?;
        if scores.len() != chunk.len() {
            return Err(OracleError::ScoreCount {
                expected: chunk.len(),
                actual: scores.len(),
            });
        }
        out.extend(scores);
    }
    Ok(out)
}

/// Oracle backed by a per-instance closure.
#[derive(Clone, Copy)]
pub struct FnOracle<F>(pub F);

impl<F> PredictionOracle for FnOracle<F>
where
    F: Fn(&Instance) -> f64,
{
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
        Ok(batch.iter().map(&self.0).collect())
    }
}

/// Turns any oracle's scores into 0/1 labels: `score >= threshold` maps to 1.
#[derive(Clone, Debug)]
pub struct HardLabels<O> {
    pub inner: O,
    pub threshold: f64,
}

impl<O: PredictionOracle> PredictionOracle for HardLabels<O> {
    fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
        let scores = self.inner.predict_batch(batch)?;
        Ok(scores
            .into_iter()
            .map(|s| if s >= self.threshold { 1.0 } else { 0.0 })
            .collect())
    }
    fn batch_limit(&self) -> Option<usize> {
        self.inner.batch_limit()
    }
    fn concurrency_safe(&self) -> bool {
        self.inner.concurrency_safe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Value;
    use alloc::vec;

    struct Limited;

    impl PredictionOracle for Limited {
        fn predict_batch(&self, batch: &[Instance]) -> Result<Vec<f64>, OracleError> {
            assert!(batch.len() <= 2);
            Ok(batch
                .iter()
                .map(|i| i.values[0].as_num().unwrap())
                .collect())
        }
        fn batch_limit(&self) -> Option<usize> {
            Some(2)
        }
    }

    struct Short;

    impl PredictionOracle for Short {
        fn predict_batch(&self, _: &[Instance]) -> Result<Vec<f64>, OracleError> {
            Ok(vec![0.0])
        }
    }

    fn inst(x: f64) -> Instance {
        Instance::new(vec![Value::Num(x)])
    }

    #[test]
    fn batches_are_chunked_in_order() {
        let batch: Vec<_> = (0..5).map(|i| inst(i as f64)).collect();
        assert_eq!(score(&Limited, &batch).unwrap(), [0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(score(&Limited, &[]).unwrap().is_empty());
    }

    #[test]
    fn wrong_score_count_is_an_error() {
        let err = score(&Short, &[inst(1.0), inst(2.0)]).unwrap_err();
        assert_eq!(
            err,
            OracleError::ScoreCount {
                expected: 2,
                actual: 1
            }
        );
    }

    #[test]
    fn hard_labels_threshold() {
        let o = HardLabels {
            inner: FnOracle(|i: &Instance| i.values[0].as_num().unwrap()),
            threshold: 0.5,
        };
        let s = o.predict_batch(&[inst(0.2), inst(0.5), inst(0.9)]).unwrap();
        assert_eq!(s, [0.0, 1.0, 1.0]);
    }
}
