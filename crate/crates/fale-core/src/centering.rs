use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// How accumulated per-bin values are shifted to mean zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Subtract the population-weighted mean of the accumulated values.
    #[default]
    Weighted,
    /// Subtract the plain mean over bins.
    Unweighted,
}

impl Centering {
    /// The constant to subtract, or `None` when the weighted total is zero.
    pub(crate) fn offset(self, values: &[f64], weights: &[usize]) -> Option<f64> {
        debug_assert_eq!(values.len(), weights.len());
        match self {
            Centering::Weighted => {
                let total: usize = weights.iter().sum();
                if total == 0 {
                    return None;
                }
                let n = total as f64;
                Some(
                    values
                        .iter()
                        .zip(weights)
                        .map(|(v, &w)| (w as f64 / n) * v)
                        .sum(),
                )
            }
            Centering::Unweighted => {
                if values.is_empty() {
                    return None;
                }
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        }
    }
}

pub(crate) fn accumulate(deltas: &[f64]) -> Vec<f64> {
    deltas
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

/// Mean that does not depend on the order of `values`.
pub(crate) fn order_free_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}
