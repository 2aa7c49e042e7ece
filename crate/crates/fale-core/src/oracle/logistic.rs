use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PredictionOracle;
use crate::data::{Dataset, FeatureKind, Instance, Role, Schema, Value};
use crate::error::{Error, OracleError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OutputMode {
    /// Favorable-class probability in `[0, 1]`.
    Probability,
    /// 1 when the probability is at least `threshold`, else 0.
    HardLabel { threshold: f64 },
    /// The raw linear score before the sigmoid.
    Margin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    /// Contributes `weights[weight] * (x - center) / scale`.
    Numeric {
        weight: usize,
        center: f64,
        scale: f64,
    },
    /// Label `levels[i]` activates `weights[first_weight + i]`; unseen labels
    /// activate nothing.
    OneHot {
        first_weight: usize,
        levels: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub name: String,
    pub column: usize,
    pub encoding: Encoding,
}

/// Logistic model over standardized numerics and one-hot categoricals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuiltinModel {
    /// Schema column names, in the order instances must present them.
    pub columns: Vec<String>,
    pub encoding: Vec<EncodedFeature>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub output_mode: OutputMode,
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + libm::exp(-m))
    } else {
        let e = libm::exp(m);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^m)` without overflow.
fn softplus(m: f64) -> f64 {
    m.max(0.0) + libm::log1p(libm::exp(-libm::fabs(m)))
}

impl BuiltinModel {
    pub fn new(
        columns: Vec<String>,
        encoding: Vec<EncodedFeature>,
        weights: Vec<f64>,
        intercept: f64,
        output_mode: OutputMode,
    ) -> Result<Self> {
        let model = Self {
            columns,
            encoding,
            weights,
            intercept,
            output_mode,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.weights.len();
        for f in &self.encoding {
            if f.column >= self.columns.len() || self.columns[f.column] != f.name {
                return Err(Error::Config(format!(
                    "model encodes `{}` at a column it is not bound to",
                    f.name
                )));
            }
            let in_range = match &f.encoding {
                Encoding::Numeric { weight, scale, .. } => *weight < d && *scale != 0.0,
                Encoding::OneHot {
                    first_weight,
                    levels,
                } => first_weight + levels.len() <= d,
            };
            if !in_range {
                return Err(Error::Config(format!(
                    "model encoding for `{}` is inconsistent with its weights",
                    f.name
                )));
            }
        }
        if let OutputMode::HardLabel { threshold } = self.output_mode {
            if !threshold.is_finite() {
                return Err(Error::Config("hard-label threshold must be finite".into()));
            }
        }
        Ok(())
    }

    /// A model over every non-ignored, non-target column of `schema` with raw
    /// (unstandardized) numerics. Weights for numeric columns come from
    /// `numeric_weights`; everything else starts at zero. Category levels are
    /// taken from `category_order` when declared.
    pub fn linear(
        schema: &Schema,
        numeric_weights: &[(&str, f64)],
        intercept: f64,
        output_mode: OutputMode,
    ) -> Result<Self> {
        let mut weights = Vec::new();
        let mut encoding = Vec::new();
        for (column, f) in schema.features.iter().enumerate() {
            if matches!(f.role, Role::Ignored | Role::Target) {
                continue;
            }
            let enc = match f.kind {
                FeatureKind::Numeric => {
                    let w = numeric_weights
                        .iter()
                        .find(|(n, _)| *n == f.name)
                        .map_or(0.0, |(_, w)| *w);
                    weights.push(w);
                    Encoding::Numeric {
                        weight: weights.len() - 1,
                        center: 0.0,
                        scale: 1.0,
                    }
                }
                FeatureKind::Categorical => {
                    let levels = f.category_order.clone().unwrap_or_default();
                    let first_weight = weights.len();
                    weights.extend(core::iter::repeat_n(0.0, levels.len()));
                    Encoding::OneHot {
                        first_weight,
                        levels,
                    }
                }
            };
            encoding.push(EncodedFeature {
                name: f.name.clone(),
                column,
                encoding: enc,
            });
        }
        for (n, _) in numeric_weights {
            if !encoding.iter().any(|e| e.name == *n) {
                return Err(Error::MissingColumn((*n).to_owned()));
            }
        }
        let columns = schema.features.iter().map(|f| f.name.clone()).collect();
        Self::new(columns, encoding, weights, intercept, output_mode)
    }

    pub fn with_output_mode(mut self, output_mode: OutputMode) -> Self {
        self.output_mode = output_mode;
        self
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    fn encode_into(
        &self,
        inst: &Instance,
        out: &mut [f64],
    ) -> core::result::Result<(), OracleError> {
        if inst.arity() != self.columns.len() {
            return Err(OracleError::InstanceArity {
                expected: self.columns.len(),
                actual: inst.arity(),
            });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for f in &self.encoding {
            let v = &inst.values[f.column];
            match (&f.encoding, v) {
                (
                    Encoding::Numeric {
                        weight,
                        center,
                        scale,
                    },
                    Value::Num(x),
                ) => {
                    out[*weight] = (x - center) / scale;
                }
                (
                    Encoding::OneHot {
                        first_weight,
                        levels,
                    },
                    Value::Cat(label),
                ) => {
                    if let Some(i) = levels.iter().position(|l| l == label) {
                        out[first_weight + i] = 1.0;
                    }
                }
                _ => {
                    return Err(OracleError::Input(format!(
                        "value {v} does not match the encoding of `{}`",
                        f.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Linear score `intercept + w · encode(x)`.
    pub fn margin(&self, inst: &Instance) -> core::result::Result<f64, OracleError> {
        let mut buf = vec![0.0; self.weights.len()];
        self.encode_into(inst, &mut buf)?;
        Ok(self.intercept + dot(&self.weights, &buf))
    }

    pub fn predict(&self, inst: &Instance) -> core::result::Result<f64, OracleError> {
        let m = self.margin(inst)?;
        Ok(match self.output_mode {
            OutputMode::Probability => sigmoid(m),
            OutputMode::HardLabel { threshold } => {
                if sigmoid(m) >= threshold {
                    1.0
                } else {
                    0.0
                }
            }
            OutputMode::Margin => m,
        })
    }
}

impl PredictionOracle for BuiltinModel {
    fn predict_batch(&self, batch: &[Instance]) -> core::result::Result<Vec<f64>, OracleError> {
        batch.iter().map(|i| self.predict(i)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Seeds the small random weight initialisation.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 300,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub model: BuiltinModel,
    /// Training loss before the first step and after every accepted step.
    pub loss_history: Vec<f64>,
}

pub fn train_logistic(ds: &Dataset, target: &str, cfg: &TrainConfig) -> Result<TrainedModel> {
    let rows: Vec<usize> = (0..ds.row_count()).collect();
    train_logistic_on(ds, &rows, target, cfg)
}

/// Full-batch gradient descent on mean log-loss plus `l2 / 2 * |w|^2`.
///
/// A step is accepted only if it does not increase the loss; otherwise the
/// learning rate is halved and the step retried.
pub fn train_logistic_on(
    ds: &Dataset,
    rows: &[usize],
    target: &str,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    if !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) {
        return Err(Error::Config("l2 penalty must be non-negative".into()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let target_col = ds.column_index(target)?;
    let all_labels = ds.binary_column(target_col)?;
    let y: Vec<f64> = rows
        .iter()
        .map(|&r| if all_labels[r] { 1.0 } else { 0.0 })
        .collect();

    let model = fit_encoding(ds, rows, target_col)?;
    let d = model.dimension();
    let n = rows.len();
    let mut x = vec![0.0; n * d];
    for (i, &r) in rows.iter().enumerate() {
        model
            .encode_into(&ds.rows()[r], &mut x[i * d..(i + 1) * d])
            .map_err(Error::Oracle)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w: Vec<f64> = (0..d).map(|_| (rng.random::<f64>() - 0.5) * 1e-3).collect();
    let mut b = 0.0;
    let problem = Problem {
        x: &x,
        y: &y,
        d,
        l2: cfg.l2,
    };
    let (mut loss, mut residual) = problem.evaluate(&w, b);
    let mut history = vec![loss];
    let mut lr = cfg.learning_rate;

    'epochs: for _ in 0..cfg.epochs {
        let (gw, gb) = problem.gradient(&w, &residual);
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - lr * gi).collect();
            let cand_b = b - lr * gb;
            let (cand_loss, cand_res) = problem.evaluate(&cand_w, cand_b);
            if cand_loss <= loss {
                w = cand_w;
                b = cand_b;
                loss = cand_loss;
                residual = cand_res;
                history.push(loss);
                break;
            }
            lr *= 0.5;
            if lr < f64::EPSILON * cfg.learning_rate {
                break 'epochs;
            }
        }
    }

    Ok(TrainedModel {
        model: BuiltinModel {
            weights: w,
            intercept: b,
            ..model
        },
        loss_history: history,
    })
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    d: usize,
    l2: f64,
}

impl Problem<'_> {
    /// Loss and per-row residuals `sigmoid(m) - y`.
    fn evaluate(&self, w: &[f64], b: f64) -> (f64, Vec<f64>) {
        let n = self.y.len();
        let mut total = 0.0;
        let mut residual = Vec::with_capacity(n);
        for (row, &yi) in self.x.chunks_exact(self.d.max(1)).take(n).zip(self.y) {
            let m = b + if self.d == 0 { 0.0 } else { dot(w, row) };
            total += softplus(m) - yi * m;
            residual.push(sigmoid(m) - yi);
        }
        let penalty = 0.5 * self.l2 * dot(w, w);
        (total / n as f64 + penalty, residual)
    }

    fn gradient(&self, w: &[f64], residual: &[f64]) -> (Vec<f64>, f64) {
        let n = residual.len() as f64;
        let mut gw = vec![0.0; self.d];
        if self.d > 0 {
            for (row, r) in self.x.chunks_exact(self.d).zip(residual) {
                for (g, xi) in gw.iter_mut().zip(row) {
                    *g += r * xi;
                }
            }
        }
        for (g, wi) in gw.iter_mut().zip(w) {
            *g = *g / n + self.l2 * wi;
        }
        (gw, residual.iter().sum::<f64>() / n)
    }
}

/// Encoding map fitted on `rows`: standardized numerics and one-hot levels
/// (schema order when declared, otherwise sorted observed labels).
fn fit_encoding(ds: &Dataset, rows: &[usize], target_col: usize) -> Result<BuiltinModel> {
    let schema = ds.schema();
    let mut weights = 0usize;
    let mut encoding = Vec::new();
    for (column, f) in schema.features.iter().enumerate() {
        if column == target_col || matches!(f.role, Role::Ignored | Role::Target) {
            continue;
        }
        let enc = match f.kind {
            FeatureKind::Numeric => {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter_map(|&r| ds.rows()[r].values[column].as_num())
                    .collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let sd = libm::sqrt(var);
                weights += 1;
                Encoding::Numeric {
                    weight: weights - 1,
                    center: mean,
                    scale: if sd > 0.0 { sd } else { 1.0 },
                }
            }
            FeatureKind::Categorical => {
                let levels = match &f.category_order {
                    Some(order) => order.clone(),
                    None => rows
                        .iter()
                        .filter_map(|&r| ds.rows()[r].values[column].as_label())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .map(str::to_owned)
                        .collect(),
                };
                let first_weight = weights;
                weights += levels.len();
                Encoding::OneHot {
                    first_weight,
                    levels,
                }
            }
        };
        encoding.push(EncodedFeature {
            name: f.name.clone(),
            column,
            encoding: enc,
        });
    }
    if encoding.is_empty() {
        return Err(Error::Config("no feature columns to train on".into()));
    }
    BuiltinModel::new(
        schema.features.iter().map(|f| f.name.clone()).collect(),
        encoding,
        vec![0.0; weights],
        0.0,
        OutputMode::Probability,
    )
}
