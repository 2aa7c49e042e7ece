//! Test-only reference estimators and random audit cases.
//!
//! The reference estimators are direct, unbatched transliterations of the
//! bin-sum formulas. They share no binning, batching, measure or centering
//! code with the library.

#![allow(dead_code, clippy::too_many_arguments)]

use fale_core::binning::quantile_partition;
use fale_core::{
    BinPartition, BuiltinModel, Dataset, FeatureSchema, Instance, OutputMode, ProtectedSpec, Role,
    Schema, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Reference {
    pub deltas: Vec<f64>,
    pub accumulated: Vec<f64>,
    pub centered: Vec<f64>,
    pub populations: Vec<usize>,
}

fn in_bin(x: f64, b: &[f64], k: usize) -> bool {
    let above = if k == 1 { x >= b[0] } else { x > b[k - 1] };
    above && x <= b[k]
}

fn set(inst: &Instance, col: usize, x: f64) -> Instance {
    let mut values = inst.values.clone();
    values[col] = Value::Num(x);
    Instance::new(values)
}

fn plain_mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

fn weighted_center(acc: &[f64], pops: &[usize]) -> Vec<f64> {
    let n: usize = pops.iter().sum();
    let mut offset = 0.0;
    for (a, p) in acc.iter().zip(pops) {
        offset += a * (*p as f64) / n as f64;
    }
    acc.iter().map(|a| a - offset).collect()
}

/// FALE by the definition: for each bin, overwrite the feature with each
/// boundary, score every instance on its own, compare group means.
pub fn reference_fale(
    rows: &[Instance],
    x_col: usize,
    a_col: usize,
    protected: &str,
    non_protected: &str,
    boundaries: &[f64],
    f: &dyn Fn(&Instance) -> f64,
    signed: bool,
) -> Reference {
    let k_max = boundaries.len() - 1;
    let mut deltas = Vec::new();
    let mut populations = Vec::new();
    for k in 1..=k_max {
        let mut g0: Vec<&Instance> = Vec::new();
        let mut g1: Vec<&Instance> = Vec::new();
        for inst in rows {
            let x = inst.values[x_col].as_num().unwrap();
            if !in_bin(x, boundaries, k) {
                continue;
            }
            if inst.values[a_col].matches_label(protected) {
                g1.push(inst);
            } else if inst.values[a_col].matches_label(non_protected) {
                g0.push(inst);
            }
        }
        populations.push(g0.len() + g1.len());
        if g0.is_empty() || g1.is_empty() {
            deltas.push(0.0);
            continue;
        }
        let u = |b: f64| {
            let m0 = plain_mean(&g0.iter().map(|i| f(&set(i, x_col, b))).collect::<Vec<_>>());
            let m1 = plain_mean(&g1.iter().map(|i| f(&set(i, x_col, b))).collect::<Vec<_>>());
            if signed {
                m0 - m1
            } else {
                (m0 - m1).abs()
            }
        };
        deltas.push(u(boundaries[k]) - u(boundaries[k - 1]));
    }
    let mut accumulated = Vec::new();
    let mut run = 0.0;
    for d in &deltas {
        run += d;
        accumulated.push(run);
    }
    let centered = weighted_center(&accumulated, &populations);
    Reference {
        deltas,
        accumulated,
        centered,
        populations,
    }
}

/// ALE by the definition, with the per-bin `1 / |b_k|` normalisation.
pub fn reference_ale(
    rows: &[Instance],
    x_col: usize,
    boundaries: &[f64],
    f: &dyn Fn(&Instance) -> f64,
) -> Reference {
    let k_max = boundaries.len() - 1;
    let mut deltas = Vec::new();
    let mut populations = Vec::new();
    for k in 1..=k_max {
        let members: Vec<&Instance> = rows
            .iter()
            .filter(|i| in_bin(i.values[x_col].as_num().unwrap(), boundaries, k))
            .collect();
        populations.push(members.len());
        if members.is_empty() {
            deltas.push(0.0);
            continue;
        }
        let diffs: Vec<f64> = members
            .iter()
            .map(|i| f(&set(i, x_col, boundaries[k])) - f(&set(i, x_col, boundaries[k - 1])))
            .collect();
        deltas.push(plain_mean(&diffs));
    }
    let mut accumulated = Vec::new();
    let mut run = 0.0;
    for d in &deltas {
        run += d;
        accumulated.push(run);
    }
    let centered = weighted_center(&accumulated, &populations);
    Reference {
        deltas,
        accumulated,
        centered,
        populations,
    }
}

/// A randomized audit: numeric features `x0..`, protected `a`, target `y`.
pub struct Case {
    pub ds: Dataset,
    pub model: BuiltinModel,
    pub partition: BinPartition,
    pub spec: ProtectedSpec,
    pub x_col: usize,
    pub a_col: usize,
    pub k: usize,
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rows = rng.random_range(20..=200);
    let n_features = rng.random_range(1..=3);
    let k = rng.random_range(2..=5);

    let mut features: Vec<FeatureSchema> = (0..n_features)
        .map(|j| FeatureSchema::numeric(&format!("x{j}"), Role::Feature))
        .collect();
    features.push(FeatureSchema::categorical("a", Role::Protected).with_order(&["M", "F"]));
    features.push(FeatureSchema::numeric("y", Role::Target));
    let schema = Schema::new(features).unwrap();

    let p_protected = rng.random_range(0.2..0.6);
    let rows: Vec<Instance> = (0..n_rows)
        .map(|_| {
            let mut values: Vec<Value> = (0..n_features)
                .map(|_| Value::Num(rng.random_range(-3.0..3.0)))
                .collect();
            let prot = rng.random_bool(p_protected);
            values.push(Value::Cat(if prot { "F" } else { "M" }.into()));
            values.push(Value::Num(if rng.random_bool(0.5) { 1.0 } else { 0.0 }));
            Instance::new(values)
        })
        .collect();
    let ds = Dataset::new(schema.clone(), rows).unwrap();

    let mut model = BuiltinModel::linear(&schema, &[], 0.0, OutputMode::Probability).unwrap();
    for w in model.weights.iter_mut() {
        *w = rng.random_range(-1.5..1.5);
    }
    model.intercept = rng.random_range(-1.0..1.0);

    let x_col = rng.random_range(0..n_features);
    let values = ds.numeric_column(x_col).unwrap();
    let partition = quantile_partition(&format!("x{x_col}"), &values, k).unwrap();
    Case {
        ds,
        model,
        partition,
        spec: ProtectedSpec::new("a", "F", "M"),
        x_col,
        a_col: n_features,
        k,
    }
}
