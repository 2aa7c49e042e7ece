use fale_core::oracle::{sigmoid, train_logistic};
use fale_core::{Dataset, FeatureSchema, Instance, Role, Schema, TrainConfig, Value};
use proptest::prelude::*;

fn dataset(points: &[(f64, f64, f64)]) -> Dataset {
    let schema = Schema::new(vec![
        FeatureSchema::numeric("x", Role::Feature),
        FeatureSchema::numeric("z", Role::Feature),
        FeatureSchema::numeric("y", Role::Target),
    ])
    .unwrap();
    let rows = points
        .iter()
        .map(|&(x, z, y)| Instance::new(vec![Value::Num(x), Value::Num(z), Value::Num(y)]))
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Plain full-batch gradient descent on the standardized 1-D problem, fixed
/// step, zero start.
fn reference_gd(xs: &[f64], ys: &[f64], lr: f64, epochs: usize) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let zs: Vec<f64> = xs.iter().map(|x| (x - mean) / sd).collect();
    let (mut w, mut b) = (0.0, 0.0);
    for _ in 0..epochs {
        let (mut gw, mut gb) = (0.0, 0.0);
        for (z, y) in zs.iter().zip(ys) {
            let r = sigmoid(w * z + b) - y;
            gw += r * z / n;
            gb += r / n;
        }
        w -= lr * gw;
        b -= lr * gb;
    }
    (w, b)
}

#[test]
fn separable_pair_reaches_full_accuracy() {
    let (rw, rb) = reference_gd(&[0.0, 1.0], &[0.0, 1.0], 0.5, 500);
    assert!(sigmoid(-rw + rb) < 0.5 && sigmoid(rw + rb) > 0.5);

    let ds = dataset(&[(0.0, 0.0, 0.0), (1.0, 0.0, 1.0)]);
    let cfg = TrainConfig {
        learning_rate: 0.5,
        epochs: 500,
        l2: 0.0,
        seed: 1,
    };
    let t = train_logistic(&ds, "y", &cfg).unwrap();
    let scores = t.model.predict_batch(ds.rows()).unwrap();
    let correct = scores
        .iter()
        .zip([0.0, 1.0])
        .filter(|(s, y)| ((**s >= 0.5) as u8 as f64) == *y)
        .count();
    assert_eq!(correct, 2);
    // the trained x weight lands near the reference despite the seeded start
    assert!((t.model.weights[0] - rw).abs() < 0.05 * rw.abs());
}

use fale_core::PredictionOracle;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accepted_steps_never_increase_loss(
        pts in prop::collection::vec((-5.0f64..5.0, -2.0f64..2.0, any::<bool>()), 2..40),
        lr in 0.05f64..8.0,
        seed in any::<u64>(),
    ) {
        let pts: Vec<(f64, f64, f64)> = pts.into_iter().map(|(x, z, y)| (x, z, y as u8 as f64)).collect();
        let ds = dataset(&pts);
        let cfg = TrainConfig { learning_rate: lr, epochs: 60, l2: 1e-3, seed };
        let t = train_logistic(&ds, "y", &cfg).unwrap();
        for w in t.loss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        let again = train_logistic(&ds, "y", &cfg).unwrap();
        prop_assert_eq!(t, again);
    }
}
