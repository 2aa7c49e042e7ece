//! Bin-parallel evaluation. Bins are spread over scoped threads only when the
//! oracle allows concurrent calls; results are merged in bin order, so the
//! output never depends on scheduling.

use std::thread;

use fale_core::{
    AleCurve, AleEstimator, BinEffect, Centering, FaleCurve, FaleEstimator, LocalEffect,
    PredictionOracle,
};

use crate::error::Result;

fn per_bin<T, F>(bins: usize, jobs: usize, concurrent: bool, f: F) -> fale_core::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> fale_core::Result<T> + Sync,
{
    let workers = jobs.max(1).min(bins);
    if !concurrent || workers <= 1 {
        return (1..=bins).map(&f).collect();
    }
    log::debug!("evaluating {bins} bins on {workers} threads");
    let mut slots: Vec<Option<fale_core::Result<T>>> = (0..bins).map(|_| None).collect();
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    (1..=bins)
                        .filter(|k| (k - 1) % workers == w)
                        .map(|k| (k, f(k)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("bin worker panicked") {
                slots[k - 1] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every bin evaluated"))
        .collect()
}

pub fn run_fale<O>(
    est: &FaleEstimator<'_>,
    oracle: &O,
    centering: Centering,
    jobs: usize,
) -> Result<FaleCurve>
where
    O: PredictionOracle + Sync + ?Sized,
{
    let effects: Vec<BinEffect> = per_bin(est.bin_count(), jobs, oracle.concurrency_safe(), |k| {
        est.bin_effect(oracle, k)
    })?;
    let global = est.global_unfairness(oracle, est.measure().absolute())?;
    Ok(est.assemble(&effects, global, centering)?)
}

pub fn run_ale<O>(
    est: &AleEstimator<'_>,
    oracle: &O,
    centering: Centering,
    jobs: usize,
) -> Result<AleCurve>
where
    O: PredictionOracle + Sync + ?Sized,
{
    let effects: Vec<LocalEffect> =
        per_bin(est.bin_count(), jobs, oracle.concurrency_safe(), |k| {
            est.local_effect(oracle, k)
        })?;
    Ok(est.assemble(&effects, centering)?)
}
