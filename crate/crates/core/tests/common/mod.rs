#![allow(dead_code)]

use std::f64::consts::TAU;

use metric_constraints::ChartPoint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Interior point of the `n`-level chart with every action (and the
/// residual) at least `floor`-weighted.
pub fn interior_point(n: usize) -> impl Strategy<Value = ChartPoint> {
    (
        prop::collection::vec(0.0..TAU, n - 1),
        prop::collection::vec(0.05f64..1.0, n),
    )
        .prop_map(|(q, w)| {
            let total: f64 = w.iter().sum();
            let p = w[..w.len() - 1].iter().map(|x| x / total).collect();
            ChartPoint::new(q, p).unwrap()
        })
}

/// Seeded version of [`interior_point`] for loops.
pub fn seeded_points(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = (0..n - 1).map(|_| rng.gen_range(0.0..TAU)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            ChartPoint::new(q, w[..n - 1].iter().map(|x| x / total).collect()).unwrap()
        })
        .collect()
}
