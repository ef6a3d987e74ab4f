//! Fixtures shared by the benchmarks.

use bbglm_core::LabeledMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random standardized design with labels from a logistic model.
pub fn synthetic_design(n: usize, p: usize, seed: u64) -> LabeledMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let eta: f64 = -3.0 + row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        y.push(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        x.extend(row);
    }
    let ids = (1..=p).map(|j| format!("attr{j}")).collect();
    LabeledMatrix::new(x, y, ids).expect("consistent shape")
}
