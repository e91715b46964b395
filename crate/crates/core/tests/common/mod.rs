#![allow(dead_code)]

use cascade_core::{HypothesisModel, ModelSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probability vector with every entry at least `floor`.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// `m` hypotheses over `z` states with strictly positive kernels.
pub fn random_models(seed: u64, m: usize, z: usize) -> ModelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = (0..m)
        .map(|_| {
            let eta = random_simplex(&mut rng, z, 0.05);
            let alpha = (0..z).map(|_| random_simplex(&mut rng, z, 0.05)).collect();
            HypothesisModel::new(eta, alpha).unwrap()
        })
        .collect();
    let priors = random_simplex(&mut rng, m, 0.2);
    ModelSet::new(models, priors).unwrap()
}

pub fn model_a() -> HypothesisModel {
    HypothesisModel::new(vec![0.5, 0.5], vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap()
}

pub fn model_b() -> HypothesisModel {
    HypothesisModel::new(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap()
}

pub fn ab() -> ModelSet {
    ModelSet::uniform(vec![model_a(), model_b()]).unwrap()
}
