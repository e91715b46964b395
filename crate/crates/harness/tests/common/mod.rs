#![allow(dead_code)]

use cascade_core::{HypothesisModel, InformationTrace, ModelSet, Parent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// `m` hypotheses over `z` states with strictly positive kernels and
/// random priors.
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

/// Probability of the first `len` events, walking every path of the
/// propagation tree from the source and multiplying kernel entries.
pub fn path_product(trace: &InformationTrace, len: usize, models: &ModelSet, m: usize) -> f64 {
    let model = models.model(m);
    let events = &trace.events[..len];
    let mut children = vec![Vec::new(); len];
    let mut roots = Vec::new();
    for (i, e) in events.iter().enumerate() {
        match e.parent {
            Parent::Source => roots.push(i),
            Parent::Event(p) => children[p].push(i),
        }
    }
    let mut prob = 1.0;
    let mut stack: Vec<(usize, Option<usize>)> = roots.into_iter().map(|r| (r, None)).collect();
    while let Some((i, ancestor)) = stack.pop() {
        let z = events[i].edge_type.unwrap();
        prob *= match ancestor {
            None => model.eta()[z],
            Some(a) => model.alpha()[a][z],
        };
        stack.extend(children[i].iter().map(|&c| (c, Some(z))));
    }
    prob
}

pub fn brute_force_posterior(trace: &InformationTrace, len: usize, models: &ModelSet) -> Vec<f64> {
    let joint: Vec<f64> =
        (0..models.num_hypotheses()).map(|m| models.priors()[m] * path_product(trace, len, models, m)).collect();
    let total: f64 = joint.iter().sum();
    joint.iter().map(|j| j / total).collect()
}
