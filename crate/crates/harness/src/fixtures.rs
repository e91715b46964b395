//! Bundled synthetic models used by the CLI, examples and acceptance runs.

use cascade_core::{HypothesisModel, ModelSet};

/// Two states; state 0 is sticky.
pub fn model_a() -> HypothesisModel {
    HypothesisModel::new(vec![0.5, 0.5], vec![vec![0.9, 0.1], vec![0.5, 0.5]]).expect("valid fixture")
}

/// Two states; state 1 is sticky.
pub fn model_b() -> HypothesisModel {
    HypothesisModel::new(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.1, 0.9]]).expect("valid fixture")
}

/// Models A and B with uniform priors.
pub fn ab_pair() -> ModelSet {
    ModelSet::uniform(vec![model_a(), model_b()]).expect("valid fixture")
}

/// Three hypotheses over three states. Under `H_m` a state `z` moves to
/// `(m + z) mod 3` with probability 0.6 and to each other state with 0.2;
/// first edges favor state `m`.
pub fn three_hypotheses() -> ModelSet {
    let models = (0..3)
        .map(|m| {
            let eta = (0..3).map(|z| if z == m { 0.6 } else { 0.2 }).collect();
            let alpha =
                (0..3).map(|z| (0..3).map(|next| if next == (m + z) % 3 { 0.6 } else { 0.2 }).collect()).collect();
            HypothesisModel::new(eta, alpha).expect("valid fixture")
        })
        .collect();
    ModelSet::uniform(models).expect("valid fixture")
}

/// Looks up a bundled model set by name.
pub fn by_name(name: &str) -> Option<ModelSet> {
    match name {
        "ab" => Some(ab_pair()),
        "three" => Some(three_hypotheses()),
        _ => None,
    }
}

pub const NAMES: [&str; 2] = ["ab", "three"];
