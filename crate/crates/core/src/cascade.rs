//! Information traces and their synthetic generation.
//!
//! A trace is the ordered list of forwarding events of one message. Every
//! event points at the event it extends (its ancestor) or at the source, so
//! the events form a tree whose root-to-leaf chains are each a Markov chain
//! over edge types.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::HypothesisModel;

/// Where an event attaches in the propagation tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parent {
    Source,
    Event(usize),
}

impl Parent {
    pub fn event(self) -> Option<usize> {
        match self {
            Parent::Source => None,
            Parent::Event(i) => Some(i),
        }
    }
}

/// Feature vectors of the followee `u` and follower `v` of an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatures {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

impl EdgeFeatures {
    /// `(x_u, x_v)` concatenated.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.source.len() + self.target.len());
        v.extend_from_slice(&self.source);
        v.extend_from_slice(&self.target);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub parent: Parent,
    pub edge_type: Option<usize>,
    pub features: Option<EdgeFeatures>,
}

impl TraceEvent {
    pub fn typed(parent: Parent, edge_type: usize) -> Self {
        Self { parent, edge_type: Some(edge_type), features: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformationTrace {
    pub trace_id: String,
    pub label: usize,
    pub events: Vec<TraceEvent>,
}

pub type TraceSet = Vec<InformationTrace>;

impl InformationTrace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks the tree structure: ancestors precede their children, and every
    /// event carries a type or features.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            if let Parent::Event(p) = e.parent {
                if p >= i {
                    return Err(Error::InvalidTrace(format!(
                        "trace {}: event {i} points at later or equal event {p}",
                        self.trace_id
                    )));
                }
            }
            if e.edge_type.is_none() && e.features.is_none() {
                return Err(Error::InvalidTrace(format!(
                    "trace {}: event {i} has neither an edge type nor features",
                    self.trace_id
                )));
            }
            if let Some(f) = &e.features {
                if f.source.len() != f.target.len() {
                    return Err(Error::InvalidTrace(format!(
                        "trace {}: event {i} has feature vectors of different lengths",
                        self.trace_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validates the trace and checks every type lies in `[0, z_count)`.
    pub fn validate_types(&self, z_count: usize) -> Result<()> {
        self.validate()?;
        for (i, e) in self.events.iter().enumerate() {
            match e.edge_type {
                Some(z) if z < z_count => {}
                Some(z) => {
                    return Err(Error::InvalidTrace(format!(
                        "trace {}: event {i} has type {z}, outside [0, {z_count})",
                        self.trace_id
                    )))
                }
                None => {
                    return Err(Error::InvalidTrace(format!("trace {}: event {i} has no edge type", self.trace_id)))
                }
            }
        }
        Ok(())
    }

    /// Edge types of all events; fails on the first untyped event.
    pub fn types(&self) -> Result<Vec<usize>> {
        self.events
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.edge_type
                    .ok_or_else(|| Error::InvalidTrace(format!("trace {}: event {i} has no edge type", self.trace_id)))
            })
            .collect()
    }

    /// Number of events attached directly to the source.
    pub fn source_events(&self) -> usize {
        self.events.iter().filter(|e| e.parent == Parent::Source).count()
    }
}

/// How the next event chooses where to attach.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FrontierPolicy {
    #[default]
    /// Pick uniformly among the current leaves and the source; picking the
    /// source starts a new path.
    UniformFrontier,
    /// Start a new path with probability `p`, otherwise extend a uniformly
    /// chosen leaf.
    SpawnProbability(f64),
    /// One path: every event extends the previous one.
    SinglePath,
}

impl FrontierPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FrontierPolicy::SpawnProbability(p) if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidConfig(format!("spawn probability {p} is outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Per-type Gaussian surrogate for edge features: an event of type `z` gets
/// `(x_u, x_v)` drawn from `N(means[z], std^2 I)` over the concatenated
/// `2d`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    pub dim: usize,
    pub means: Vec<Vec<f64>>,
    pub std: f64,
}

impl FeatureModel {
    /// Type `z` puts `separation` on every coordinate `i` of the
    /// concatenated vector with `i % z_count == z`, and zero elsewhere.
    pub fn separated(z_count: usize, dim: usize, separation: f64, std: f64) -> Result<Self> {
        if z_count == 0 || dim == 0 {
            return Err(Error::InvalidConfig("feature model needs z_count >= 1 and dim >= 1".into()));
        }
        if 2 * dim < z_count {
            return Err(Error::InvalidConfig(format!(
                "feature dimension {dim} is too small to separate {z_count} types (need 2*dim >= z_count)"
            )));
        }
        if !(std >= 0.0) || !std.is_finite() {
            return Err(Error::InvalidConfig(format!("feature std {std} must be finite and >= 0")));
        }
        let means = (0..z_count)
            .map(|z| (0..2 * dim).map(|i| if i % z_count == z { separation } else { 0.0 }).collect())
            .collect();
        Ok(Self { dim, means, std })
    }

    pub fn num_types(&self) -> usize {
        self.means.len()
    }

    fn sample<R: Rng>(&self, z: usize, rng: &mut R) -> EdgeFeatures {
        let mean = &self.means[z];
        let x: Vec<f64> = mean
            .iter()
            .map(|m| {
                let n: f64 = StandardNormal.sample(rng);
                m + self.std * n
            })
            .collect();
        EdgeFeatures { source: x[..self.dim].to_vec(), target: x[self.dim..].to_vec() }
    }
}

/// Seed of the `i`-th trial under a base seed.
#[inline]
pub fn trial_seed(base_seed: u64, i: u64) -> u64 {
    base_seed.wrapping_add(i)
}

/// Streams the events of one synthetic trace.
///
/// The sampler is an unbounded iterator; prefixes are identical to the trace
/// that [`sample_trace`] builds with the same arguments.
pub struct TraceSampler<'a> {
    model: &'a HypothesisModel,
    features: Option<&'a FeatureModel>,
    policy: FrontierPolicy,
    rng: ChaCha8Rng,
    initial: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
    types: Vec<usize>,
    leaves: Vec<usize>,
}

impl<'a> TraceSampler<'a> {
    pub fn new(model: &'a HypothesisModel, policy: FrontierPolicy, seed: u64) -> Result<Self> {
        policy.validate()?;
        let initial = WeightedIndex::new(model.eta().iter().copied())
            .map_err(|e| Error::InvalidModel(format!("eta cannot be sampled: {e}")))?;
        let rows = model
            .alpha()
            .iter()
            .map(|row| WeightedIndex::new(row.iter().copied()))
            .collect::<core::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidModel(format!("alpha cannot be sampled: {e}")))?;
        Ok(Self {
            model,
            features: None,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            initial,
            rows,
            types: Vec::new(),
            leaves: Vec::new(),
        })
    }

    /// Attach features drawn from `features` to every event.
    pub fn with_features(mut self, features: &'a FeatureModel) -> Result<Self> {
        if features.num_types() != self.model.num_states() {
            return Err(Error::Shape(format!(
                "feature model covers {} types, the hypothesis has {}",
                features.num_types(),
                self.model.num_states()
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    fn choose_parent(&mut self) -> Parent {
        let n = self.types.len();
        if n == 0 {
            return Parent::Source;
        }
        let leaf_slot = match self.policy {
            FrontierPolicy::SinglePath => return Parent::Event(n - 1),
            FrontierPolicy::UniformFrontier => {
                let pick = self.rng.random_range(0..=self.leaves.len());
                (pick < self.leaves.len()).then_some(pick)
            }
            FrontierPolicy::SpawnProbability(p) => {
                let spawn = self.leaves.is_empty() || self.rng.random::<f64>() < p;
                (!spawn).then(|| self.rng.random_range(0..self.leaves.len()))
            }
        };
        match leaf_slot {
            Some(slot) => Parent::Event(self.leaves[slot]),
            None => Parent::Source,
        }
    }
}

impl Iterator for TraceSampler<'_> {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        let index = self.types.len();
        let parent = self.choose_parent();
        let z = match parent {
            Parent::Source => self.initial.sample(&mut self.rng),
            Parent::Event(p) => self.rows[self.types[p]].sample(&mut self.rng),
        };
        match parent {
            Parent::Source => self.leaves.push(index),
            Parent::Event(p) => {
                if let Some(slot) = self.leaves.iter().position(|&l| l == p) {
                    self.leaves[slot] = index;
                } else {
                    self.leaves.push(index);
                }
            }
        }
        self.types.push(z);
        let features = self.features.map(|f| f.sample(z, &mut self.rng));
        Some(TraceEvent { parent, edge_type: Some(z), features })
    }
}

/// Draws a trace of exactly `horizon` events from one hypothesis.
pub fn sample_trace(
    model: &HypothesisModel,
    label: usize,
    horizon: usize,
    policy: FrontierPolicy,
    seed: u64,
) -> Result<InformationTrace> {
    sample_trace_with(model, None, label, horizon, policy, seed)
}

/// [`sample_trace`] with optional per-type Gaussian features on every event.
pub fn sample_trace_with(
    model: &HypothesisModel,
    features: Option<&FeatureModel>,
    label: usize,
    horizon: usize,
    policy: FrontierPolicy,
    seed: u64,
) -> Result<InformationTrace> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be ≥ 1".into()));
    }
    let mut sampler = TraceSampler::new(model, policy, seed)?;
    if let Some(f) = features {
        sampler = sampler.with_features(f)?;
    }
    Ok(InformationTrace { trace_id: format!("h{label}-s{seed}"), label, events: sampler.take(horizon).collect() })
}

/// `counts[i][j]`: how often an event of type `j` extends an ancestor of type `i`.
pub fn transition_counts(trace: &InformationTrace, z_count: usize) -> Result<Vec<Vec<u64>>> {
    let types = trace.types()?;
    let mut counts = vec![vec![0u64; z_count]; z_count];
    for (i, e) in trace.events.iter().enumerate() {
        if let Parent::Event(p) = e.parent {
            counts[types[p]][types[i]] += 1;
        }
    }
    Ok(counts)
}
