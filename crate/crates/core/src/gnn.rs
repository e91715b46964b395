//! Sequential rule driven by per-node class scores.
//!
//! Each arriving event is scored by a [`Scorer`] into a probability vector
//! `phi_i` over the hypotheses. Scores are pooled by summing their logs and
//! the pooled vector `Phi = softmax(sum_i log phi_i)` replaces the posterior
//! in the MSPRT stopping rule. When the scorer returns the class-normalized
//! likelihood `alpha_m(z | ancestor) / sum_j alpha_j(z | ancestor)`, `Phi` is
//! exactly the MSPRT posterior under uniform priors.

use core::borrow::Borrow;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cascade::{trial_seed, FeatureModel, FrontierPolicy, InformationTrace, Parent, TraceEvent, TraceSampler};
use crate::error::{Error, Result};
use crate::kernels::ModelSet;
use crate::math::{argmax, exp, ln, softmax};
use crate::msprt::{Likelihood, MarkovLikelihood, SdrConfig, SdrOutcome, StopTime};

/// Scores below this are raised to it before taking logs.
pub const SCORE_FLOOR: f64 = 1e-300;

/// Dense + GIN layer weights. `w1` is `h x d`, `w2` is `M x h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GinWeights {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    epsilon: f64,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

impl GinWeights {
    pub fn new(w1: Vec<Vec<f64>>, b1: Vec<f64>, epsilon: f64, w2: Vec<Vec<f64>>, b2: Vec<f64>) -> Result<Self> {
        let h = w1.len();
        if h == 0 || w1[0].is_empty() {
            return Err(Error::Shape("W1 must be a non-empty h x d matrix".into()));
        }
        let d = w1[0].len();
        if w1.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("W1 rows have different lengths".into()));
        }
        if b1.len() != h {
            return Err(Error::Shape(format!("b1 has length {}, expected h = {h}", b1.len())));
        }
        if w2.is_empty() || w2.iter().any(|r| r.len() != h) {
            return Err(Error::Shape(format!("W2 must be an M x {h} matrix")));
        }
        if b2.len() != w2.len() {
            return Err(Error::Shape(format!("b2 has length {}, expected M = {}", b2.len(), w2.len())));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !epsilon.is_finite() || !w1.iter().chain(&w2).all(|r| finite(r)) || !finite(&b1) || !finite(&b2) {
            return Err(Error::InvalidModel("GIN weights must be finite".into()));
        }
        Ok(Self { w1, b1, epsilon, w2, b2 })
    }

    pub fn input_dim(&self) -> usize {
        self.w1[0].len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.len()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn w1(&self) -> &[Vec<f64>] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[Vec<f64>] {
        &self.w2
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    /// `h(d + 1)` for the dense layer plus `hM + M + 1` for the GIN layer.
    pub fn parameter_count(&self) -> usize {
        let (h, d, m) = (self.hidden_dim(), self.input_dim(), self.num_classes());
        h * (d + 1) + h * m + m + 1
    }

    fn embed(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).max(0.0))
            .collect()
    }
}

/// Per-node class probabilities:
/// `softmax(W2 ((1 + eps) relu(W1 x + b1) + relu(W1 x_parent + b1)) + b2)`,
/// with the parent term dropped for nodes attached to the source.
pub fn gin_forward(x: &[f64], parent_x: Option<&[f64]>, w: &GinWeights) -> Result<Vec<f64>> {
    let d = w.input_dim();
    if x.len() != d || parent_x.is_some_and(|p| p.len() != d) {
        return Err(Error::Shape(format!("GIN input must have dimension {d}")));
    }
    let mut hidden: Vec<f64> = w.embed(x).into_iter().map(|v| (1.0 + w.epsilon) * v).collect();
    if let Some(p) = parent_x {
        hidden.iter_mut().zip(w.embed(p)).for_each(|(a, b)| *a += b);
    }
    let logits: Vec<f64> =
        w.w2.iter().zip(&w.b2).map(|(row, b)| row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + b).collect();
    Ok(softmax(&logits))
}

/// Class probabilities from a table indexed by conditioning state and
/// event type. Row `num_states` holds events attached to the source.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularScorer {
    num_states: usize,
    /// `table[c][z][m]`.
    table: Vec<Vec<Vec<f64>>>,
}

impl TabularScorer {
    pub fn from_table(table: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let num_states = table.len().checked_sub(1).ok_or_else(|| Error::Shape("empty score table".into()))?;
        let m = table[0].first().map_or(0, Vec::len);
        for row in &table {
            if row.len() != num_states || row.iter().any(|s| s.len() != m) {
                return Err(Error::Shape(format!("score table must be {} x {num_states} x {m}", num_states + 1)));
            }
            for s in row {
                let sum: f64 = s.iter().sum();
                if s.iter().any(|p| !(*p > 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel("score table entries must be positive distributions".into()));
                }
            }
        }
        Ok(Self { num_states, table })
    }

    fn build(models: &ModelSet, weight: impl Fn(usize) -> f64) -> Result<Self> {
        let z_count = models.num_states();
        let table = (0..=z_count)
            .map(|c| {
                (0..z_count)
                    .map(|z| {
                        let ancestor = (c < z_count).then_some(c);
                        let raw: Vec<f64> = models
                            .models()
                            .iter()
                            .enumerate()
                            .map(|(m, h)| (weight(m) * h.event_probability(ancestor, z)).max(SCORE_FLOOR))
                            .collect();
                        let sum: f64 = raw.iter().sum();
                        raw.into_iter().map(|p| p / sum).collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { num_states: z_count, table })
    }

    /// Class-normalized likelihoods; matches [`NodeScorer::Oracle`].
    pub fn from_likelihoods(models: &ModelSet) -> Result<Self> {
        Self::build(models, |_| 1.0)
    }

    /// Per-node posteriors with the prior folded into every node.
    pub fn from_posteriors(models: &ModelSet) -> Result<Self> {
        let priors = models.priors().to_vec();
        Self::build(models, move |m| priors[m])
    }

    /// Count-estimated class-conditional likelihoods with add-one smoothing,
    /// normalized across classes.
    pub fn estimate(traces: &[InformationTrace], num_classes: usize, z_count: usize) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::InsufficientData("no training traces for the tabular scorer".into()));
        }
        // counts[m][c][z]
        let mut counts = vec![vec![vec![0.0f64; z_count]; z_count + 1]; num_classes];
        for t in traces {
            if t.label >= num_classes {
                return Err(Error::InvalidTrace(format!(
                    "trace {} has label {} >= {num_classes}",
                    t.trace_id, t.label
                )));
            }
            t.validate_types(z_count)?;
            let types = t.types()?;
            for (i, e) in t.events.iter().enumerate() {
                let c = e.parent.event().map_or(z_count, |p| types[p]);
                counts[t.label][c][types[i]] += 1.0;
            }
        }
        let table = (0..=z_count)
            .map(|c| {
                (0..z_count)
                    .map(|z| {
                        let lik: Vec<f64> = (0..num_classes)
                            .map(|m| {
                                let row_total: f64 = counts[m][c].iter().sum();
                                (counts[m][c][z] + 1.0) / (row_total + z_count as f64)
                            })
                            .collect();
                        let sum: f64 = lik.iter().sum();
                        lik.into_iter().map(|p| p / sum).collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { num_states: z_count, table })
    }

    pub fn table(&self) -> &[Vec<Vec<f64>>] {
        &self.table
    }

    pub fn num_classes(&self) -> usize {
        self.table[0].first().map_or(0, Vec::len)
    }
}

/// Produces one class-probability vector per arriving event.
pub trait Scorer {
    fn num_classes(&self) -> usize;

    /// Scores `event` given the types of all earlier events.
    fn score(&self, history: &[Option<usize>], event: &TraceEvent) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeScorer {
    /// `phi[m] = alpha_m(z | ancestor) / sum_j alpha_j(z | ancestor)`, with
    /// `eta` for source edges.
    Oracle(ModelSet),
    Tabular(TabularScorer),
    Gin(GinWeights),
}

fn ancestor_type(history: &[Option<usize>], event: &TraceEvent) -> Result<Option<usize>> {
    match event.parent {
        Parent::Source => Ok(None),
        Parent::Event(p) => match history.get(p) {
            Some(Some(z)) => Ok(Some(*z)),
            _ => Err(Error::InvalidTrace(format!("ancestor event {p} has no observed type"))),
        },
    }
}

fn event_type(event: &TraceEvent, states: usize) -> Result<usize> {
    match event.edge_type {
        Some(z) if z < states => Ok(z),
        Some(z) => Err(Error::InvalidTrace(format!("edge type {z} outside [0, {states})"))),
        None => Err(Error::InvalidTrace("type-based scorer needs edge types".into())),
    }
}

impl Scorer for NodeScorer {
    fn num_classes(&self) -> usize {
        match self {
            NodeScorer::Oracle(m) => m.num_hypotheses(),
            NodeScorer::Tabular(t) => t.num_classes(),
            NodeScorer::Gin(w) => w.num_classes(),
        }
    }

    fn score(&self, history: &[Option<usize>], event: &TraceEvent) -> Result<Vec<f64>> {
        match self {
            NodeScorer::Oracle(models) => {
                let z = event_type(event, models.num_states())?;
                let ancestor = ancestor_type(history, event)?;
                let raw: Vec<f64> = models.models().iter().map(|h| h.event_probability(ancestor, z)).collect();
                let sum: f64 = raw.iter().sum();
                if sum > 0.0 {
                    Ok(raw.into_iter().map(|p| p / sum).collect())
                } else {
                    Ok(raw)
                }
            }
            NodeScorer::Tabular(t) => {
                let z = event_type(event, t.num_states)?;
                let c = ancestor_type(history, event)?.unwrap_or(t.num_states);
                Ok(t.table[c][z].clone())
            }
            NodeScorer::Gin(w) => {
                let f = event
                    .features
                    .as_ref()
                    .ok_or_else(|| Error::InvalidTrace("GIN scorer needs edge features".into()))?;
                let parent = match event.parent {
                    Parent::Source => None,
                    Parent::Event(_) => Some(f.source.as_slice()),
                };
                gin_forward(&f.target, parent, w)
            }
        }
    }
}

/// Adapts a scorer to the MSPRT loop: `log max(phi, floor)` per event.
/// With uniform priors the resulting posterior equals `Phi`.
#[derive(Debug, Clone, Copy)]
pub struct ScoreLikelihood<'a, S: ?Sized>(pub &'a S);

impl<S: Scorer + ?Sized> Likelihood for ScoreLikelihood<'_, S> {
    fn num_hypotheses(&self) -> usize {
        self.0.num_classes()
    }

    fn log_likelihoods(&self, history: &[Option<usize>], event: &TraceEvent, out: &mut [f64]) -> Result<()> {
        let phi = self.0.score(history, event)?;
        for (o, p) in out.iter_mut().zip(phi) {
            *o = ln(p.max(SCORE_FLOOR));
        }
        Ok(())
    }
}

/// Running sum of per-node log-scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorState {
    log_sums: Vec<f64>,
    count: usize,
}

impl AggregatorState {
    pub fn new(num_classes: usize) -> Self {
        Self { log_sums: vec![0.0; num_classes], count: 0 }
    }

    pub fn log_sums(&self) -> &[f64] {
        &self.log_sums
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn pooled(&self) -> Vec<f64> {
        softmax(&self.log_sums)
    }
}

/// Adds `log phi` to the pooled sums and returns the pooled probabilities.
pub fn aggregate_step(state: &mut AggregatorState, phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() != state.log_sums.len() {
        return Err(Error::Shape(format!("score has {} classes, aggregator {}", phi.len(), state.log_sums.len())));
    }
    if phi.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::ScorerContract { index: state.count });
    }
    state.log_sums.iter_mut().zip(phi).for_each(|(s, p)| *s += ln(*p));
    state.count += 1;
    Ok(state.pooled())
}

/// Sequential rule on pooled scores. The pooled vector starts uniform.
pub fn run_gnn_sdr<S: Scorer + ?Sized>(trace: &InformationTrace, scorer: &S, cfg: &SdrConfig) -> Result<SdrOutcome> {
    run_gnn_with(&trace.events, scorer, cfg)
}

/// [`run_gnn_sdr`] over any event stream; stops pulling events once the
/// rule stops.
pub fn run_gnn_with<I, S>(events: I, scorer: &S, cfg: &SdrConfig) -> Result<SdrOutcome>
where
    I: IntoIterator,
    I::Item: Borrow<TraceEvent>,
    S: Scorer + ?Sized,
{
    let m = scorer.num_classes();
    cfg.validate()?;
    if cfg.thresholds.len() != m {
        return Err(Error::InvalidConfig(format!("{} thresholds given for {m} classes", cfg.thresholds.len())));
    }
    let rule = cfg.stopping_rule();
    let mut state = AggregatorState::new(m);
    let mut history = Vec::new();
    let mut trajectory = vec![vec![1.0 / m as f64; m]];
    for event in events {
        let event = event.borrow();
        let phi: Vec<f64> = scorer.score(&history, event)?.into_iter().map(|p| p.max(SCORE_FLOOR)).collect();
        let pooled = aggregate_step(&mut state, &phi)?;
        history.push(event.edge_type);
        let crossed = rule.crossing(&pooled).is_some();
        let decision = argmax(&pooled);
        trajectory.push(pooled);
        if crossed {
            return Ok(SdrOutcome { stop: StopTime::Stopped(history.len()), decision, trajectory });
        }
    }
    let decision = argmax(trajectory.last().expect("non-empty"));
    Ok(SdrOutcome { stop: StopTime::NotStopped(history.len()), decision, trajectory })
}

/// Sampling plan for [`estimate_xi`].
#[derive(Debug, Clone, PartialEq)]
pub struct XiConfig {
    pub max_len: usize,
    pub n_sequences: usize,
    pub seed: u64,
    pub policy: FrontierPolicy,
    /// Required for feature-based scorers.
    pub features: Option<FeatureModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiWitness {
    pub k: usize,
    pub j: usize,
    /// Index of the sampled sequence and length of the prefix.
    pub sequence: usize,
    pub prefix: usize,
}

/// Largest observed `(Phi_k / Phi_j) / (f_k / f_j)`. Sampling can only
/// under-estimate the supremum over all sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiEstimate {
    pub xi_hat: f64,
    pub witness: XiWitness,
}

/// Estimates the worst-case ratio between pooled-score ratios and true
/// likelihood ratios over sampled prefixes. Sequence `s` is drawn from
/// hypothesis `s mod M` with seed `seed + s`. Prefixes impossible under `k`
/// or `j` are skipped, since the ratio is not defined there.
pub fn estimate_xi<S: Scorer + ?Sized>(scorer: &S, models: &ModelSet, cfg: &XiConfig) -> Result<XiEstimate> {
    let m = models.num_hypotheses();
    if m < 2 {
        return Err(Error::Undefined("xi undefined for M<2".into()));
    }
    if scorer.num_classes() != m {
        return Err(Error::Shape(format!("scorer has {} classes, model set {m}", scorer.num_classes())));
    }
    if cfg.max_len == 0 || cfg.n_sequences == 0 {
        return Err(Error::InvalidConfig("xi estimation needs max_len >= 1 and n_sequences >= 1".into()));
    }
    let likelihood = MarkovLikelihood(models);
    let mut best = f64::NEG_INFINITY;
    let mut witness = XiWitness { k: 0, j: 1, sequence: 0, prefix: 1 };
    let mut log_lik = vec![0.0; m];
    for s in 0..cfg.n_sequences {
        let truth = s % m;
        let mut sampler = TraceSampler::new(models.model(truth), cfg.policy, trial_seed(cfg.seed, s as u64))?;
        if let Some(f) = &cfg.features {
            sampler = sampler.with_features(f)?;
        }
        let mut scores = AggregatorState::new(m);
        let mut log_f = vec![0.0; m];
        let mut history = Vec::with_capacity(cfg.max_len);
        for (l, event) in sampler.take(cfg.max_len).enumerate() {
            let phi: Vec<f64> = scorer.score(&history, &event)?.into_iter().map(|p| p.max(SCORE_FLOOR)).collect();
            aggregate_step(&mut scores, &phi)?;
            likelihood.log_likelihoods(&history, &event, &mut log_lik)?;
            log_f.iter_mut().zip(&log_lik).for_each(|(f, l)| *f += l);
            history.push(event.edge_type);
            let sums = scores.log_sums();
            for k in 0..m {
                for j in (0..m).filter(|&j| j != k) {
                    if !log_f[k].is_finite() || !log_f[j].is_finite() {
                        continue;
                    }
                    let r = (sums[k] - sums[j]) - (log_f[k] - log_f[j]);
                    if r > best {
                        best = r;
                        witness = XiWitness { k, j, sequence: s, prefix: l + 1 };
                    }
                }
            }
        }
    }
    Ok(XiEstimate { xi_hat: exp(best), witness })
}
