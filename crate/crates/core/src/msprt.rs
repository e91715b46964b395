//! Sequential posterior recursion and the MSPRT stopping rule.
//!
//! The posterior over hypotheses is carried as log-weights
//! `log pi_m + log f_m(Z_1..Z_l)` shifted by their running maximum after every
//! event. A test stops at the first event where some posterior reaches
//! `1 / (1 + a_m)` and decides for the largest posterior at that point.
//!
//! Three likelihoods plug into the same loop:
//! - [`MarkovLikelihood`] conditions each event on its tree ancestor,
//! - [`SingleChainLikelihood`] conditions on the previous event in time,
//! - [`IidLikelihood`] ignores the structure and uses per-class marginals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;

use crate::cascade::{InformationTrace, Parent, TraceEvent};
use crate::error::{Error, Result};
use crate::kernels::{stationary_distribution, ModelSet};
use crate::math::{argmax, ln, softmax};

/// Slack on the threshold comparison so that a posterior that equals the
/// level in exact arithmetic is not lost to rounding.
pub const LEVEL_TOLERANCE: f64 = 1e-12;

/// Which likelihood [`run_sdr`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Markov,
    NaiveIid,
    SingleChain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrConfig {
    pub thresholds: Vec<f64>,
    pub rule: Rule,
}

impl SdrConfig {
    pub fn new(thresholds: Vec<f64>, rule: Rule) -> Result<Self> {
        let cfg = Self { thresholds, rule };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The same threshold `a` for all `m` hypotheses.
    pub fn uniform(a: f64, m: usize, rule: Rule) -> Result<Self> {
        Self::new(vec![a; m], rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::InvalidConfig("at least one threshold is required".into()));
        }
        for (m, &a) in self.thresholds.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidConfig(format!("threshold a[{m}] = {a} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    fn check_hypotheses(&self, m: usize) -> Result<()> {
        self.validate()?;
        if self.thresholds.len() != m {
            return Err(Error::InvalidConfig(format!("{} thresholds given for {m} hypotheses", self.thresholds.len())));
        }
        Ok(())
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule::new(&self.thresholds)
    }
}

/// Posterior levels `1 / (1 + a_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    levels: Vec<f64>,
}

impl StoppingRule {
    pub fn new(thresholds: &[f64]) -> Self {
        Self { levels: thresholds.iter().map(|a| 1.0 / (1.0 + a)).collect() }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Smallest hypothesis index whose score reaches its level.
    pub fn crossing(&self, scores: &[f64]) -> Option<usize> {
        scores.iter().zip(&self.levels).position(|(p, level)| p + LEVEL_TOLERANCE >= *level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopTime {
    Stopped(usize),
    /// The trace ended after this many events without a crossing.
    NotStopped(usize),
}

/// Result of one sequential run.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrOutcome {
    pub stop: StopTime,
    /// Decision at the stop time, or the forced argmax at the end of the trace.
    pub decision: usize,
    /// `trajectory[l]` is the score vector after `l` events; entry 0 is the
    /// starting vector.
    pub trajectory: Vec<Vec<f64>>,
}

impl SdrOutcome {
    /// Stop time, or the number of events seen when the run did not stop.
    pub fn stop_time(&self) -> usize {
        match self.stop {
            StopTime::Stopped(t) | StopTime::NotStopped(t) => t,
        }
    }

    pub fn forced(&self) -> bool {
        matches!(self.stop, StopTime::NotStopped(_))
    }

    /// Decision if a decision must be made by `deadline`: the stopped
    /// decision when the run stopped in time, otherwise the argmax at the
    /// deadline (or at the end of the trace).
    pub fn decision_at(&self, deadline: usize) -> usize {
        match self.stop {
            StopTime::Stopped(t) if t <= deadline => self.decision,
            _ => {
                let l = deadline.min(self.trajectory.len() - 1);
                argmax(&self.trajectory[l])
            }
        }
    }
}

/// Per-event log-likelihood of every hypothesis.
pub trait Likelihood {
    fn num_hypotheses(&self) -> usize;

    /// Fills `out[m]` with `log P(event | history, H_m)`. `history[i]` is the
    /// edge type of event `i`, when it has one.
    fn log_likelihoods(&self, history: &[Option<usize>], event: &TraceEvent, out: &mut [f64]) -> Result<()>;
}

fn typed(event: &TraceEvent, index: usize) -> Result<usize> {
    event.edge_type.ok_or_else(|| Error::InvalidTrace(format!("event {index} has no edge type")))
}

fn history_type(history: &[Option<usize>], i: usize) -> Result<usize> {
    match history.get(i) {
        Some(Some(z)) => Ok(*z),
        Some(None) => Err(Error::InvalidTrace(format!("ancestor event {i} has no edge type"))),
        None => Err(Error::InvalidTrace(format!("ancestor event {i} has not been observed"))),
    }
}

fn check_state(z: usize, states: usize, index: usize) -> Result<()> {
    if z >= states {
        return Err(Error::InvalidTrace(format!("event {index} has type {z}, outside [0, {states})")));
    }
    Ok(())
}

/// Union-of-Markov-chains likelihood: source edges from `eta`, every other
/// edge from `alpha(. | ancestor type)`.
#[derive(Debug, Clone, Copy)]
pub struct MarkovLikelihood<'a>(pub &'a ModelSet);

impl Likelihood for MarkovLikelihood<'_> {
    fn num_hypotheses(&self) -> usize {
        self.0.num_hypotheses()
    }

    fn log_likelihoods(&self, history: &[Option<usize>], event: &TraceEvent, out: &mut [f64]) -> Result<()> {
        let index = history.len();
        let z = typed(event, index)?;
        check_state(z, self.0.num_states(), index)?;
        let ancestor = match event.parent {
            Parent::Source => None,
            Parent::Event(p) => Some(history_type(history, p)?),
        };
        for (o, model) in out.iter_mut().zip(self.0.models()) {
            *o = ln(model.event_probability(ancestor, z));
        }
        Ok(())
    }
}

/// Single-chain likelihood: each event is conditioned on the event that
/// arrived just before it, regardless of the tree.
#[derive(Debug, Clone, Copy)]
pub struct SingleChainLikelihood<'a>(pub &'a ModelSet);

impl Likelihood for SingleChainLikelihood<'_> {
    fn num_hypotheses(&self) -> usize {
        self.0.num_hypotheses()
    }

    fn log_likelihoods(&self, history: &[Option<usize>], event: &TraceEvent, out: &mut [f64]) -> Result<()> {
        let index = history.len();
        let z = typed(event, index)?;
        check_state(z, self.0.num_states(), index)?;
        let previous = if index == 0 { None } else { Some(history_type(history, index - 1)?) };
        for (o, model) in out.iter_mut().zip(self.0.models()) {
            *o = ln(model.event_probability(previous, z));
        }
        Ok(())
    }
}

/// I.i.d. likelihood from per-hypothesis marginal type frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct IidLikelihood {
    log_marginals: Vec<Vec<f64>>,
}

impl IidLikelihood {
    pub fn new(marginals: &[Vec<f64>]) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidModel("no marginals given".into()));
        }
        let z = marginals[0].len();
        for (m, row) in marginals.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != z || row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidModel(format!("marginal {m} is not a distribution over {z} types")));
            }
        }
        Ok(Self { log_marginals: marginals.iter().map(|row| row.iter().map(|&p| ln(p)).collect()).collect() })
    }

    /// Long-run type frequencies of each hypothesis' kernel.
    pub fn stationary(models: &ModelSet) -> Result<Self> {
        let marginals =
            models.models().iter().map(|m| stationary_distribution(m.alpha())).collect::<Result<Vec<_>>>()?;
        Self::new(&marginals)
    }
}

impl Likelihood for IidLikelihood {
    fn num_hypotheses(&self) -> usize {
        self.log_marginals.len()
    }

    fn log_likelihoods(&self, history: &[Option<usize>], event: &TraceEvent, out: &mut [f64]) -> Result<()> {
        let index = history.len();
        let z = typed(event, index)?;
        check_state(z, self.log_marginals[0].len(), index)?;
        for (o, row) in out.iter_mut().zip(&self.log_marginals) {
            *o = row[z];
        }
        Ok(())
    }
}

/// Log-weights of the hypotheses plus the types observed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    log_weights: Vec<f64>,
    history: Vec<Option<usize>>,
    scratch: Vec<f64>,
}

impl PosteriorState {
    pub fn new(priors: &[f64]) -> Self {
        Self {
            log_weights: priors.iter().map(|&p| ln(p)).collect(),
            history: Vec::new(),
            scratch: vec![0.0; priors.len()],
        }
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Types of the events observed so far.
    pub fn history(&self) -> &[Option<usize>] {
        &self.history
    }

    pub fn observed(&self) -> usize {
        self.history.len()
    }

    pub fn posterior(&self) -> Vec<f64> {
        softmax(&self.log_weights)
    }

    /// Folds one event into the weights. A hypothesis that gives the event
    /// zero probability is excluded for good; if every hypothesis does, the
    /// evidence is degenerate.
    pub fn step<L: Likelihood + ?Sized>(&mut self, event: &TraceEvent, likelihood: &L) -> Result<()> {
        let index = self.history.len();
        if likelihood.num_hypotheses() != self.log_weights.len() {
            return Err(Error::Shape(format!(
                "likelihood covers {} hypotheses, posterior has {}",
                likelihood.num_hypotheses(),
                self.log_weights.len()
            )));
        }
        likelihood.log_likelihoods(&self.history, event, &mut self.scratch)?;
        let mut max = f64::NEG_INFINITY;
        for (w, l) in self.log_weights.iter_mut().zip(&self.scratch) {
            *w += l;
            if w.is_nan() {
                *w = f64::NEG_INFINITY;
            }
            max = max.max(*w);
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence { index });
        }
        self.log_weights.iter_mut().for_each(|w| *w -= max);
        self.history.push(event.edge_type);
        Ok(())
    }
}

/// One step of the union-of-Markov-chains posterior recursion.
pub fn posterior_step(state: &mut PosteriorState, event: &TraceEvent, models: &ModelSet) -> Result<()> {
    state.step(event, &MarkovLikelihood(models))
}

/// Incremental sequential test: feed events until it stops.
#[derive(Debug, Clone)]
pub struct SequentialTest {
    state: PosteriorState,
    rule: StoppingRule,
    trajectory: Vec<Vec<f64>>,
    stopped: Option<(usize, usize)>,
}

impl SequentialTest {
    pub fn new(priors: &[f64], cfg: &SdrConfig) -> Result<Self> {
        cfg.check_hypotheses(priors.len())?;
        Ok(Self {
            state: PosteriorState::new(priors),
            rule: cfg.stopping_rule(),
            trajectory: vec![priors.to_vec()],
            stopped: None,
        })
    }

    /// Observes one event. Returns the decision once the test has stopped;
    /// events after the stop are ignored.
    pub fn observe<L: Likelihood + ?Sized>(&mut self, event: &TraceEvent, likelihood: &L) -> Result<Option<usize>> {
        if let Some((_, d)) = self.stopped {
            return Ok(Some(d));
        }
        self.state.step(event, likelihood)?;
        let posterior = self.state.posterior();
        let crossing = self.rule.crossing(&posterior);
        if crossing.is_some() {
            let decision = argmax(&posterior);
            self.stopped = Some((self.state.observed(), decision));
        }
        self.trajectory.push(posterior);
        Ok(self.stopped.map(|(_, d)| d))
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped.is_some()
    }

    pub fn finish(self) -> SdrOutcome {
        match self.stopped {
            Some((t, decision)) => SdrOutcome { stop: StopTime::Stopped(t), decision, trajectory: self.trajectory },
            None => {
                let decision = argmax(self.trajectory.last().expect("trajectory starts with the prior"));
                SdrOutcome { stop: StopTime::NotStopped(self.state.observed()), decision, trajectory: self.trajectory }
            }
        }
    }
}

/// Runs a sequential test over `events` with the given likelihood.
pub fn run_with<I, L>(events: I, priors: &[f64], cfg: &SdrConfig, likelihood: &L) -> Result<SdrOutcome>
where
    I: IntoIterator,
    I::Item: Borrow<TraceEvent>,
    L: Likelihood + ?Sized,
{
    let mut test = SequentialTest::new(priors, cfg)?;
    for event in events {
        if test.observe(event.borrow(), likelihood)?.is_some() {
            break;
        }
    }
    Ok(test.finish())
}

/// Runs the rule selected in `cfg` over a trace. `NaiveIid` uses the
/// stationary distributions of the kernels as class marginals; pass explicit
/// marginals through [`run_baseline_naive`] instead when they are known.
pub fn run_sdr(trace: &InformationTrace, models: &ModelSet, cfg: &SdrConfig) -> Result<SdrOutcome> {
    match cfg.rule {
        Rule::Markov => run_with(&trace.events, models.priors(), cfg, &MarkovLikelihood(models)),
        Rule::SingleChain => run_baseline_single_chain(trace, models, cfg),
        Rule::NaiveIid => run_with(&trace.events, models.priors(), cfg, &IidLikelihood::stationary(models)?),
    }
}

/// MSPRT that treats the edge types as i.i.d. draws from `marginals[m]`.
pub fn run_baseline_naive(
    trace: &InformationTrace,
    marginals: &[Vec<f64>],
    priors: &[f64],
    cfg: &SdrConfig,
) -> Result<SdrOutcome> {
    let likelihood = IidLikelihood::new(marginals)?;
    if marginals.len() != priors.len() {
        return Err(Error::Shape(format!("{} marginals for {} priors", marginals.len(), priors.len())));
    }
    run_with(&trace.events, priors, cfg, &likelihood)
}

/// MSPRT over the time-ordered sequence viewed as one Markov chain.
pub fn run_baseline_single_chain(trace: &InformationTrace, models: &ModelSet, cfg: &SdrConfig) -> Result<SdrOutcome> {
    run_with(&trace.events, models.priors(), cfg, &SingleChainLikelihood(models))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::HypothesisModel;
    use alloc::string::ToString;

    fn two_step_models() -> ModelSet {
        ModelSet::uniform(vec![
            HypothesisModel::new(vec![0.8, 0.2], vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap(),
            HypothesisModel::new(vec![0.2, 0.8], vec![vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap(),
        ])
        .unwrap()
    }

    fn trace(events: Vec<TraceEvent>) -> InformationTrace {
        InformationTrace { trace_id: "t".to_string(), label: 0, events }
    }

    #[test]
    fn two_step_posterior() {
        let models = two_step_models();
        let mut state = PosteriorState::new(models.priors());
        posterior_step(&mut state, &TraceEvent::typed(Parent::Source, 0), &models).unwrap();
        let p = state.posterior();
        assert!((p[0] - 0.8).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12);
        posterior_step(&mut state, &TraceEvent::typed(Parent::Event(0), 0), &models).unwrap();
        let p = state.posterior();
        assert!((p[0] - 0.72 / 0.82).abs() < 1e-12);
        assert!((p[0] - 0.87805).abs() < 1e-5 && (p[1] - 0.12195).abs() < 1e-5);
    }

    #[test]
    fn identical_models_keep_the_prior() {
        let h = HypothesisModel::new(vec![0.3, 0.7], vec![vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let models = ModelSet::new(vec![h.clone(), h], vec![0.3, 0.7]).unwrap();
        let mut state = PosteriorState::new(models.priors());
        for (i, z) in [1usize, 0, 0, 1].into_iter().enumerate() {
            let parent = if i == 0 { Parent::Source } else { Parent::Event(i - 1) };
            posterior_step(&mut state, &TraceEvent::typed(parent, z), &models).unwrap();
            let p = state.posterior();
            assert!((p[0] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn stops_when_posterior_meets_threshold_exactly() {
        let models = two_step_models();
        let t = trace(vec![TraceEvent::typed(Parent::Source, 0), TraceEvent::typed(Parent::Event(0), 0)]);
        let out = run_sdr(&t, &models, &SdrConfig::uniform(0.25, 2, Rule::Markov).unwrap()).unwrap();
        assert_eq!(out.stop, StopTime::Stopped(1));
        assert_eq!(out.decision, 0);
        let out = run_sdr(&t, &models, &SdrConfig::uniform(0.999, 2, Rule::Markov).unwrap()).unwrap();
        assert_eq!(out.stop, StopTime::Stopped(1));
    }

    #[test]
    fn not_stopped_records_forced_decision() {
        let models = two_step_models();
        let t = trace(vec![TraceEvent::typed(Parent::Source, 0), TraceEvent::typed(Parent::Event(0), 0)]);
        let out = run_sdr(&t, &models, &SdrConfig::uniform(0.01, 2, Rule::Markov).unwrap()).unwrap();
        assert_eq!(out.stop, StopTime::NotStopped(2));
        assert!(out.forced());
        assert_eq!(out.decision, 0);
        assert_eq!(out.trajectory.len(), 3);
        assert_eq!(out.trajectory[0], models.priors());
    }

    #[test]
    fn hard_exclusion_and_degenerate_evidence() {
        let models = ModelSet::uniform(vec![
            HypothesisModel::new(vec![1.0, 0.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            HypothesisModel::new(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        ])
        .unwrap();
        let mut state = PosteriorState::new(models.priors());
        posterior_step(&mut state, &TraceEvent::typed(Parent::Source, 1), &models).unwrap();
        assert_eq!(state.posterior(), vec![0.0, 1.0]);

        let only_first = ModelSet::uniform(vec![
            HypothesisModel::new(vec![1.0, 0.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            HypothesisModel::new(vec![1.0, 0.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        ])
        .unwrap();
        let mut state = PosteriorState::new(only_first.priors());
        let err = posterior_step(&mut state, &TraceEvent::typed(Parent::Source, 1), &only_first).unwrap_err();
        assert_eq!(err, Error::DegenerateEvidence { index: 0 });
    }

    #[test]
    fn rejects_bad_thresholds() {
        assert!(SdrConfig::new(vec![0.1, 1.0], Rule::Markov).is_err());
        assert!(SdrConfig::new(vec![0.0], Rule::Markov).is_err());
        let models = two_step_models();
        let t = trace(vec![TraceEvent::typed(Parent::Source, 0)]);
        let three = SdrConfig::uniform(0.1, 3, Rule::Markov).unwrap();
        assert!(run_sdr(&t, &models, &three).is_err());
    }

    #[test]
    fn naive_single_observation_matches_markov_with_eta_marginals() {
        let models = two_step_models();
        let marginals: Vec<Vec<f64>> = models.models().iter().map(|m| m.eta().to_vec()).collect();
        let t = trace(vec![TraceEvent::typed(Parent::Source, 1)]);
        let cfg = SdrConfig::uniform(0.1, 2, Rule::Markov).unwrap();
        let a = run_sdr(&t, &models, &cfg).unwrap();
        let b = run_baseline_naive(&t, &marginals, models.priors(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn naive_with_identical_marginals_never_stops() {
        let t = trace(
            (0..20)
                .map(|i| TraceEvent::typed(if i == 0 { Parent::Source } else { Parent::Event(i - 1) }, i % 2))
                .collect(),
        );
        let cfg = SdrConfig::uniform(0.5, 2, Rule::NaiveIid).unwrap();
        let out = run_baseline_naive(&t, &[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.5, 0.5], &cfg).unwrap();
        assert_eq!(out.stop, StopTime::NotStopped(20));
        assert!(out.trajectory.iter().all(|p| (p[0] - 0.5).abs() < 1e-15));
    }

    #[test]
    fn single_chain_differs_when_time_order_is_not_the_tree() {
        // Two paths interleaved: 0 -> 2 and 1 -> 3.
        let models = two_step_models();
        let t = trace(vec![
            TraceEvent::typed(Parent::Source, 0),
            TraceEvent::typed(Parent::Source, 1),
            TraceEvent::typed(Parent::Event(0), 0),
            TraceEvent::typed(Parent::Event(1), 1),
        ]);
        let cfg = SdrConfig::uniform(0.001, 2, Rule::Markov).unwrap();
        let tree = run_sdr(&t, &models, &cfg).unwrap();
        let chain = run_baseline_single_chain(&t, &models, &cfg).unwrap();
        assert_eq!(tree.trajectory[..2], chain.trajectory[..2]);
        assert!((tree.trajectory[3][0] - chain.trajectory[3][0]).abs() > 1e-3);
    }

    #[test]
    fn decision_at_deadline() {
        let out = SdrOutcome {
            stop: StopTime::Stopped(3),
            decision: 1,
            trajectory: vec![vec![0.5, 0.5], vec![0.6, 0.4], vec![0.55, 0.45], vec![0.1, 0.9]],
        };
        assert_eq!(out.decision_at(1), 0);
        assert_eq!(out.decision_at(3), 1);
        assert_eq!(out.decision_at(10), 1);
    }
}
