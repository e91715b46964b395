//! Monte Carlo experiments: error and risk estimates, accuracy curves, and
//! empirical checks of the stopping-time and error-probability bounds.
//!
//! Trial `i` under hypothesis `k` always uses seed
//! `base_seed + k * trials_per_hypothesis + i`, so results do not depend on
//! the number of worker threads.

use cascade_core::gnn::run_gnn_with;
use cascade_core::metrics::{
    gnn_class_bound, gnn_total_bound, joint_stop_times, least_squares_slope, mean_stop_times, msprt_class_bound,
    msprt_total_bound, survival_function, total_risk, ErrorMatrix, RunRecord,
};
use cascade_core::msprt::{run_with, IidLikelihood, Likelihood, MarkovLikelihood, SingleChainLikelihood, StoppingRule};
use cascade_core::{
    run_gnn_sdr, run_sdr, tail_constants, Error, FeatureModel, FrontierPolicy, InformationTrace, ModelSet, NodeScorer,
    PosteriorState, Result, Rule, SdrConfig, SdrOutcome, TraceSampler,
};
use rayon::prelude::*;
use serde::Serialize;

/// Slack multiplier on binomial standard errors in every bound check.
pub const SIGMA_SLACK: f64 = 3.0;
/// Tail points need at least this many surviving runs to be checked.
pub const MIN_SURVIVORS: usize = 50;
/// Allowed excess of the fitted log-survival slope over `-C2`.
pub const SLOPE_SLACK: f64 = 0.05;
pub const ASYMPTOTIC_TOLERANCE: f64 = 0.15;
pub const AEP_TOLERANCE: f64 = 0.02;

pub fn policy_name(p: FrontierPolicy) -> String {
    match p {
        FrontierPolicy::UniformFrontier => "uniform".into(),
        FrontierPolicy::SinglePath => "single-path".into(),
        FrontierPolicy::SpawnProbability(q) => format!("spawn:{q}"),
    }
}

pub fn parse_policy(s: &str) -> Result<FrontierPolicy> {
    let p = match s {
        "uniform" => FrontierPolicy::UniformFrontier,
        "single-path" => FrontierPolicy::SinglePath,
        _ => match s.strip_prefix("spawn:").map(str::parse::<f64>) {
            Some(Ok(q)) => FrontierPolicy::SpawnProbability(q),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown policy {s:?}; expected uniform, single-path or spawn:<p>"
                )));
            }
        },
    };
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub trials_per_hypothesis: usize,
    pub horizon: usize,
    pub base_seed: u64,
    pub policy: FrontierPolicy,
    /// Per-class sampling cost; empty means zero.
    pub costs: Vec<f64>,
    /// Needed when the decider scores edge features.
    pub features: Option<FeatureModel>,
}

impl MonteCarloConfig {
    pub fn new(trials_per_hypothesis: usize, horizon: usize, base_seed: u64) -> Self {
        Self {
            trials_per_hypothesis,
            horizon,
            base_seed,
            policy: FrontierPolicy::UniformFrontier,
            costs: Vec::new(),
            features: None,
        }
    }

    pub fn validate(&self, num_hypotheses: usize) -> Result<()> {
        if self.trials_per_hypothesis == 0 {
            return Err(Error::InvalidConfig("trials must be ≥ 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be ≥ 1".into()));
        }
        if !self.costs.is_empty() && self.costs.len() != num_hypotheses {
            return Err(Error::InvalidConfig(format!("{} costs for {num_hypotheses} hypotheses", self.costs.len())));
        }
        if self.costs.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::InvalidConfig("costs must be ≥ 0".into()));
        }
        self.policy.validate()
    }

    pub fn seed(&self, k: usize, i: usize) -> u64 {
        self.base_seed.wrapping_add((k as u64).wrapping_mul(self.trials_per_hypothesis as u64)).wrapping_add(i as u64)
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            trials_per_hypothesis: self.trials_per_hypothesis,
            horizon: self.horizon,
            base_seed: self.base_seed,
            policy: policy_name(self.policy),
            costs: self.costs.clone(),
            features: self.features.as_ref().map(|f| (f.dim, f.std)),
        }
    }

    fn sampler<'a>(&'a self, models: &'a ModelSet, k: usize, i: usize) -> Result<TraceSampler<'a>> {
        let s = TraceSampler::new(models.model(k), self.policy, self.seed(k, i))?;
        match &self.features {
            Some(f) => s.with_features(f),
            None => Ok(s),
        }
    }
}

/// The settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub trials_per_hypothesis: usize,
    pub horizon: usize,
    pub base_seed: u64,
    pub policy: String,
    pub costs: Vec<f64>,
    /// `(dim, std)` of the feature model, when features are drawn.
    pub features: Option<(usize, f64)>,
}

/// Which sequential rule makes the decisions.
#[derive(Debug, Clone, Copy)]
pub enum Decider<'a> {
    Msprt(Rule),
    Gnn(&'a NodeScorer),
}

impl Decider<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Decider::Msprt(Rule::Markov) => "msprt",
            Decider::Msprt(Rule::NaiveIid) => "naive",
            Decider::Msprt(Rule::SingleChain) => "single-chain",
            Decider::Gnn(_) => "gnn",
        }
    }

    /// Runs the rule on a stored trace. MSPRT rules need `models`.
    pub fn run(&self, trace: &InformationTrace, models: Option<&ModelSet>, cfg: &SdrConfig) -> Result<SdrOutcome> {
        match (self, models) {
            (Decider::Msprt(_), Some(models)) => run_sdr(trace, models, cfg),
            (Decider::Msprt(_), None) => Err(Error::InvalidConfig(format!("rule {} needs a model", self.name()))),
            (Decider::Gnn(s), _) => run_gnn_sdr(trace, *s, cfg),
        }
    }
}

/// One Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub label: usize,
    pub trial: usize,
    pub seed: u64,
    pub stop_time: usize,
    pub decision: usize,
    pub forced: bool,
}

impl TrialRecord {
    fn run(&self) -> RunRecord {
        RunRecord { label: self.label, decision: self.decision, stop_time: self.stop_time, forced: self.forced }
    }
}

fn check_thresholds(models: &ModelSet, sdr: &SdrConfig) -> Result<()> {
    sdr.validate()?;
    if sdr.thresholds.len() != models.num_hypotheses() {
        return Err(Error::InvalidConfig(format!(
            "{} thresholds for {} hypotheses",
            sdr.thresholds.len(),
            models.num_hypotheses()
        )));
    }
    Ok(())
}

/// Runs `trials_per_hypothesis` trials under each hypothesis in `labels`.
pub fn run_trials(
    models: &ModelSet,
    mc: &MonteCarloConfig,
    sdr: &SdrConfig,
    decider: Decider<'_>,
    labels: &[usize],
) -> Result<Vec<TrialRecord>> {
    mc.validate(models.num_hypotheses())?;
    check_thresholds(models, sdr)?;
    let iid = match decider {
        Decider::Msprt(Rule::NaiveIid) => Some(IidLikelihood::stationary(models)?),
        _ => None,
    };
    let n = mc.trials_per_hypothesis;
    (0..labels.len() * n)
        .into_par_iter()
        .map(|idx| {
            let (k, i) = (labels[idx / n], idx % n);
            let events = mc.sampler(models, k, i)?.take(mc.horizon);
            let out = match decider {
                Decider::Msprt(Rule::Markov) => run_with(events, models.priors(), sdr, &MarkovLikelihood(models))?,
                Decider::Msprt(Rule::SingleChain) => {
                    run_with(events, models.priors(), sdr, &SingleChainLikelihood(models))?
                }
                Decider::Msprt(Rule::NaiveIid) => {
                    run_with(events, models.priors(), sdr, iid.as_ref().expect("built above"))?
                }
                Decider::Gnn(scorer) => run_gnn_with(events, scorer, sdr)?,
            };
            Ok(TrialRecord {
                label: k,
                trial: i,
                seed: mc.seed(k, i),
                stop_time: out.stop_time(),
                decision: out.decision,
                forced: out.forced(),
            })
        })
        .collect()
}

/// Empirical statistic, bound and slack for one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub sigma: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(name: String, value: f64, bound: f64, sigma: f64) -> Self {
        let pass = value <= bound + SIGMA_SLACK * sigma;
        Self { name, value, bound, sigma, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub config: ConfigEcho,
    pub rule: String,
    pub thresholds: Vec<f64>,
    pub priors: Vec<f64>,
    /// `error_rates[j][k]`: fraction of `H_j` trials that decided `k`.
    pub error_rates: Vec<Vec<f64>>,
    /// Prior-weighted wrong acceptances of each class.
    pub class_errors: Vec<f64>,
    pub total_error: f64,
    pub mean_stop_times: Vec<f64>,
    /// `E[T 1{H_j}]`.
    pub joint_stop_times: Vec<f64>,
    pub risk: f64,
    pub not_stopped: usize,
    /// Prior-weighted threshold sum, reported for the MSPRT.
    pub threshold_bound: Option<f64>,
    pub xi: Option<f64>,
    pub checks: Vec<BoundCheck>,
}

impl RiskReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn build_report(
    models: &ModelSet,
    mc: &MonteCarloConfig,
    sdr: &SdrConfig,
    decider: Decider<'_>,
    xi: Option<f64>,
    trials: &[TrialRecord],
) -> Result<RiskReport> {
    let m = models.num_hypotheses();
    let priors = models.priors();
    let runs: Vec<RunRecord> = trials.iter().map(TrialRecord::run).collect();
    let errors = ErrorMatrix::from_runs(&runs, m)?;
    let mean_stop = mean_stop_times(&runs, m);
    let joint = joint_stop_times(priors, &mean_stop);
    let costs = if mc.costs.is_empty() { vec![0.0; m] } else { mc.costs.clone() };
    let total_error = errors.total_error(priors);
    let a = &sdr.thresholds;

    let mut checks = Vec::new();
    let mut threshold_bound = None;
    match (decider, xi) {
        (Decider::Msprt(Rule::Markov), _) => {
            for k in 0..m {
                checks.push(BoundCheck::new(
                    format!("class {k}"),
                    errors.class_error(k, priors),
                    msprt_class_bound(priors[k], a[k]),
                    errors.class_error_sigma(k, priors),
                ));
            }
            let sum: f64 = (0..m).map(|k| priors[k] * a[k]).sum();
            let nu = a.iter().copied().fold(0.0, f64::max);
            threshold_bound = Some(sum);
            checks.push(BoundCheck::new(
                "total".into(),
                total_error,
                sum.min(msprt_total_bound(nu)),
                errors.total_error_sigma(priors),
            ));
        }
        (Decider::Gnn(_), Some(xi)) => {
            for (k, &ak) in a.iter().enumerate() {
                checks.push(BoundCheck::new(
                    format!("class {k}"),
                    errors.unweighted_class_error(k),
                    gnn_class_bound(ak, xi),
                    errors.unweighted_class_error_sigma(k),
                ));
            }
            checks.push(BoundCheck::new(
                "total".into(),
                total_error,
                gnn_total_bound(a, xi),
                errors.total_error_sigma(priors),
            ));
        }
        _ => {}
    }

    Ok(RiskReport {
        config: mc.echo(),
        rule: decider.name().into(),
        thresholds: a.clone(),
        priors: priors.to_vec(),
        class_errors: errors.class_errors(priors),
        error_rates: errors.rates,
        total_error,
        risk: total_risk(total_error, &costs, &joint),
        mean_stop_times: mean_stop,
        joint_stop_times: joint,
        not_stopped: trials.iter().filter(|t| t.forced).count(),
        threshold_bound,
        xi,
        checks,
    })
}

/// Error probabilities, stopping times and risk over trials under every
/// hypothesis. Bound checks are attached for the MSPRT, and for the GNN rule
/// when `xi` is known.
pub fn run_monte_carlo(
    models: &ModelSet,
    mc: &MonteCarloConfig,
    sdr: &SdrConfig,
    decider: Decider<'_>,
    xi: Option<f64>,
) -> Result<RiskReport> {
    let labels: Vec<usize> = (0..models.num_hypotheses()).collect();
    let trials = run_trials(models, mc, sdr, decider, &labels)?;
    build_report(models, mc, sdr, decider, xi, &trials)
}

/// [`run_monte_carlo`] that insists on a bound check being available.
pub fn verify_error_bounds(
    models: &ModelSet,
    mc: &MonteCarloConfig,
    sdr: &SdrConfig,
    decider: Decider<'_>,
    xi: Option<f64>,
) -> Result<RiskReport> {
    match (decider, xi) {
        (Decider::Msprt(Rule::Markov), _) | (Decider::Gnn(_), Some(_)) => {}
        (Decider::Gnn(_), None) => return Err(Error::InvalidConfig("GNN bound check needs xi".into())),
        _ => return Err(Error::InvalidConfig(format!("no error bound for rule {}", decider.name()))),
    }
    run_monte_carlo(models, mc, sdr, decider, xi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyCurve {
    pub deadlines: Vec<usize>,
    pub accuracies: Vec<f64>,
    pub auc: f64,
}

/// Accuracy when a decision is forced at each deadline, and its mean.
pub fn accuracy_curve(outcomes: &[(usize, SdrOutcome)], deadlines: &[usize]) -> Result<AccuracyCurve> {
    if deadlines.is_empty() || deadlines.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("deadlines must be non-empty and strictly increasing".into()));
    }
    if outcomes.is_empty() {
        return Err(Error::InsufficientData("no outcomes".into()));
    }
    let accuracies: Vec<f64> = deadlines
        .iter()
        .map(|&d| {
            let hits = outcomes.iter().filter(|(label, o)| o.decision_at(d) == *label).count();
            hits as f64 / outcomes.len() as f64
        })
        .collect();
    Ok(AccuracyCurve { deadlines: deadlines.to_vec(), auc: cascade_core::metrics::auc(&accuracies), accuracies })
}

/// Runs `decider` on stored traces in parallel, keeping input order.
pub fn run_on_traces(
    traces: &[InformationTrace],
    models: Option<&ModelSet>,
    sdr: &SdrConfig,
    decider: Decider<'_>,
) -> Result<Vec<SdrOutcome>> {
    traces.par_iter().map(|t| decider.run(t, models, sdr)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub t: usize,
    pub survival: f64,
    pub survivors: usize,
    pub bound: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub config: ConfigEcho,
    pub k: usize,
    pub thresholds: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub points: Vec<TailPoint>,
    pub violations: usize,
    /// Least-squares slope of `ln S(t)` over the checked points.
    pub slope: Option<f64>,
    pub slope_limit: f64,
    pub not_stopped: usize,
    pub pass: bool,
}

/// Empirical survival of the stopping time under `H_k` against
/// `C1 exp(-C2 t)`.
pub fn verify_tail(models: &ModelSet, k: usize, mc: &MonteCarloConfig, a: &[f64]) -> Result<TailReport> {
    if k >= models.num_hypotheses() {
        return Err(Error::InvalidConfig(format!("hypothesis {k} out of range")));
    }
    let constants = tail_constants(models, k, a)?;
    let sdr = SdrConfig::new(a.to_vec(), Rule::Markov)?;
    let trials = run_trials(models, mc, &sdr, Decider::Msprt(Rule::Markov), &[k])?;
    // A run that never stopped is known only to exceed the horizon.
    let times: Vec<usize> = trials.iter().map(|t| if t.forced { mc.horizon + 1 } else { t.stop_time }).collect();
    let n = times.len() as f64;

    let mut points = Vec::new();
    for p in survival_function(&times) {
        if p.survivors < MIN_SURVIVORS {
            break;
        }
        let bound = constants.c1 * (-constants.c2 * p.t as f64).exp();
        let sigma = (p.survival * (1.0 - p.survival) / n).sqrt();
        let violation = p.survival > bound + SIGMA_SLACK * sigma;
        points.push(TailPoint { t: p.t, survival: p.survival, survivors: p.survivors, bound, violation });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.t >= 1).map(|p| (p.t as f64, p.survival.ln())).unzip();
    let slope = least_squares_slope(&xs, &ys).ok();
    let slope_limit = -constants.c2 + SLOPE_SLACK;
    let violations = points.iter().filter(|p| p.violation).count();
    let pass = violations == 0 && slope.is_some_and(|s| s <= slope_limit);
    Ok(TailReport {
        config: mc.echo(),
        k,
        thresholds: a.to_vec(),
        c1: constants.c1,
        c2: constants.c2,
        points,
        violations,
        slope,
        slope_limit,
        not_stopped: trials.iter().filter(|t| t.forced).count(),
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub config: ConfigEcho,
    pub k: usize,
    pub grid: Vec<f64>,
    pub mean_stop: Vec<f64>,
    /// `E[T] / (-ln a)` for each grid value.
    pub ratios: Vec<f64>,
    /// `1 / min_j KL(k, j)`.
    pub limit: f64,
    /// `|ratio - limit|` for each grid value.
    pub distances: Vec<f64>,
    pub not_stopped: Vec<usize>,
    /// Distances strictly decrease along the grid.
    pub monotone: bool,
    /// The last grid point is strictly closer to the limit than the first.
    pub closer_than_first: bool,
    pub final_relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Mean stopping time under `H_k` as the common threshold `a` shrinks.
///
/// Each trial runs one posterior sequence and records the first crossing of
/// every grid level, so all grid points share the same random traces.
pub fn verify_asymptotic(
    models: &ModelSet,
    k: usize,
    a_grid: &[f64],
    mc: &MonteCarloConfig,
) -> Result<AsymptoticReport> {
    let m = models.num_hypotheses();
    if k >= m || m < 2 {
        return Err(Error::InvalidConfig(format!("hypothesis {k} out of range for {m} hypotheses")));
    }
    if a_grid.is_empty() || a_grid.iter().any(|a| !(*a > 0.0 && *a < 1.0)) || a_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("a grid must be non-empty, in (0, 1) and strictly decreasing".into()));
    }
    mc.validate(m)?;
    for j in (0..m).filter(|&j| j != k) {
        for z in 0..models.num_states() {
            if !models.chi_square(k, j, z).is_finite() {
                return Err(Error::Undefined(format!(
                    "chi-square between hypotheses {k} and {j} is infinite at state {z}"
                )));
            }
        }
    }
    let min_kl = (0..m)
        .filter(|&j| j != k)
        .map(|j| models.stationary_kl(k, j))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !(min_kl > 0.0) {
        return Err(Error::Undefined(format!("minimum stationary KL of hypothesis {k} is zero; limit undefined")));
    }
    let limit = 1.0 / min_kl;
    let rules: Vec<StoppingRule> = a_grid.iter().map(|&a| StoppingRule::new(&vec![a; m])).collect();
    let likelihood = MarkovLikelihood(models);

    let firsts: Vec<Vec<Option<usize>>> = (0..mc.trials_per_hypothesis)
        .into_par_iter()
        .map(|i| {
            let mut state = PosteriorState::new(models.priors());
            let mut first = vec![None; a_grid.len()];
            for event in mc.sampler(models, k, i)?.take(mc.horizon) {
                state.step(&event, &likelihood)?;
                let post = state.posterior();
                for (f, rule) in first.iter_mut().zip(&rules) {
                    if f.is_none() && rule.crossing(&post).is_some() {
                        *f = Some(state.observed());
                    }
                }
                if first.last().is_some_and(Option::is_some) {
                    break;
                }
            }
            Ok(first)
        })
        .collect::<Result<_>>()?;

    let n = firsts.len() as f64;
    let mut mean_stop = Vec::new();
    let mut not_stopped = Vec::new();
    for g in 0..a_grid.len() {
        let sum: usize = firsts.iter().map(|f| f[g].unwrap_or(mc.horizon)).sum();
        mean_stop.push(sum as f64 / n);
        not_stopped.push(firsts.iter().filter(|f| f[g].is_none()).count());
    }
    let ratios: Vec<f64> = mean_stop.iter().zip(a_grid).map(|(t, a)| t / -a.ln()).collect();
    let distances: Vec<f64> = ratios.iter().map(|r| (r - limit).abs()).collect();
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    let closer_than_first = distances.last() < distances.first();
    let final_relative_error = distances.last().expect("non-empty grid") / limit;
    Ok(AsymptoticReport {
        config: mc.echo(),
        k,
        grid: a_grid.to_vec(),
        mean_stop,
        ratios,
        limit,
        distances,
        not_stopped,
        monotone,
        closer_than_first,
        final_relative_error,
        tolerance: ASYMPTOTIC_TOLERANCE,
        pass: monotone && final_relative_error <= ASYMPTOTIC_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AepReport {
    pub k: usize,
    pub j: usize,
    pub length: usize,
    pub policy: String,
    pub seed: u64,
    /// `(l, (1/l) log(f_k / f_j))` at evenly spaced checkpoints.
    pub trajectory: Vec<(usize, f64)>,
    pub value: f64,
    /// Stationary conditional KL of `k` from `j`.
    pub target: f64,
    /// Relative error against the target, or the absolute value when the
    /// target is zero.
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Normalized log-likelihood ratio along one long trace drawn from `H_k`.
pub fn verify_aep(
    models: &ModelSet,
    k: usize,
    j: usize,
    length: usize,
    policy: FrontierPolicy,
    seed: u64,
) -> Result<AepReport> {
    let m = models.num_hypotheses();
    if k >= m || j >= m {
        return Err(Error::InvalidConfig(format!("hypotheses ({k}, {j}) out of range for {m}")));
    }
    if length == 0 {
        return Err(Error::InvalidConfig("length must be ≥ 1".into()));
    }
    let target = if k == j { 0.0 } else { models.stationary_kl(k, j)? };
    let likelihood = MarkovLikelihood(models);
    let every = (length / 100).max(1);
    let mut history = Vec::with_capacity(length);
    let mut out = vec![0.0; m];
    let mut llr = 0.0;
    let mut trajectory = Vec::new();
    for (i, event) in TraceSampler::new(models.model(k), policy, seed)?.take(length).enumerate() {
        likelihood.log_likelihoods(&history, &event, &mut out)?;
        llr += out[k] - out[j];
        history.push(event.edge_type);
        let l = i + 1;
        if l % every == 0 || l == length {
            trajectory.push((l, llr / l as f64));
        }
    }
    let value = llr / length as f64;
    let relative_error = if target == 0.0 { value.abs() } else { (value - target).abs() / target };
    Ok(AepReport {
        k,
        j,
        length,
        policy: policy_name(policy),
        seed,
        trajectory,
        value,
        target,
        relative_error,
        tolerance: AEP_TOLERANCE,
        pass: relative_error <= AEP_TOLERANCE,
    })
}
