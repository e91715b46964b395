//! The `cascade` command line: generate, fit, run, sweep and verify.
//!
//! Every command reads an optional JSON config, applies flag overrides and
//! writes its outputs plus a `manifest.json` under `--out`. Outputs are a
//! pure function of the resolved config, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use cascade_core::fit::{ClassifierSpec, FitSpec, PriorMode};
use cascade_core::gnn::{estimate_xi, XiConfig};
use cascade_core::{
    fit_offline, sample_trace_with, FeatureModel, FrontierPolicy, InformationTrace, ModelSet, NodeScorer, Rule, Scorer,
    SdrConfig,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evalbench::{self, accuracy_curve, parse_policy, policy_name, run_on_traces, Decider, MonteCarloConfig};
use crate::fixtures;
use crate::io::{self, IoError, OutcomeRow, TrajectoryRecord};

pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_HORIZON: usize = 100;
pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_TRACES_PER_CLASS: usize = 100;
pub const DEFAULT_AEP_LENGTH: usize = 20_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    TheoremFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::TheoremFailed(_) => 3,
        }
    }
}

impl From<cascade_core::Error> for CliError {
    fn from(e: cascade_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

type CliResult<T> = Result<T, CliError>;

/// Per-type Gaussian features attached to generated events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub dim: usize,
    pub separation: f64,
    pub std: f64,
}

/// Everything a command may read. Flags override fields of the same name;
/// the fields a command actually uses, defaults included, are written back
/// to the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces_per_class: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priors: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadlines: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub competitor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    fn seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| invalid("seed is required (set --seed or \"seed\" in the config)"))
    }

    fn horizon(&mut self) -> CliResult<usize> {
        let h = *self.horizon.get_or_insert(DEFAULT_HORIZON);
        if h == 0 {
            return Err(invalid("horizon must be ≥ 1"));
        }
        Ok(h)
    }

    fn policy(&mut self) -> CliResult<FrontierPolicy> {
        let p = self.policy.get_or_insert_with(|| policy_name(FrontierPolicy::UniformFrontier));
        Ok(parse_policy(p)?)
    }

    /// The single model source, or `None` when neither is given.
    fn model_set(&self) -> CliResult<Option<ModelSet>> {
        match (&self.model, &self.fixture) {
            (Some(_), Some(_)) => Err(invalid("give either a model file or a fixture, not both")),
            (Some(path), None) => Ok(Some(io::read_model(path)?)),
            (None, Some(name)) => fixtures::by_name(name)
                .map(Some)
                .ok_or_else(|| invalid(format!("unknown fixture {name:?}; available: {}", fixtures::NAMES.join(", ")))),
            (None, None) => Ok(None),
        }
    }

    fn require_models(&self) -> CliResult<ModelSet> {
        self.model_set()?.ok_or_else(|| invalid("a model is required (--model FILE or --fixture NAME)"))
    }

    fn rule(&mut self) -> CliResult<Option<Rule>> {
        match self.rule.get_or_insert_with(|| "msprt".into()).as_str() {
            "msprt" => Ok(Some(Rule::Markov)),
            "naive" => Ok(Some(Rule::NaiveIid)),
            "single-chain" => Ok(Some(Rule::SingleChain)),
            "gnn" => Ok(None),
            other => Err(invalid(format!("unknown rule {other:?}; expected msprt, naive, single-chain or gnn"))),
        }
    }

    fn scorer(&mut self, models: Option<&ModelSet>) -> CliResult<NodeScorer> {
        let spec = self.scorer.get_or_insert_with(|| "oracle".into()).clone();
        match spec.split_once(':') {
            None if spec == "oracle" => {
                let models = models.ok_or_else(|| invalid("the oracle scorer needs a model"))?;
                Ok(NodeScorer::Oracle(models.clone()))
            }
            Some(("tabular", path)) => Ok(NodeScorer::Tabular(io::read_tabular(Path::new(path))?)),
            Some(("gin", path)) => Ok(NodeScorer::Gin(io::read_gin(Path::new(path))?)),
            _ => Err(invalid(format!("unknown scorer {spec:?}; expected oracle, tabular:FILE or gin:FILE"))),
        }
    }

    fn thresholds(&mut self, m: usize) -> CliResult<Vec<f64>> {
        let a = self.thresholds.get_or_insert_with(|| vec![DEFAULT_THRESHOLD; m]);
        if a.len() == 1 && m > 1 {
            *a = vec![a[0]; m];
        }
        if a.len() != m {
            return Err(invalid(format!("thresholds: {} values for {m} hypotheses", a.len())));
        }
        Ok(a.clone())
    }

    fn feature_model(&self, z_count: usize) -> CliResult<Option<FeatureModel>> {
        self.features
            .as_ref()
            .map(|f| FeatureModel::separated(z_count, f.dim, f.separation, f.std).map_err(CliError::from))
            .transpose()
    }

    fn monte_carlo(&mut self, m: usize) -> CliResult<MonteCarloConfig> {
        let mut mc = MonteCarloConfig::new(*self.trials.get_or_insert(DEFAULT_TRIALS), self.horizon()?, self.seed()?);
        mc.policy = self.policy()?;
        mc.costs = self.costs.clone().unwrap_or_default();
        mc.validate(m)?;
        Ok(mc)
    }
}

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Sequential classification of information cascades")]
pub struct Cli {
    /// Cap on worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample labeled traces from a model.
    Generate(GenerateArgs),
    /// Estimate a model from labeled traces.
    Fit(FitArgs),
    /// Run a sequential rule on every trace and write per-trace outcomes.
    Run(RunArgs),
    /// Accuracy over a grid of thresholds or decision deadlines.
    Sweep(SweepArgs),
    /// Monte Carlo check of a theoretical guarantee.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Bundled model: ab or three.
    #[arg(long)]
    pub fixture: Option<String>,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    /// msprt, naive, single-chain or gnn.
    #[arg(long)]
    pub rule: Option<String>,
    /// GNN scorer: oracle, tabular:FILE or gin:FILE.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Thresholds a, one per hypothesis or a single shared value.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub traces_per_class: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// uniform, single-path or spawn:<p>.
    #[arg(long)]
    pub policy: Option<String>,
    /// Attach Gaussian features of this dimension per node.
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    pub feature_separation: f64,
    #[arg(long, default_value_t = 0.5)]
    pub feature_std: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Training traces (JSON Lines).
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// identity, kmeans or pairing.
    #[arg(long)]
    pub classifier: Option<String>,
    /// Number of edge types.
    #[arg(long)]
    pub z_count: Option<usize>,
    /// Dirichlet pseudo-count; defaults to the number of edge types.
    #[arg(long)]
    pub s: Option<f64>,
    /// uniform or empirical.
    #[arg(long)]
    pub priors: Option<String>,
    /// Scorer for the pairing classifier.
    #[arg(long)]
    pub scorer: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Also write every score trajectory.
    #[arg(long)]
    pub trajectories: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rule: RuleArgs,
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Shared thresholds to sweep.
    #[arg(long, value_delimiter = ',')]
    pub a_grid: Option<Vec<f64>>,
    /// Decision deadlines for the accuracy curve.
    #[arg(long, value_delimiter = ',')]
    pub deadlines: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// error-bounds, tail, asymptotic, aep or xi.
    #[arg(long)]
    pub theorem: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub policy: Option<String>,
    /// Sampling cost per hypothesis for the risk.
    #[arg(long, value_delimiter = ',')]
    pub costs: Option<Vec<f64>>,
    /// True hypothesis for tail, asymptotic and aep checks.
    #[arg(long)]
    pub hypothesis: Option<usize>,
    /// Competing hypothesis for the aep check.
    #[arg(long)]
    pub competitor: Option<usize>,
    /// Trace length for the aep check, or prefix length for xi.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub a_grid: Option<Vec<f64>>,
    /// Known xi for the GNN error bounds; estimated when absent.
    #[arg(long)]
    pub xi: Option<f64>,
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

fn base_config(common: &CommonArgs, model: &ModelArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    set(&mut cfg.seed, &common.seed);
    if model.model.is_some() || model.fixture.is_some() {
        cfg.model.clone_from(&model.model);
        cfg.fixture.clone_from(&model.fixture);
    }
    Ok(cfg)
}

fn apply_rule(cfg: &mut ExperimentConfig, r: &RuleArgs) {
    set(&mut cfg.rule, &r.rule);
    set(&mut cfg.scorer, &r.scorer);
    set(&mut cfg.thresholds, &r.thresholds);
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: String,
    config: &'a ExperimentConfig,
    outputs: Vec<OutputEntry>,
}

fn write_manifest(out: &Path, command: &str, cfg: &ExperimentConfig, files: &[&str]) -> CliResult<()> {
    let config_bytes = serde_json::to_vec(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let outputs = files
        .iter()
        .map(|f| {
            let bytes = fs::read(out.join(f)).map_err(|e| CliError::Io(format!("{f}: {e}")))?;
            Ok(OutputEntry { file: f.to_string(), sha256: sha256_hex(&bytes) })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(&config_bytes),
        config: cfg,
        outputs,
    };
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn prepare_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn load_traces(cfg: &ExperimentConfig) -> CliResult<Vec<InformationTrace>> {
    let path = cfg.traces.as_ref().ok_or_else(|| invalid("--traces FILE is required"))?;
    let traces = io::read_traces(path)?;
    if traces.is_empty() {
        return Err(invalid(format!("{}: no traces", path.display())));
    }
    Ok(traces)
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one parsed command and returns a one-line summary.
pub fn execute(cli: Cli) -> CliResult<String> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be ≥ 1"));
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<String> {
    let mut cfg = base_config(&args.common, &args.model)?;
    set(&mut cfg.traces_per_class, &args.traces_per_class);
    set(&mut cfg.horizon, &args.horizon);
    set(&mut cfg.policy, &args.policy);
    if let Some(dim) = args.feature_dim {
        cfg.features = Some(FeatureSpec { dim, separation: args.feature_separation, std: args.feature_std });
    }
    let horizon = cfg.horizon()?;
    let models = cfg.require_models()?;
    let seed = cfg.seed()?;
    let policy = cfg.policy()?;
    let per_class = *cfg.traces_per_class.get_or_insert(DEFAULT_TRACES_PER_CLASS);
    if per_class == 0 {
        return Err(invalid("traces_per_class must be ≥ 1"));
    }
    let features = cfg.feature_model(models.num_states())?;

    let mut traces = Vec::with_capacity(per_class * models.num_hypotheses());
    for k in 0..models.num_hypotheses() {
        for i in 0..per_class {
            let s = seed.wrapping_add((k * per_class + i) as u64);
            traces.push(sample_trace_with(models.model(k), features.as_ref(), k, horizon, policy, s)?);
        }
    }
    prepare_out(&args.common.out)?;
    io::write_traces(&args.common.out.join("traces.jsonl"), &traces)?;
    io::write_traces_csv(&args.common.out.join("traces.csv"), &traces)?;
    write_manifest(&args.common.out, "generate", &cfg, &["traces.jsonl", "traces.csv"])?;
    Ok(format!("wrote {} traces to {}", traces.len(), args.common.out.display()))
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<String> {
    let mut cfg = base_config(&args.common, &args.model)?;
    set(&mut cfg.traces, &args.traces);
    set(&mut cfg.classifier, &args.classifier);
    set(&mut cfg.z_count, &args.z_count);
    set(&mut cfg.s, &args.s);
    set(&mut cfg.priors, &args.priors);
    set(&mut cfg.scorer, &args.scorer);
    let traces = load_traces(&cfg)?;
    let num_classes = traces.iter().map(|t| t.label).max().expect("non-empty") + 1;

    let classifier = match cfg.classifier.get_or_insert_with(|| "identity".into()).as_str() {
        "identity" => ClassifierSpec::Identity,
        "kmeans" => ClassifierSpec::KMeans { seed: cfg.seed()? },
        "pairing" => {
            let models = cfg.model_set()?;
            ClassifierSpec::Pairing(cfg.scorer(models.as_ref())?)
        }
        other => return Err(invalid(format!("unknown classifier {other:?}; expected identity, kmeans or pairing"))),
    };
    let z_count = match (&classifier, cfg.z_count) {
        (_, Some(z)) => z,
        (ClassifierSpec::Identity, None) => {
            traces.iter().flat_map(|t| &t.events).filter_map(|e| e.edge_type).max().map_or(0, |z| z + 1)
        }
        (ClassifierSpec::KMeans { .. }, None) => 2 * num_classes,
        (ClassifierSpec::Pairing(s), None) => s.num_classes() * (s.num_classes() - 1),
    };
    if z_count == 0 {
        return Err(invalid("z_count must be ≥ 1"));
    }
    cfg.z_count = Some(z_count);
    let mut spec = FitSpec::new(num_classes, z_count);
    spec.s = *cfg.s.get_or_insert(z_count as f64);
    spec.priors = match cfg.priors.get_or_insert_with(|| "uniform".into()).as_str() {
        "uniform" => PriorMode::Uniform,
        "empirical" => PriorMode::Empirical,
        other => return Err(invalid(format!("unknown priors {other:?}; expected uniform or empirical"))),
    };
    spec.classifier = classifier;
    let fit = fit_offline(&traces, &spec)?;
    let models = fit.model_set()?;

    prepare_out(&args.common.out)?;
    io::write_model(&args.common.out.join("model.json"), &models)?;
    io::write_fit_sidecar(&args.common.out.join("fit.json"), &fit)?;
    write_manifest(&args.common.out, "fit", &cfg, &["model.json", "fit.json"])?;
    Ok(format!(
        "fitted {num_classes} classes over {z_count} edge types from {} traces ({} uniform rows)",
        traces.len(),
        fit.transitions.uniform_rows.len()
    ))
}

struct Prepared {
    models: Option<ModelSet>,
    scorer: Option<NodeScorer>,
    rule: Option<Rule>,
    num_classes: usize,
}

impl Prepared {
    fn new(cfg: &mut ExperimentConfig) -> CliResult<Self> {
        let models = cfg.model_set()?;
        let rule = cfg.rule()?;
        let scorer = match rule {
            None => Some(cfg.scorer(models.as_ref())?),
            Some(_) => {
                if models.is_none() {
                    return Err(invalid("a model is required (--model FILE or --fixture NAME)"));
                }
                None
            }
        };
        let num_classes = match (&scorer, &models) {
            (Some(s), _) => s.num_classes(),
            (None, Some(m)) => m.num_hypotheses(),
            (None, None) => unreachable!("checked above"),
        };
        Ok(Self { models, scorer, rule, num_classes })
    }

    fn decider(&self) -> Decider<'_> {
        match (&self.rule, &self.scorer) {
            (Some(r), _) => Decider::Msprt(*r),
            (None, Some(s)) => Decider::Gnn(s),
            (None, None) => unreachable!("a GNN rule always has a scorer"),
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> CliResult<String> {
    let mut cfg = base_config(&args.common, &args.model)?;
    apply_rule(&mut cfg, &args.rule);
    set(&mut cfg.traces, &args.traces);
    if args.trajectories {
        cfg.trajectories = Some(true);
    }
    let traces = load_traces(&cfg)?;
    let p = Prepared::new(&mut cfg)?;
    let decider = p.decider();
    let sdr = SdrConfig::new(cfg.thresholds(p.num_classes)?, p.rule.unwrap_or(Rule::Markov))?;
    let outcomes = run_on_traces(&traces, p.models.as_ref(), &sdr, decider)?;

    let rows: Vec<OutcomeRow> =
        traces.iter().zip(&outcomes).map(|(t, o)| OutcomeRow::new(t, decider.name(), o)).collect();
    prepare_out(&args.common.out)?;
    io::write_csv_rows(&args.common.out.join("outcomes.csv"), &rows)?;
    let mut files = vec!["outcomes.csv"];
    if cfg.trajectories == Some(true) {
        let records: Vec<TrajectoryRecord> = traces
            .iter()
            .zip(&outcomes)
            .map(|(t, o)| TrajectoryRecord { trace_id: t.trace_id.clone(), trajectory: o.trajectory.clone() })
            .collect();
        io::write_json(&args.common.out.join("trajectories.json"), &records)?;
        files.push("trajectories.json");
    }
    write_manifest(&args.common.out, "run", &cfg, &files)?;
    let correct = rows.iter().filter(|r| r.correct).count();
    Ok(format!(
        "{}: {correct}/{} correct, mean stop time {:.3}",
        decider.name(),
        rows.len(),
        rows.iter().map(|r| r.stop_time as f64).sum::<f64>() / rows.len() as f64
    ))
}

#[derive(Debug, Serialize)]
struct ThresholdPoint {
    a: f64,
    accuracy: f64,
    mean_stop_time: f64,
    forced_fraction: f64,
}

#[derive(Debug, Serialize)]
struct DeadlinePoint {
    deadline: usize,
    accuracy: f64,
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let mut cfg = base_config(&args.common, &args.model)?;
    apply_rule(&mut cfg, &args.rule);
    set(&mut cfg.traces, &args.traces);
    set(&mut cfg.a_grid, &args.a_grid);
    set(&mut cfg.deadlines, &args.deadlines);
    if cfg.a_grid.is_none() && cfg.deadlines.is_none() {
        return Err(invalid("sweep needs --a-grid or --deadlines"));
    }
    let traces = load_traces(&cfg)?;
    let p = Prepared::new(&mut cfg)?;
    let decider = p.decider();
    let rule = p.rule.unwrap_or(Rule::Markov);
    prepare_out(&args.common.out)?;
    let mut files = Vec::new();
    let mut summary = Vec::new();

    if let Some(grid) = cfg.a_grid.clone() {
        let mut points = Vec::with_capacity(grid.len());
        for a in grid {
            let sdr = SdrConfig::uniform(a, p.num_classes, rule)?;
            let out = run_on_traces(&traces, p.models.as_ref(), &sdr, decider)?;
            let n = out.len() as f64;
            points.push(ThresholdPoint {
                a,
                accuracy: traces.iter().zip(&out).filter(|(t, o)| o.decision == t.label).count() as f64 / n,
                mean_stop_time: out.iter().map(|o| o.stop_time() as f64).sum::<f64>() / n,
                forced_fraction: out.iter().filter(|o| o.forced()).count() as f64 / n,
            });
        }
        io::write_csv_rows(&args.common.out.join("a_sweep.csv"), &points)?;
        files.push("a_sweep.csv");
        summary.push(format!("{} threshold points", points.len()));
    }
    if let Some(deadlines) = cfg.deadlines.clone() {
        let sdr = SdrConfig::new(cfg.thresholds(p.num_classes)?, rule)?;
        let out = run_on_traces(&traces, p.models.as_ref(), &sdr, decider)?;
        let labeled: Vec<_> = traces.iter().map(|t| t.label).zip(out).collect();
        let curve = accuracy_curve(&labeled, &deadlines)?;
        let points: Vec<DeadlinePoint> = curve
            .deadlines
            .iter()
            .zip(&curve.accuracies)
            .map(|(&deadline, &accuracy)| DeadlinePoint { deadline, accuracy })
            .collect();
        io::write_csv_rows(&args.common.out.join("accuracy_curve.csv"), &points)?;
        io::write_json(&args.common.out.join("accuracy_curve.json"), &curve)?;
        files.extend(["accuracy_curve.csv", "accuracy_curve.json"]);
        summary.push(format!("AUC {:.4}", curve.auc));
    }
    write_manifest(&args.common.out, "sweep", &cfg, &files)?;
    Ok(format!("{}: {}", decider.name(), summary.join(", ")))
}

#[derive(Debug, Serialize)]
struct CheckRow {
    name: String,
    value: f64,
    bound: f64,
    sigma: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct XiReport {
    xi_hat: f64,
    k: usize,
    j: usize,
    sequence: usize,
    prefix: usize,
    max_len: usize,
    n_sequences: usize,
    seed: u64,
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<String> {
    let mut cfg = base_config(&args.common, &args.model)?;
    apply_rule(&mut cfg, &args.rule);
    set(&mut cfg.theorem, &args.theorem);
    set(&mut cfg.trials, &args.trials);
    set(&mut cfg.horizon, &args.horizon);
    set(&mut cfg.policy, &args.policy);
    set(&mut cfg.costs, &args.costs);
    set(&mut cfg.hypothesis, &args.hypothesis);
    set(&mut cfg.competitor, &args.competitor);
    set(&mut cfg.length, &args.length);
    set(&mut cfg.a_grid, &args.a_grid);
    set(&mut cfg.xi, &args.xi);
    let theorem = cfg.theorem.clone().ok_or_else(|| invalid("--theorem is required"))?;
    let models = cfg.require_models()?;
    let m = models.num_hypotheses();
    let out = &args.common.out;
    prepare_out(out)?;

    let (pass, summary) = match theorem.as_str() {
        "error-bounds" => {
            let rule = cfg.rule()?;
            let scorer = match rule {
                None => Some(cfg.scorer(Some(&models))?),
                Some(Rule::Markov) => None,
                Some(_) => return Err(invalid("error bounds apply to the msprt and gnn rules only")),
            };
            let mc = cfg.monte_carlo(m)?;
            let sdr = SdrConfig::new(cfg.thresholds(m)?, rule.unwrap_or(Rule::Markov))?;
            let decider = match &scorer {
                Some(s) => Decider::Gnn(s),
                None => Decider::Msprt(Rule::Markov),
            };
            let xi = match (&scorer, cfg.xi) {
                (Some(s), None) => {
                    let xc = XiConfig {
                        max_len: mc.horizon,
                        n_sequences: 200,
                        seed: mc.base_seed,
                        policy: mc.policy,
                        features: mc.features.clone(),
                    };
                    let x = estimate_xi(s, &models, &xc)?.xi_hat;
                    cfg.xi = Some(x);
                    Some(x)
                }
                (_, xi) => xi,
            };
            let report = evalbench::verify_error_bounds(&models, &mc, &sdr, decider, xi)?;
            let rows: Vec<CheckRow> = report
                .checks
                .iter()
                .map(|c| CheckRow {
                    name: c.name.clone(),
                    value: c.value,
                    bound: c.bound,
                    sigma: c.sigma,
                    pass: c.pass,
                })
                .collect();
            io::write_json(&out.join("report.json"), &report)?;
            io::write_csv_rows(&out.join("report.csv"), &rows)?;
            let total = report.checks.last().expect("total check");
            (report.pass(), format!("error-bounds: total error {:.5} vs bound {:.5}", total.value, total.bound))
        }
        "tail" => {
            let k = *cfg.hypothesis.get_or_insert(0);
            let mc = cfg.monte_carlo(m)?;
            let a = cfg.thresholds(m)?;
            let report = evalbench::verify_tail(&models, k, &mc, &a)?;
            io::write_json(&out.join("report.json"), &report)?;
            io::write_csv_rows(&out.join("report.csv"), &report.points)?;
            (
                report.pass,
                format!(
                    "tail: {} violations over {} points, slope {} (limit {:.4})",
                    report.violations,
                    report.points.len(),
                    report.slope.map_or_else(|| "n/a".into(), |s| format!("{s:.4}")),
                    report.slope_limit
                ),
            )
        }
        "asymptotic" => {
            let k = *cfg.hypothesis.get_or_insert(0);
            let grid = cfg.a_grid.get_or_insert_with(|| vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]).clone();
            let mc = cfg.monte_carlo(m)?;
            let report = evalbench::verify_asymptotic(&models, k, &grid, &mc)?;
            #[derive(Serialize)]
            struct Row {
                a: f64,
                mean_stop: f64,
                ratio: f64,
            }
            let rows: Vec<Row> = (0..grid.len())
                .map(|g| Row { a: grid[g], mean_stop: report.mean_stop[g], ratio: report.ratios[g] })
                .collect();
            io::write_json(&out.join("report.json"), &report)?;
            io::write_csv_rows(&out.join("report.csv"), &rows)?;
            (
                report.pass,
                format!(
                    "asymptotic: ratio {:.4} at a = {:e}, limit {:.4}",
                    report.ratios.last().expect("non-empty"),
                    grid.last().expect("non-empty"),
                    report.limit
                ),
            )
        }
        "aep" => {
            let k = *cfg.hypothesis.get_or_insert(0);
            let j = *cfg.competitor.get_or_insert(if k == 0 { 1 } else { 0 });
            let length = *cfg.length.get_or_insert(DEFAULT_AEP_LENGTH);
            let seed = cfg.seed()?;
            let policy = cfg.policy()?;
            let report = evalbench::verify_aep(&models, k, j, length, policy, seed)?;
            #[derive(Serialize)]
            struct Row {
                l: usize,
                value: f64,
            }
            let rows: Vec<Row> = report.trajectory.iter().map(|&(l, value)| Row { l, value }).collect();
            io::write_json(&out.join("report.json"), &report)?;
            io::write_csv_rows(&out.join("report.csv"), &rows)?;
            (report.pass, format!("aep: {:.6} vs {:.6}", report.value, report.target))
        }
        "xi" => {
            let scorer = cfg.scorer(Some(&models))?;
            let seed = cfg.seed()?;
            let max_len = *cfg.length.get_or_insert(50);
            let policy = cfg.policy()?;
            let n_sequences = *cfg.trials.get_or_insert(200);
            let xc = XiConfig { max_len, n_sequences, seed, policy, features: None };
            let x = estimate_xi(&scorer, &models, &xc)?;
            let report = XiReport {
                xi_hat: x.xi_hat,
                k: x.witness.k,
                j: x.witness.j,
                sequence: x.witness.sequence,
                prefix: x.witness.prefix,
                max_len,
                n_sequences,
                seed,
            };
            io::write_json(&out.join("report.json"), &report)?;
            io::write_csv_rows(&out.join("report.csv"), std::slice::from_ref(&report))?;
            (x.xi_hat.is_finite(), format!("xi: {:.6}", x.xi_hat))
        }
        other => {
            return Err(invalid(format!(
                "unknown theorem {other:?}; expected error-bounds, tail, asymptotic, aep or xi"
            )));
        }
    };
    write_manifest(out, "verify", &cfg, &["report.json", "report.csv"])?;
    let line = format!("{} {summary}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(line)
    } else {
        Err(CliError::TheoremFailed(line))
    }
}
