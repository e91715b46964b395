//! File formats: traces as JSON Lines (plus a flat CSV export), model and
//! scorer JSON, the fit sidecar and per-trace outcome tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use cascade_core::fit::{ClassifierMode, FitResult, KMeans};
use cascade_core::{
    EdgeClassifier, EdgeFeatures, GinWeights, HypothesisModel, InformationTrace, ModelSet, NodeScorer, Parent,
    SdrOutcome, TabularScorer, TraceEvent,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    fn invalid(path: &Path, message: impl ToString) -> Self {
        IoError::Invalid { path: path.to_path_buf(), message: message.to_string() }
    }

    /// True for errors caused by the content of a file rather than by the
    /// filesystem.
    pub fn is_validation(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}

pub type IoResult<T> = Result<T, IoError>;

fn create(path: &Path) -> IoResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| IoError::io(path, e))
}

fn open(path: &Path) -> IoResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| IoError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> IoResult<T> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> IoResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| IoError::invalid(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| IoError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// Index of the parent event, or -1 for the source.
    pub parent: i64,
    #[serde(rename = "type")]
    pub edge_type: Option<usize>,
    pub xu: Option<Vec<f64>>,
    pub xv: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trace_id: String,
    pub label: usize,
    pub events: Vec<EventRecord>,
}

impl From<&InformationTrace> for TraceRecord {
    fn from(t: &InformationTrace) -> Self {
        let events = t
            .events
            .iter()
            .map(|e| EventRecord {
                parent: match e.parent {
                    Parent::Source => -1,
                    Parent::Event(p) => p as i64,
                },
                edge_type: e.edge_type,
                xu: e.features.as_ref().map(|f| f.source.clone()),
                xv: e.features.as_ref().map(|f| f.target.clone()),
            })
            .collect();
        TraceRecord { trace_id: t.trace_id.clone(), label: t.label, events }
    }
}

impl TryFrom<TraceRecord> for InformationTrace {
    type Error = String;

    fn try_from(r: TraceRecord) -> Result<Self, String> {
        let events = r
            .events
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let parent = match e.parent {
                    -1 => Parent::Source,
                    p if p >= 0 => Parent::Event(p as usize),
                    p => return Err(format!("event {i}: parent {p} must be -1 or an event index")),
                };
                let features = match (e.xu, e.xv) {
                    (Some(source), Some(target)) => Some(EdgeFeatures { source, target }),
                    (None, None) => None,
                    _ => return Err(format!("event {i}: xu and xv must be given together")),
                };
                Ok(TraceEvent { parent, edge_type: e.edge_type, features })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let trace = InformationTrace { trace_id: r.trace_id, label: r.label, events };
        trace.validate().map_err(|e| e.to_string())?;
        Ok(trace)
    }
}

pub fn write_traces(path: &Path, traces: &[InformationTrace]) -> IoResult<()> {
    let mut w = create(path)?;
    for t in traces {
        serde_json::to_writer(&mut w, &TraceRecord::from(t)).map_err(|e| IoError::invalid(path, e))?;
        writeln!(w).map_err(|e| IoError::io(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn read_traces(path: &Path) -> IoResult<Vec<InformationTrace>> {
    let mut traces = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| IoError::Parse { path: path.to_path_buf(), line: i + 1, message };
        let record: TraceRecord = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        traces.push(InformationTrace::try_from(record).map_err(parse)?);
    }
    Ok(traces)
}

fn join(x: &Option<Vec<f64>>) -> String {
    x.as_ref().map_or_else(String::new, |v| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
}

/// One row per event: `trace_id,label,index,parent,type,xu,xv`, with
/// feature vectors joined by `;`.
pub fn write_traces_csv(path: &Path, traces: &[InformationTrace]) -> IoResult<()> {
    let csv_err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["trace_id", "label", "index", "parent", "type", "xu", "xv"]).map_err(csv_err)?;
    for t in traces {
        for (i, e) in TraceRecord::from(t).events.iter().enumerate() {
            w.write_record([
                t.trace_id.clone(),
                t.label.to_string(),
                i.to_string(),
                e.parent.to_string(),
                e.edge_type.map_or_else(String::new, |z| z.to_string()),
                join(&e.xu),
                join(&e.xv),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRecord {
    pub eta: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    pub priors: Vec<f64>,
    pub models: Vec<KernelRecord>,
}

impl From<&ModelSet> for ModelFile {
    fn from(s: &ModelSet) -> Self {
        ModelFile {
            m: s.num_hypotheses(),
            z: s.num_states(),
            priors: s.priors().to_vec(),
            models: s
                .models()
                .iter()
                .map(|h| KernelRecord { eta: h.eta().to_vec(), alpha: h.alpha().to_vec() })
                .collect(),
        }
    }
}

impl ModelFile {
    pub fn into_model_set(self) -> cascade_core::Result<ModelSet> {
        if self.models.len() != self.m {
            return Err(cascade_core::Error::Shape(format!("M = {} but {} models given", self.m, self.models.len())));
        }
        let models = self
            .models
            .into_iter()
            .map(|k| {
                if k.eta.len() != self.z {
                    return Err(cascade_core::Error::Shape(format!(
                        "Z = {} but eta has {} entries",
                        self.z,
                        k.eta.len()
                    )));
                }
                HypothesisModel::new(k.eta, k.alpha)
            })
            .collect::<cascade_core::Result<Vec<_>>>()?;
        ModelSet::new(models, self.priors)
    }
}

pub fn write_model(path: &Path, models: &ModelSet) -> IoResult<()> {
    write_json(path, &ModelFile::from(models))
}

pub fn read_model(path: &Path) -> IoResult<ModelSet> {
    read_json::<ModelFile>(path)?.into_model_set().map_err(|e| IoError::invalid(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinFile {
    pub d: usize,
    pub h: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub epsilon: f64,
    #[serde(rename = "W1")]
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    #[serde(rename = "W2")]
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

impl From<&GinWeights> for GinFile {
    fn from(w: &GinWeights) -> Self {
        GinFile {
            d: w.input_dim(),
            h: w.hidden_dim(),
            m: w.num_classes(),
            epsilon: w.epsilon(),
            w1: w.w1().to_vec(),
            b1: w.b1().to_vec(),
            w2: w.w2().to_vec(),
            b2: w.b2().to_vec(),
        }
    }
}

pub fn read_gin(path: &Path) -> IoResult<GinWeights> {
    let f: GinFile = read_json(path)?;
    let w = GinWeights::new(f.w1, f.b1, f.epsilon, f.w2, f.b2).map_err(|e| IoError::invalid(path, e))?;
    if (w.input_dim(), w.hidden_dim(), w.num_classes()) != (f.d, f.h, f.m) {
        return Err(IoError::invalid(path, "d, h or M disagree with the weight shapes"));
    }
    Ok(w)
}

pub fn write_gin(path: &Path, w: &GinWeights) -> IoResult<()> {
    write_json(path, &GinFile::from(w))
}

/// Tabular scorer: `table[c][z][m]`, where `c = Z` marks source edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularFile {
    pub table: Vec<Vec<Vec<f64>>>,
}

pub fn read_tabular(path: &Path) -> IoResult<TabularScorer> {
    let f: TabularFile = read_json(path)?;
    TabularScorer::from_table(f.table).map_err(|e| IoError::invalid(path, e))
}

pub fn write_tabular(path: &Path, t: &TabularScorer) -> IoResult<()> {
    write_json(path, &TabularFile { table: t.table().to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRecord {
    pub mode: String,
    pub z_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub centroids: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scorer: Option<String>,
}

impl From<&EdgeClassifier> for ClassifierRecord {
    fn from(c: &EdgeClassifier) -> Self {
        let (mode, centroids, scorer) = match &c.mode {
            ClassifierMode::Identity => ("identity", None, None),
            ClassifierMode::KMeans(km) => ("kmeans", Some(km.centroids().to_vec()), None),
            ClassifierMode::Pairing(s) => {
                let kind = match s {
                    NodeScorer::Oracle(_) => "oracle",
                    NodeScorer::Tabular(_) => "tabular",
                    NodeScorer::Gin(_) => "gin",
                };
                ("pairing", None, Some(kind.to_string()))
            }
        };
        ClassifierRecord { mode: mode.to_string(), z_count: c.z_count, centroids, scorer }
    }
}

impl ClassifierRecord {
    /// Rebuilds identity and k-means classifiers; pairing classifiers need
    /// their scorer supplied separately.
    pub fn to_classifier(&self) -> cascade_core::Result<EdgeClassifier> {
        match self.mode.as_str() {
            "identity" => Ok(EdgeClassifier::identity(self.z_count)),
            "kmeans" => {
                let c = self
                    .centroids
                    .clone()
                    .ok_or_else(|| cascade_core::Error::InvalidModel("k-means classifier without centroids".into()))?;
                Ok(EdgeClassifier { mode: ClassifierMode::KMeans(KMeans::from_centroids(c)?), z_count: self.z_count })
            }
            other => Err(cascade_core::Error::InvalidModel(format!("classifier mode {other} cannot be rebuilt alone"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    /// `pairs[m][i][j] = N_ij` for class `m`.
    pub pairs: Vec<Vec<Vec<u64>>>,
    /// `totals[m][i] = N_i`.
    pub totals: Vec<Vec<u64>>,
}

/// Diagnostics written next to a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSidecar {
    pub theta: Vec<Vec<f64>>,
    pub s: f64,
    pub counts: CountsRecord,
    pub classifier: ClassifierRecord,
    pub eta_raw: Vec<Vec<f64>>,
    pub uniform_rows: Vec<(usize, usize)>,
}

impl From<&FitResult> for FitSidecar {
    fn from(f: &FitResult) -> Self {
        FitSidecar {
            theta: f.transitions.theta.clone(),
            s: f.transitions.s,
            counts: CountsRecord {
                pairs: f.transitions.counts.pairs.clone(),
                totals: f.transitions.counts.totals.clone(),
            },
            classifier: ClassifierRecord::from(&f.classifier),
            eta_raw: f.initial.raw.clone(),
            uniform_rows: f.transitions.uniform_rows.clone(),
        }
    }
}

pub fn write_fit_sidecar(path: &Path, fit: &FitResult) -> IoResult<()> {
    write_json(path, &FitSidecar::from(fit))
}

pub fn read_fit_sidecar(path: &Path) -> IoResult<FitSidecar> {
    read_json(path)
}

/// One row of an outcomes table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub trace_id: String,
    pub rule: String,
    pub stop_time: usize,
    pub decision: usize,
    pub label: usize,
    pub correct: bool,
    pub forced: bool,
}

impl OutcomeRow {
    pub fn new(trace: &InformationTrace, rule: &str, outcome: &SdrOutcome) -> Self {
        OutcomeRow {
            trace_id: trace.trace_id.clone(),
            rule: rule.to_string(),
            stop_time: outcome.stop_time(),
            decision: outcome.decision,
            label: trace.label,
            correct: outcome.decision == trace.label,
            forced: outcome.forced(),
        }
    }
}

/// Writes any serializable rows as CSV with a header.
pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> IoResult<()> {
    let csv_err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn read_outcomes(path: &Path) -> IoResult<Vec<OutcomeRow>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.deserialize()
        .collect::<Result<Vec<OutcomeRow>, _>>()
        .map_err(|source| IoError::Csv { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub trace_id: String,
    pub trajectory: Vec<Vec<f64>>,
}
