//! Offline estimation of edge types, initial probabilities and transition
//! kernels from labeled training traces.
//!
//! Edge types come from an [`EdgeClassifier`]: the types already on the
//! trace, k-means over the concatenated feature pair, or a pairing of the
//! two highest class scores of a [`NodeScorer`]. Kernels are then estimated
//! per class with a Dirichlet-categorical posterior mean whose prior weight
//! per conditioning state is the average number of times the state occurs
//! per trace.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cascade::{InformationTrace, Parent};
use crate::error::{Error, Result};
use crate::gnn::{NodeScorer, Scorer};
use crate::kernels::{HypothesisModel, ModelSet};

/// Maps the indices of the largest and second largest scores to one of
/// `M(M-1)` edge types: `l1 (M - 1) + l2 - [l2 > l1]`. Exact ties go to the
/// smaller index.
pub fn pairing_theta(score: &[f64]) -> Result<usize> {
    let m = score.len();
    if m < 2 {
        return Err(Error::Undefined("pairing needs at least two classes".into()));
    }
    let mut first = 0;
    for i in 1..m {
        if score[i] > score[first] {
            first = i;
        }
    }
    let mut second = if first == 0 { 1 } else { 0 };
    for i in 0..m {
        if i != first && score[i] > score[second] {
            second = i;
        }
    }
    Ok(pair_index(first, second, m))
}

/// `l1 (M - 1) + l2 - [l2 > l1]` for an ordered pair of distinct indices.
pub fn pair_index(first: usize, second: usize, m: usize) -> usize {
    first * (m - 1) + second - usize::from(second > first)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(theta: usize, m: usize) -> (usize, usize) {
    let first = theta / (m - 1);
    let rest = theta % (m - 1);
    let second = if rest >= first { rest + 1 } else { rest };
    (first, second)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(centroid, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's k-means with k-means++ seeding.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    objective_history: Vec<f64>,
}

impl KMeans {
    pub const MAX_ITERS: usize = 100;
    pub const TOLERANCE: f64 = 1e-6;

    pub fn fit(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k-means needs at least one cluster".into()));
        }
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("k-means points have different dimensions".into()));
        }
        let mut distinct: Vec<&Vec<f64>> = points.iter().collect();
        distinct.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        distinct.dedup();
        if distinct.len() < k {
            return Err(Error::InsufficientData(format!(
                "{} distinct points cannot form {k} clusters",
                distinct.len()
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
        let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
        while centroids.len() < k {
            let pick = WeightedIndex::new(d2.iter().copied())
                .map_err(|e| Error::InsufficientData(format!("k-means++ seeding failed: {e}")))?
                .sample(&mut rng);
            let c = points[pick].clone();
            d2.iter_mut().zip(points).for_each(|(d, p)| *d = d.min(squared_distance(p, &c)));
            centroids.push(c);
        }

        let mut history = Vec::new();
        let mut labels = vec![0usize; points.len()];
        for _ in 0..Self::MAX_ITERS {
            let mut objective = 0.0;
            for (label, p) in labels.iter_mut().zip(points) {
                let (c, d) = nearest(&centroids, p);
                *label = c;
                objective += d;
            }
            history.push(objective);

            let mut sums = vec![vec![0.0; dim]; k];
            let mut sizes = vec![0usize; k];
            for (&label, p) in labels.iter().zip(points) {
                sizes[label] += 1;
                sums[label].iter_mut().zip(p).for_each(|(s, x)| *s += x);
            }
            let mut shift: f64 = 0.0;
            for c in 0..k {
                if sizes[c] == 0 {
                    continue;
                }
                let mean: Vec<f64> = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
                shift = shift.max(squared_distance(&mean, &centroids[c]));
                centroids[c] = mean;
            }
            if libm::sqrt(shift) < Self::TOLERANCE {
                break;
            }
        }
        Ok(Self { centroids, objective_history: history })
    }

    pub fn from_centroids(centroids: Vec<Vec<f64>>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::InvalidModel("no centroids".into()));
        }
        let dim = centroids[0].len();
        if centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::Shape("centroids have different dimensions".into()));
        }
        Ok(Self { centroids, objective_history: Vec::new() })
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn objective_history(&self) -> &[f64] {
        &self.objective_history
    }

    pub fn assign(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierMode {
    /// Keep the edge types already on the trace.
    Identity,
    KMeans(KMeans),
    Pairing(NodeScorer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeClassifier {
    pub mode: ClassifierMode,
    pub z_count: usize,
}

impl EdgeClassifier {
    pub fn identity(z_count: usize) -> Self {
        Self { mode: ClassifierMode::Identity, z_count }
    }

    pub fn pairing(scorer: NodeScorer) -> Result<Self> {
        let m = scorer.num_classes();
        if m < 2 {
            return Err(Error::InvalidConfig("pairing classifier needs M >= 2".into()));
        }
        Ok(Self { mode: ClassifierMode::Pairing(scorer), z_count: m * (m - 1) })
    }

    /// Returns a copy of `trace` with every event typed by this classifier.
    pub fn classify(&self, trace: &InformationTrace) -> Result<InformationTrace> {
        trace.validate()?;
        let mut out = trace.clone();
        match &self.mode {
            ClassifierMode::Identity => {
                trace.validate_types(self.z_count)?;
            }
            ClassifierMode::KMeans(km) => {
                for (i, e) in out.events.iter_mut().enumerate() {
                    let f = e.features.as_ref().ok_or_else(|| {
                        Error::InvalidTrace(format!("trace {}: event {i} has no features to cluster", trace.trace_id))
                    })?;
                    e.edge_type = Some(km.assign(&f.concat()));
                }
            }
            ClassifierMode::Pairing(scorer) => {
                let history: Vec<Option<usize>> = trace.events.iter().map(|e| e.edge_type).collect();
                for (i, e) in out.events.iter_mut().enumerate() {
                    let score = scorer.score(&history[..i], &trace.events[i])?;
                    e.edge_type = Some(pairing_theta(&score)?);
                }
            }
        }
        Ok(out)
    }
}

/// Builds a k-means classifier over `(x_u, x_v)` of every training event.
pub fn fit_kmeans_classifier(traces: &[InformationTrace], z_count: usize, seed: u64) -> Result<EdgeClassifier> {
    let mut points = Vec::new();
    for t in traces {
        for (i, e) in t.events.iter().enumerate() {
            let f = e.features.as_ref().ok_or_else(|| {
                Error::InvalidTrace(format!("trace {}: event {i} has no features to cluster", t.trace_id))
            })?;
            points.push(f.concat());
        }
    }
    if points.is_empty() {
        return Err(Error::InsufficientData("no edges to cluster".into()));
    }
    Ok(EdgeClassifier { mode: ClassifierMode::KMeans(KMeans::fit(&points, z_count, seed)?), z_count })
}

fn class_trace_counts(traces: &[InformationTrace], num_classes: usize) -> Result<Vec<usize>> {
    let mut n = vec![0usize; num_classes];
    for t in traces {
        if t.label >= num_classes {
            return Err(Error::InvalidTrace(format!("trace {} has label {} >= {num_classes}", t.trace_id, t.label)));
        }
        n[t.label] += 1;
    }
    if let Some(m) = n.iter().position(|&c| c == 0) {
        return Err(Error::InsufficientData(format!("class {m} has no training traces")));
    }
    Ok(n)
}

/// Initial edge probabilities per class.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialEstimate {
    /// Rows renormalized to distributions.
    pub eta: Vec<Vec<f64>>,
    /// Source-edge counts per class divided by the number of class traces.
    pub raw: Vec<Vec<f64>>,
}

pub fn estimate_initial(traces: &[InformationTrace], num_classes: usize, z_count: usize) -> Result<InitialEstimate> {
    let n = class_trace_counts(traces, num_classes)?;
    let mut counts = vec![vec![0.0f64; z_count]; num_classes];
    for t in traces {
        t.validate_types(z_count)?;
        if t.source_events() == 0 {
            return Err(Error::InvalidTrace(format!("trace {} has no edge leaving the source", t.trace_id)));
        }
        for e in t.events.iter().filter(|e| e.parent == Parent::Source) {
            counts[t.label][e.edge_type.expect("validated")] += 1.0;
        }
    }
    let raw: Vec<Vec<f64>> =
        counts.iter().zip(&n).map(|(row, &nm)| row.iter().map(|c| c / nm as f64).collect()).collect();
    let eta = raw
        .iter()
        .map(|row| {
            let sum: f64 = row.iter().sum();
            row.iter().map(|c| c / sum).collect()
        })
        .collect();
    Ok(InitialEstimate { eta, raw })
}

/// Ancestor-to-child transition counts per class.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    /// `pairs[m][i][j]`: events of type `j` whose ancestor has type `i`.
    pub pairs: Vec<Vec<Vec<u64>>>,
    /// `totals[m][i] = sum_j pairs[m][i][j]`.
    pub totals: Vec<Vec<u64>>,
}

impl TransitionCounts {
    pub fn count(traces: &[InformationTrace], num_classes: usize, z_count: usize) -> Result<Self> {
        let mut pairs = vec![vec![vec![0u64; z_count]; z_count]; num_classes];
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
                if let Parent::Event(p) = e.parent {
                    pairs[t.label][types[p]][types[i]] += 1;
                }
            }
        }
        let totals = pairs.iter().map(|m| m.iter().map(|row| row.iter().sum()).collect()).collect();
        Ok(Self { pairs, totals })
    }

    /// Adds counts from another tally over the same shape.
    pub fn merge(&mut self, other: &TransitionCounts) {
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            for (ra, rb) in a.iter_mut().zip(b) {
                ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
            }
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

/// Posterior-mean row `(N_ij + s theta) / (N_i + s)` before normalization.
pub fn dcb_row_raw(counts: &[u64], theta: f64, s: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + s;
    counts.iter().map(|&n| if denom > 0.0 { (n as f64 + s * theta) / denom } else { 0.0 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcbEstimate {
    /// `alpha[m][i][j]`, row-normalized.
    pub alpha: Vec<Vec<Vec<f64>>>,
    /// `theta[m][i]`: occurrences of state `i` per class-`m` trace.
    pub theta: Vec<Vec<f64>>,
    pub s: f64,
    pub counts: TransitionCounts,
    /// `(class, state)` rows with no data and no prior weight; set uniform.
    pub uniform_rows: Vec<(usize, usize)>,
}

/// Dirichlet-categorical transition estimates with pseudo-count `s`.
pub fn estimate_transitions_dcb(
    traces: &[InformationTrace],
    num_classes: usize,
    z_count: usize,
    s: f64,
) -> Result<DcbEstimate> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidConfig(format!("pseudo-count s = {s} must be finite and >= 0")));
    }
    let n = class_trace_counts(traces, num_classes)?;
    let counts = TransitionCounts::count(traces, num_classes, z_count)?;

    let mut occurrences = vec![vec![0.0f64; z_count]; num_classes];
    for t in traces {
        let types = t.types()?;
        for &z in types.iter().take(types.len().saturating_sub(1)) {
            occurrences[t.label][z] += 1.0;
        }
    }
    let theta: Vec<Vec<f64>> =
        occurrences.iter().zip(&n).map(|(row, &nm)| row.iter().map(|c| c / nm as f64).collect()).collect();

    let mut uniform_rows = Vec::new();
    let alpha = (0..num_classes)
        .map(|m| {
            (0..z_count)
                .map(|i| {
                    let raw = dcb_row_raw(&counts.pairs[m][i], theta[m][i], s);
                    let sum: f64 = raw.iter().sum();
                    if sum > 0.0 {
                        raw.into_iter().map(|p| p / sum).collect()
                    } else {
                        uniform_rows.push((m, i));
                        vec![1.0 / z_count as f64; z_count]
                    }
                })
                .collect()
        })
        .collect();
    Ok(DcbEstimate { alpha, theta, s, counts, uniform_rows })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    Identity,
    KMeans { seed: u64 },
    Pairing(NodeScorer),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    Uniform,
    /// Class frequencies of the training traces.
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub classifier: ClassifierSpec,
    pub num_classes: usize,
    pub z_count: usize,
    pub s: f64,
    pub priors: PriorMode,
}

impl FitSpec {
    /// Identity classifier, uniform priors and `s = z_count`.
    pub fn new(num_classes: usize, z_count: usize) -> Self {
        Self {
            classifier: ClassifierSpec::Identity,
            num_classes,
            z_count,
            s: z_count as f64,
            priors: PriorMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub classifier: EdgeClassifier,
    pub initial: InitialEstimate,
    pub transitions: DcbEstimate,
    pub priors: Vec<f64>,
}

impl FitResult {
    pub fn model_set(&self) -> Result<ModelSet> {
        let models = self
            .initial
            .eta
            .iter()
            .zip(&self.transitions.alpha)
            .map(|(eta, alpha)| HypothesisModel::new(eta.clone(), alpha.clone()))
            .collect::<Result<Vec<_>>>()?;
        ModelSet::new(models, self.priors.clone())
    }
}

/// Classifies every training edge, then estimates initial and transition
/// probabilities per class.
pub fn fit_offline(traces: &[InformationTrace], spec: &FitSpec) -> Result<FitResult> {
    if traces.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let classifier = match &spec.classifier {
        ClassifierSpec::Identity => EdgeClassifier::identity(spec.z_count),
        ClassifierSpec::KMeans { seed } => fit_kmeans_classifier(traces, spec.z_count, *seed)?,
        ClassifierSpec::Pairing(scorer) => {
            let c = EdgeClassifier::pairing(scorer.clone())?;
            if c.z_count != spec.z_count {
                return Err(Error::InvalidConfig(format!(
                    "pairing over {} classes yields {} types, but {} were configured",
                    scorer.num_classes(),
                    c.z_count,
                    spec.z_count
                )));
            }
            c
        }
    };
    let typed = traces.iter().map(|t| classifier.classify(t)).collect::<Result<Vec<_>>>()?;
    let initial = estimate_initial(&typed, spec.num_classes, spec.z_count)?;
    let transitions = estimate_transitions_dcb(&typed, spec.num_classes, spec.z_count, spec.s)?;
    let priors = match spec.priors {
        PriorMode::Uniform => vec![1.0 / spec.num_classes as f64; spec.num_classes],
        PriorMode::Empirical => {
            let n = class_trace_counts(&typed, spec.num_classes)?;
            n.iter().map(|&c| c as f64 / typed.len() as f64).collect()
        }
    };
    Ok(FitResult { classifier, initial, transitions, priors })
}
