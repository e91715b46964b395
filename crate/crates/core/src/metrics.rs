//! Error, risk and survival statistics over batches of sequential runs,
//! plus the closed-form error bounds they are checked against.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One finished run: true hypothesis, decision and stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRecord {
    pub label: usize,
    pub decision: usize,
    pub stop_time: usize,
    pub forced: bool,
}

/// Frequentist error probabilities estimated from labeled runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    /// `rates[j][k]`: fraction of runs under `H_j` that decided `k`.
    pub rates: Vec<Vec<f64>>,
    /// Runs per true hypothesis.
    pub trials: Vec<usize>,
}

impl ErrorMatrix {
    pub fn from_runs(runs: &[RunRecord], num_hypotheses: usize) -> Result<Self> {
        let mut counts = vec![vec![0usize; num_hypotheses]; num_hypotheses];
        for r in runs {
            if r.label >= num_hypotheses || r.decision >= num_hypotheses {
                return Err(Error::Shape("run label or decision out of range".into()));
            }
            counts[r.label][r.decision] += 1;
        }
        let trials: Vec<usize> = counts.iter().map(|row| row.iter().sum()).collect();
        let rates = counts
            .iter()
            .zip(&trials)
            .map(|(row, &n)| row.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect())
            .collect();
        Ok(Self { rates, trials })
    }

    pub fn num_hypotheses(&self) -> usize {
        self.rates.len()
    }

    /// Prior-weighted probability of wrongly accepting `k`:
    /// `sum_{j != k} pi_j rates[j][k]`.
    pub fn class_error(&self, k: usize, priors: &[f64]) -> f64 {
        (0..self.num_hypotheses()).filter(|&j| j != k).map(|j| priors[j] * self.rates[j][k]).sum()
    }

    /// Unweighted `sum_{j != k} rates[j][k]`.
    pub fn unweighted_class_error(&self, k: usize) -> f64 {
        (0..self.num_hypotheses()).filter(|&j| j != k).map(|j| self.rates[j][k]).sum()
    }

    pub fn class_errors(&self, priors: &[f64]) -> Vec<f64> {
        (0..self.num_hypotheses()).map(|k| self.class_error(k, priors)).collect()
    }

    /// Probability of a wrong decision under the prior mixture.
    pub fn total_error(&self, priors: &[f64]) -> f64 {
        self.class_errors(priors).iter().sum()
    }

    /// Standard deviation of [`Self::class_error`] treating each rate as an
    /// independent binomial proportion.
    pub fn class_error_sigma(&self, k: usize, priors: &[f64]) -> f64 {
        let var: f64 = (0..self.num_hypotheses())
            .filter(|&j| j != k && self.trials[j] > 0)
            .map(|j| {
                let p = self.rates[j][k];
                priors[j] * priors[j] * p * (1.0 - p) / self.trials[j] as f64
            })
            .sum();
        libm::sqrt(var)
    }

    /// Standard deviation of [`Self::unweighted_class_error`].
    pub fn unweighted_class_error_sigma(&self, k: usize) -> f64 {
        let uniform = vec![1.0; self.num_hypotheses()];
        self.class_error_sigma(k, &uniform)
    }

    /// Standard deviation of [`Self::total_error`].
    pub fn total_error_sigma(&self, priors: &[f64]) -> f64 {
        let var: f64 = (0..self.num_hypotheses())
            .filter(|&j| self.trials[j] > 0)
            .map(|j| {
                let p = 1.0 - self.rates[j][j];
                priors[j] * priors[j] * p * (1.0 - p) / self.trials[j] as f64
            })
            .sum();
        libm::sqrt(var)
    }
}

/// Mean stopping time per true hypothesis; `NaN` where there are no runs.
pub fn mean_stop_times(runs: &[RunRecord], num_hypotheses: usize) -> Vec<f64> {
    let mut sum = vec![0.0; num_hypotheses];
    let mut n = vec![0usize; num_hypotheses];
    for r in runs.iter().filter(|r| r.label < num_hypotheses) {
        sum[r.label] += r.stop_time as f64;
        n[r.label] += 1;
    }
    sum.iter().zip(&n).map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 }).collect()
}

/// `error + sum_j c_j E[T 1{H_j}]`.
pub fn total_risk(error: f64, costs: &[f64], joint_stop_times: &[f64]) -> f64 {
    error + costs.iter().zip(joint_stop_times).map(|(c, t)| c * t).sum::<f64>()
}

/// `E[T 1{H_j}] = pi_j E[T | H_j]`.
pub fn joint_stop_times(priors: &[f64], mean_stop: &[f64]) -> Vec<f64> {
    priors.iter().zip(mean_stop).map(|(p, t)| p * t).collect()
}

pub fn msprt_class_bound(prior: f64, a: f64) -> f64 {
    prior * a
}

/// `nu / (1 + nu)`, the total-error bound when every threshold is `nu`.
pub fn msprt_total_bound(nu: f64) -> f64 {
    nu / (1.0 + nu)
}

/// `a xi + xi - 1`.
pub fn gnn_class_bound(a: f64, xi: f64) -> f64 {
    a * xi + xi - 1.0
}

/// `min(xi |a|_1 + M (xi - 1), 1 - 1 / (xi (1 + nu)))` with `nu = max a`.
pub fn gnn_total_bound(thresholds: &[f64], xi: f64) -> f64 {
    let m = thresholds.len() as f64;
    let l1: f64 = thresholds.iter().sum();
    let nu = thresholds.iter().copied().fold(0.0, f64::max);
    (xi * l1 + m * (xi - 1.0)).min(1.0 - 1.0 / (xi * (1.0 + nu)))
}

/// One point of an empirical survival function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint {
    pub t: usize,
    /// Fraction of runs with stopping time strictly greater than `t`.
    pub survival: f64,
    pub survivors: usize,
}

/// `S(t) = #{T > t} / n` for `t = 0 ..= max T`.
pub fn survival_function(stop_times: &[usize]) -> Vec<SurvivalPoint> {
    let n = stop_times.len();
    if n == 0 {
        return Vec::new();
    }
    let max = stop_times.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for &t in stop_times {
        hist[t] += 1;
    }
    let mut remaining = n;
    let mut out = Vec::with_capacity(max + 1);
    for (t, &h) in hist.iter().enumerate() {
        remaining -= h;
        out.push(SurvivalPoint { t, survival: remaining as f64 / n as f64, survivors: remaining });
    }
    out
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData("slope needs at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("slope needs two distinct x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Mean of the per-deadline accuracies.
pub fn auc(accuracies: &[f64]) -> f64 {
    if accuracies.is_empty() {
        return f64::NAN;
    }
    accuracies.iter().sum::<f64>() / accuracies.len() as f64
}
