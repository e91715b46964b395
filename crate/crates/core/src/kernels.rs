//! Hypothesis models and the divergences between their transition kernels.
//!
//! A [`HypothesisModel`] holds the initial edge-type distribution `eta` for
//! edges leaving the source and the row-stochastic kernel `alpha`, where
//! `alpha[z][z']` is the probability that an event of type `z'` follows an
//! ancestor of type `z`. Divergences that are infinite because of a support
//! mismatch come back as `f64::INFINITY` instead of an error, so minima over
//! competing hypotheses stay computable.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ln, sqrt};

/// Tolerance for row sums of probability vectors.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// Above this many states the stationary distribution is computed by power
/// iteration instead of a dense linear solve.
pub const DENSE_STATIONARY_LIMIT: usize = 64;

const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;

fn check_distribution(p: &[f64], what: &dyn Fn() -> alloc::string::String) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidModel(format!("{} has a negative or non-finite entry", what())));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::InvalidModel(format!("{} sums to {sum}, expected 1", what())));
    }
    Ok(())
}

/// Initial distribution and transition kernel of one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisModel {
    eta: Vec<f64>,
    alpha: Vec<Vec<f64>>,
}

impl HypothesisModel {
    pub fn new(eta: Vec<f64>, alpha: Vec<Vec<f64>>) -> Result<Self> {
        let n = eta.len();
        if n == 0 {
            return Err(Error::InvalidModel("empty state space".into()));
        }
        if alpha.len() != n || alpha.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidModel(format!("alpha must be {n}x{n} to match eta")));
        }
        check_distribution(&eta, &|| "eta".into())?;
        for (z, row) in alpha.iter().enumerate() {
            check_distribution(row, &|| format!("alpha row {z}"))?;
        }
        Ok(Self { eta, alpha })
    }

    pub fn num_states(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    /// `alpha(to | from)`.
    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.alpha[from][to]
    }

    /// Probability of an event of type `z` given its ancestor type, or
    /// given that it leaves the source when `ancestor` is `None`.
    #[inline]
    pub fn event_probability(&self, ancestor: Option<usize>, z: usize) -> f64 {
        match ancestor {
            Some(a) => self.alpha[a][z],
            None => self.eta[z],
        }
    }
}

/// The competing hypotheses together with their prior probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    models: Vec<HypothesisModel>,
    priors: Vec<f64>,
}

impl ModelSet {
    pub fn new(models: Vec<HypothesisModel>, priors: Vec<f64>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidModel("a model set needs at least one hypothesis".into()));
        }
        if priors.len() != models.len() {
            return Err(Error::InvalidModel(format!("{} priors given for {} hypotheses", priors.len(), models.len())));
        }
        check_distribution(&priors, &|| "priors".into())?;
        let z = models[0].num_states();
        if let Some(m) = models.iter().position(|m| m.num_states() != z) {
            return Err(Error::InvalidModel(format!(
                "hypothesis {m} has {} states, hypothesis 0 has {z}",
                models[m].num_states()
            )));
        }
        Ok(Self { models, priors })
    }

    /// Model set with uniform priors.
    pub fn uniform(models: Vec<HypothesisModel>) -> Result<Self> {
        let m = models.len().max(1);
        Self::new(models, vec![1.0 / m as f64; m])
    }

    pub fn with_priors(&self, priors: Vec<f64>) -> Result<Self> {
        Self::new(self.models.clone(), priors)
    }

    pub fn num_hypotheses(&self) -> usize {
        self.models.len()
    }

    pub fn num_states(&self) -> usize {
        self.models[0].num_states()
    }

    pub fn models(&self) -> &[HypothesisModel] {
        &self.models
    }

    pub fn model(&self, m: usize) -> &HypothesisModel {
        &self.models[m]
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Conditional Hellinger affinity `S_{k,j}(z)`.
    pub fn hellinger_affinity(&self, k: usize, j: usize, z: usize) -> f64 {
        affinity(&self.models[k].alpha[z], &self.models[j].alpha[z])
    }

    /// KL divergence between the rows of `alpha_k` and `alpha_j` at state `z`.
    pub fn conditional_kl(&self, k: usize, j: usize, z: usize) -> f64 {
        kl_divergence(&self.models[k].alpha[z], &self.models[j].alpha[z])
    }

    /// Chi-square divergence between the rows at state `z`.
    pub fn chi_square(&self, k: usize, j: usize, z: usize) -> f64 {
        chi_square(&self.models[k].alpha[z], &self.models[j].alpha[z])
    }

    /// Per-state KL of `alpha_k` against `alpha_j`, averaged under the
    /// stationary distribution of `alpha_k`.
    pub fn stationary_kl(&self, k: usize, j: usize) -> Result<f64> {
        let stationary = stationary_distribution(&self.models[k].alpha)?;
        Ok(weighted_kl(&stationary, &self.models[k].alpha, &self.models[j].alpha))
    }
}

fn weighted_kl(weights: &[f64], p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (z, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            total += w * kl_divergence(&p[z], &q[z]);
        }
    }
    total
}

/// `sum sqrt(p q)`, the Bhattacharyya coefficient.
pub fn affinity(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| sqrt(a * b)).sum::<f64>().min(1.0)
}

/// `sum p log(p / q)`; infinite when `q` misses part of the support of `p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        total += a * ln(a / b);
    }
    total.max(0.0)
}

/// `sum p^2 / q - 1`; infinite when `q` misses part of the support of `p`.
pub fn chi_square(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        total += a * a / b;
    }
    (total - 1.0).max(0.0)
}

/// States that are not in the same communicating class as state 0.
fn non_communicating_states(alpha: &[Vec<f64>]) -> Vec<usize> {
    let n = alpha.len();
    let closure = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let p = if forward { alpha[u][v] } else { alpha[v][u] };
                if p > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    let fwd = closure(true);
    let bwd = closure(false);
    (0..n).filter(|&z| !(fwd[z] && bwd[z])).collect()
}

/// Stationary distribution of an irreducible row-stochastic kernel.
///
/// Small chains use a dense linear solve of `pi (alpha - I) = 0` with the
/// normalization constraint; larger chains use power iteration on the lazy
/// chain `(I + alpha) / 2`, which shares the stationary vector and is
/// aperiodic.
pub fn stationary_distribution(alpha: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = alpha.len();
    if n == 0 || alpha.iter().any(|row| row.len() != n) {
        return Err(Error::Shape(format!("transition matrix must be square, got {n} rows")));
    }
    let unreachable = non_communicating_states(alpha);
    if !unreachable.is_empty() {
        return Err(Error::Reducible { unreachable });
    }
    let mut pi = if n <= DENSE_STATIONARY_LIMIT { dense_stationary(alpha)? } else { power_stationary(alpha) };
    for p in pi.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= sum);
    Ok(pi)
}

fn dense_stationary(alpha: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = alpha.len();
    // Rows of the system are the equations (alpha^T - I) pi = 0, with the last
    // one replaced by sum(pi) = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = alpha[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[n - 1].fill(1.0);

    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Undefined("singular stationary system".into()));
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                if factor != 0.0 {
                    for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= factor * p;
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn power_stationary(alpha: &[Vec<f64>]) -> Vec<f64> {
    let n = alpha.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        next.iter_mut().zip(&pi).for_each(|(x, p)| *x = 0.5 * p);
        for (i, row) in alpha.iter().enumerate() {
            let w = 0.5 * pi[i];
            for (j, &p) in row.iter().enumerate() {
                next[j] += w * p;
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        core::mem::swap(&mut pi, &mut next);
        if delta < POWER_TOLERANCE {
            break;
        }
    }
    pi
}

/// Every pairwise divergence used by the stopping-time and error analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    /// `affinity[k][j][z]`, the conditional Hellinger affinity.
    pub affinity: Vec<Vec<Vec<f64>>>,
    pub kl_conditional: Vec<Vec<Vec<f64>>>,
    /// `kl_stationary[k][j]`, conditional KL averaged under `stationary[k]`.
    pub kl_stationary: Vec<Vec<f64>>,
    pub chi_square: Vec<Vec<Vec<f64>>>,
    pub stationary: Vec<Vec<f64>>,
}

impl DivergenceReport {
    pub fn compute(models: &ModelSet) -> Result<Self> {
        let m = models.num_hypotheses();
        let z = models.num_states();
        let stationary =
            models.models().iter().map(|h| stationary_distribution(h.alpha())).collect::<Result<Vec<_>>>()?;
        let cube = |f: &dyn Fn(usize, usize, usize) -> f64| {
            (0..m)
                .map(|k| (0..m).map(|j| (0..z).map(|s| f(k, j, s)).collect()).collect())
                .collect::<Vec<Vec<Vec<f64>>>>()
        };
        let affinity = cube(&|k, j, s| models.hellinger_affinity(k, j, s));
        let kl_conditional = cube(&|k, j, s| models.conditional_kl(k, j, s));
        let chi_square = cube(&|k, j, s| models.chi_square(k, j, s));
        let kl_stationary = (0..m)
            .map(|k| {
                (0..m).map(|j| weighted_kl(&stationary[k], models.model(k).alpha(), models.model(j).alpha())).collect()
            })
            .collect();
        Ok(Self { affinity, kl_conditional, kl_stationary, chi_square, stationary })
    }

    /// `min_{j != k} kl_stationary[k][j]`.
    pub fn min_stationary_kl(&self, k: usize) -> f64 {
        self.kl_stationary[k].iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &d)| d).fold(f64::INFINITY, f64::min)
    }
}

/// Constants of the exponential stopping-time tail bound
/// `P(T > t | H_k) <= c1 * exp(-c2 * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    pub c1: f64,
    pub c2: f64,
    /// Competitor and state attaining the largest affinity.
    pub worst_competitor: usize,
    pub worst_state: usize,
}

/// Tail constants for hypothesis `k` under thresholds `a`.
///
/// `c2` is built from the largest affinity over competitors and states, the
/// slowest-decaying term of the bound.
pub fn tail_constants(models: &ModelSet, k: usize, a: &[f64]) -> Result<TailConstants> {
    let m = models.num_hypotheses();
    if m < 2 {
        return Err(Error::Undefined("tail constants need at least two hypotheses".into()));
    }
    if a.len() != m {
        return Err(Error::InvalidConfig(format!("{} thresholds given for {m} hypotheses", a.len())));
    }
    let min_a = a.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_a > 0.0) {
        return Err(Error::InvalidConfig("tail constants need every threshold a > 0".into()));
    }
    let priors = models.priors();
    let mut worst = (0usize, 0usize, f64::NEG_INFINITY);
    let mut prior_ratio: f64 = 0.0;
    for j in (0..m).filter(|&j| j != k) {
        prior_ratio = prior_ratio.max(sqrt(priors[j] / (priors[k] * min_a)));
        for z in 0..models.num_states() {
            let s = models.hellinger_affinity(k, j, z);
            if s > worst.2 {
                worst = (j, z, s);
            }
        }
    }
    let (j, z, s) = worst;
    if s >= 1.0 - 1e-12 {
        return Err(Error::NotSeparated { k, j, z });
    }
    let c1 = libm::pow((m - 1) as f64, 1.5) * prior_ratio;
    Ok(TailConstants { c1, c2: -ln(s), worst_competitor: j, worst_state: z })
}
