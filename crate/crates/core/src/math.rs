//! Small numeric helpers shared across modules. All transcendental functions
//! go through `libm` so the crate stays `no_std`.

use alloc::vec::Vec;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `log(sum(exp(xs)))`, returning `-inf` when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| exp(x - max)).sum();
    max + ln(sum)
}

/// Normalized probabilities from log-weights.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    log_weights.iter().map(|&w| exp(w - lse)).collect()
}

/// Entries of a probability vector closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest entry of a probability vector; ties (up to
/// [`TIE_TOLERANCE`]) go to the smallest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] + TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

/// Divides by the sum. Returns `None` when the sum is zero or not finite.
pub fn normalized(xs: &[f64]) -> Option<Vec<f64>> {
    let sum: f64 = xs.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return None;
    }
    Some(xs.iter().map(|x| x / sum).collect())
}
