// SPDX-License-Identifier: Apache-2.0

//! Empirical CDFs and the tolerance calculus used by every Monte Carlo check.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Right-continuous step CDF over a sorted sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// Sorts `samples` in place. NaN samples are rejected.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::NanSample);
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x <= t);
        below as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `x` with `eval(x) >= p`, for `p` in `(0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = libm::ceil(p * n as f64) as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// Shorthand for [`EmpiricalCdf::eval`].
pub fn ecdf_eval(cdf: &EmpiricalCdf, t: f64) -> f64 {
    cdf.eval(t)
}

/// Two-sided Dvoretzky–Kiefer–Wolfowitz half-width,
/// `sqrt(ln(2 / (1 - confidence)) / (2n))`.
pub fn dkw_epsilon(n: usize, confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfidence(confidence));
    }
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let delta = 1.0 - confidence;
    Ok(libm::sqrt(libm::log(2.0 / delta) / (2.0 * n as f64)))
}

/// Smallest `n` whose DKW half-width at `confidence` is at most `epsilon`.
pub fn dkw_required_samples(epsilon: f64, confidence: f64) -> Result<usize> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfidence(confidence));
    }
    let delta = 1.0 - confidence;
    let n = libm::ceil(libm::log(2.0 / delta) / (2.0 * epsilon * epsilon));
    Ok((n as usize).max(1))
}

/// Kolmogorov–Smirnov sup distance between `cdf` and `reference`.
///
/// At each distinct sample value both one-sided gaps are checked: the
/// ECDF value against `reference(v)`, and the ECDF value just below the
/// jump against `reference` at the next float below `v`. The latter makes
/// step-function references compare exactly.
pub fn ks_distance<F>(cdf: &EmpiricalCdf, reference: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let n = cdf.len() as f64;
    let xs = cdf.samples();
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        sup = sup
            .max(libm::fabs(at - reference(v)))
            .max(libm::fabs(reference(v.next_down()) - below));
        i = j;
    }
    sup
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation of two equal-length series.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / libm::sqrt(sxx * syy)
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let num: f64 = xs
        .iter()
        .zip(&xs[lag.min(xs.len())..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    num / denom
}

/// Every `factor`-th element, starting with the first.
pub fn thin(xs: &[f64], factor: usize) -> Vec<f64> {
    xs.iter().step_by(factor.max(1)).copied().collect()
}
