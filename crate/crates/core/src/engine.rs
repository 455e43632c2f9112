// SPDX-License-Identifier: Apache-2.0

//! End-to-end worst-case progress time and bound verification.
//!
//! One propagation needs `N_M = 4R` messages. With no concurrency the total
//! time is `T_S = T_D + T_P`, the sums of all per-message transmission and
//! processing delays. Whenever `T_D ≤ x` and `T_P ≤ y` also `T_S ≤ x + y`,
//! and with independent delays this yields
//! `P(T_S ≤ x + y) ≥ F_Er(x; N_M, λ_MTR·M) · F_Er(y; N_M, μ_s − λ_a)`.
//! [`verify_bound`] checks that inequality, and the steps leading to it,
//! against Monte Carlo samples.

use alloc::vec::Vec;

use crate::analytic::{
    message_count, mm1_sojourn_dist, mtr_delay_dist, progress_bound, Mm1Config, MtrConfig,
};
use crate::mm1::{relaxation_time, tagged_sojourns};
use crate::mtr::{sample_delivery_delay, DeliveryMode};
use crate::rng::{RngStream, UniformSource};
use crate::stats::{self, EmpiricalCdf};
use crate::{Error, Result};

/// Largest DKW half-width [`verify_bound`] accepts before asking for more
/// trials.
pub const DEFAULT_MAX_EPSILON: f64 = 0.05;
/// Tagged messages in simulated-queue mode are injected this many
/// relaxation times apart (and after the same warm-up).
pub const TAG_SPACING_RELAXATIONS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProcessingSource {
    /// Draw each processing delay from `Exp(μ_s − λ_a)`.
    #[default]
    AnalyticSojourn,
    /// Inject the protocol messages as tagged arrivals into a simulated
    /// M/M/1 queue carrying background traffic at `λ_a`, and measure them.
    SimulatedQueue,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub replica_count: u32,
    pub mtr: MtrConfig,
    pub queue: Mm1Config,
    pub trials: usize,
    pub seed: u64,
    pub processing_source: ProcessingSource,
}

impl ScenarioConfig {
    pub fn new(
        replica_count: u32,
        mtr: MtrConfig,
        queue: Mm1Config,
        trials: usize,
        seed: u64,
        processing_source: ProcessingSource,
    ) -> Result<Self> {
        if replica_count == 0 {
            return Err(Error::ZeroReplicas);
        }
        if trials == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(Self {
            replica_count,
            mtr,
            queue,
            trials,
            seed,
            processing_source,
        })
    }

    /// `N_M = 4R`.
    pub fn message_count(&self) -> u64 {
        message_count(u64::from(self.replica_count)).expect("replica_count validated")
    }

    /// `λ_MTR · M`.
    pub fn transmission_rate(&self) -> f64 {
        mtr_delay_dist(&self.mtr).rate()
    }

    /// `μ_s − λ_a`.
    pub fn processing_rate(&self) -> f64 {
        mm1_sojourn_dist(&self.queue).rate()
    }

    pub fn analytic_bound(&self, x: f64, y: f64) -> Result<f64> {
        progress_bound(
            x,
            y,
            self.message_count(),
            self.transmission_rate(),
            self.processing_rate(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgressSample {
    /// T_D.
    pub total_transmission: f64,
    /// T_P.
    pub total_processing: f64,
    /// T_S = T_D + T_P.
    pub total: f64,
}

/// One worst-case progress time: all `4R` transmission delays are drawn
/// first, then all `4R` processing delays, and everything is summed with
/// no overlap.
pub fn sample_progress_time<U: UniformSource + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut U,
) -> ProgressSample {
    let n = cfg.message_count();
    let total_transmission: f64 = (0..n)
        .map(|_| sample_delivery_delay(&cfg.mtr, DeliveryMode::MinOfPaths, rng))
        .sum();
    let total_processing: f64 = match cfg.processing_source {
        ProcessingSource::AnalyticSojourn => {
            let sojourn = mm1_sojourn_dist(&cfg.queue);
            (0..n).map(|_| sojourn.sample(rng)).sum()
        }
        ProcessingSource::SimulatedQueue => {
            tagged_sojourns(&cfg.queue, &tag_schedule(&cfg.queue, n), rng)
                .iter()
                .sum()
        }
    };
    ProgressSample {
        total_transmission,
        total_processing,
        total: total_transmission + total_processing,
    }
}

/// Injection instants for `n` tagged messages, spaced far enough apart
/// that each sees an (approximately) independent stationary queue.
pub fn tag_schedule(queue: &Mm1Config, n: u64) -> Vec<f64> {
    let gap = TAG_SPACING_RELAXATIONS * relaxation_time(queue);
    (1..=n).map(|j| j as f64 * gap).collect()
}

/// Trial `index` always draws from stream `index` of the scenario seed, so
/// trials can run in any order or in parallel.
pub fn trial_sample(cfg: &ScenarioConfig, index: u64) -> ProgressSample {
    sample_progress_time(cfg, &mut RngStream::new(cfg.seed, index))
}

/// All `cfg.trials` samples, in trial order.
pub fn run_trials(cfg: &ScenarioConfig) -> Vec<ProgressSample> {
    (0..cfg.trials as u64)
        .map(|i| trial_sample(cfg, i))
        .collect()
}

/// Empirical CDF of `T_S` over the scenario's trials.
pub fn empirical_progress_cdf(cfg: &ScenarioConfig) -> EmpiricalCdf {
    progress_cdf(&run_trials(cfg))
}

pub fn progress_cdf(samples: &[ProgressSample]) -> EmpiricalCdf {
    EmpiricalCdf::new(samples.iter().map(|s| s.total).collect()).expect("at least one trial")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundPoint {
    pub x: f64,
    pub y: f64,
    pub analytic_bound: f64,
    /// P̂(T_S ≤ x + y).
    pub empirical_prob: f64,
    pub dkw_epsilon: f64,
    /// `empirical_prob ≥ analytic_bound − dkw_epsilon`.
    pub satisfied: bool,
    /// P̂(T_D ≤ x ∧ T_P ≤ y).
    pub joint_prob: f64,
    /// P̂(T_D ≤ x) · P̂(T_P ≤ y).
    pub marginal_product: f64,
    /// `empirical_prob ≥ joint_prob − 2ε`.
    pub monotonicity_ok: bool,
    /// `|joint_prob − marginal_product| ≤ 3ε`.
    pub product_rule_ok: bool,
    /// Trials with `T_D ≤ x`, `T_P ≤ y` and yet `T_S > x + y`.
    pub implication_violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub trials: usize,
    pub confidence: f64,
    pub dkw_epsilon: f64,
    /// Sample correlation of `T_D` and `T_P`.
    pub correlation: f64,
    pub points: Vec<BoundPoint>,
}

impl BoundReport {
    pub fn satisfied_count(&self) -> usize {
        self.points.iter().filter(|p| p.satisfied).count()
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied_count() == self.points.len()
    }

    pub fn product_rule_count(&self) -> usize {
        self.points.iter().filter(|p| p.product_rule_ok).count()
    }

    pub fn implication_violations(&self) -> usize {
        self.points.iter().map(|p| p.implication_violations).sum()
    }

    /// The bound and the deterministic steps behind it all hold.
    pub fn checks_passed(&self) -> bool {
        self.all_satisfied()
            && self.implication_violations() == 0
            && self.points.iter().all(|p| p.monotonicity_ok)
    }
}

/// Runs the scenario's trials and checks the bound at every grid point.
pub fn verify_bound(
    cfg: &ScenarioConfig,
    grid: &[(f64, f64)],
    confidence: f64,
) -> Result<BoundReport> {
    check_grid(grid)?;
    check_trials(cfg.trials, confidence, DEFAULT_MAX_EPSILON)?;
    verify_bound_samples(cfg, &run_trials(cfg), grid, confidence, DEFAULT_MAX_EPSILON)
}

fn check_grid(grid: &[(f64, f64)]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &(x, y) in grid {
        for v in [x, y] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::NegativeTime(v));
            }
        }
    }
    Ok(())
}

/// Rejects trial counts whose DKW half-width exceeds `max_epsilon`.
pub fn check_trials(trials: usize, confidence: f64, max_epsilon: f64) -> Result<f64> {
    let epsilon = stats::dkw_epsilon(trials.max(1), confidence)?;
    if trials == 0 || epsilon > max_epsilon {
        return Err(Error::InsufficientTrials {
            trials,
            epsilon,
            limit: max_epsilon,
            required: stats::dkw_required_samples(max_epsilon, confidence)?,
        });
    }
    Ok(epsilon)
}

/// [`verify_bound`] over precomputed samples.
pub fn verify_bound_samples(
    cfg: &ScenarioConfig,
    samples: &[ProgressSample],
    grid: &[(f64, f64)],
    confidence: f64,
    max_epsilon: f64,
) -> Result<BoundReport> {
    check_grid(grid)?;
    let eps = check_trials(samples.len(), confidence, max_epsilon)?;
    let n = samples.len() as f64;
    let totals = progress_cdf(samples);
    let transmission = EmpiricalCdf::new(samples.iter().map(|s| s.total_transmission).collect())?;
    let processing = EmpiricalCdf::new(samples.iter().map(|s| s.total_processing).collect())?;

    let mut points = Vec::with_capacity(grid.len());
    for &(x, y) in grid {
        let analytic_bound = cfg.analytic_bound(x, y)?;
        let empirical_prob = totals.eval(x + y);
        let mut joint = 0usize;
        let mut violations = 0usize;
        for s in samples {
            if s.total_transmission <= x && s.total_processing <= y {
                joint += 1;
                if s.total > x + y {
                    violations += 1;
                }
            }
        }
        let joint_prob = joint as f64 / n;
        let marginal_product = transmission.eval(x) * processing.eval(y);
        points.push(BoundPoint {
            x,
            y,
            analytic_bound,
            empirical_prob,
            dkw_epsilon: eps,
            satisfied: empirical_prob >= analytic_bound - eps,
            joint_prob,
            marginal_product,
            monotonicity_ok: empirical_prob >= joint_prob - 2.0 * eps,
            product_rule_ok: libm::fabs(joint_prob - marginal_product) <= 3.0 * eps,
            implication_violations: violations,
        });
    }

    let td: Vec<f64> = samples.iter().map(|s| s.total_transmission).collect();
    let tp: Vec<f64> = samples.iter().map(|s| s.total_processing).collect();
    Ok(BoundReport {
        trials: samples.len(),
        confidence,
        dkw_epsilon: eps,
        correlation: stats::correlation(&td, &tp),
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestSplit {
    pub x: f64,
    pub y: f64,
    pub bound: f64,
}

/// Maximizes the product bound over `x ∈ {0, t/(g−1), …, t}`, `y = t − x`.
/// The first maximizer in grid order wins ties.
pub fn best_split_bound(cfg: &ScenarioConfig, t: f64, grid_points: usize) -> Result<BestSplit> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    if grid_points < 2 {
        return Err(Error::InvalidGridPoints(grid_points));
    }
    let last = (grid_points - 1) as f64;
    let mut best: Option<BestSplit> = None;
    for i in 0..grid_points {
        let x = if i == grid_points - 1 {
            t
        } else {
            t * i as f64 / last
        };
        let y = (t - x).max(0.0);
        let bound = cfg.analytic_bound(x, y)?;
        if best.is_none_or(|b| bound > b.bound) {
            best = Some(BestSplit { x, y, bound });
        }
    }
    Ok(best.expect("grid_points >= 2"))
}
