// SPDX-License-Identifier: Apache-2.0

//! Closed-form delay distributions and the worst-case progress bound.
//!
//! Transmission delays follow the multicopy two-hop relay (MTR) model:
//! with `M + 1` mobile nodes and i.i.d. `Exp(λ_MTR)` inter-meeting times,
//! a message is delivered at the minimum of `M` meeting times, which is
//! `Exp(λ_MTR · M)`. Processing delays are M/M/1 sojourn times,
//! `Exp(μ_s − λ_a)`. Summing `N_M = 4R` of each gives two Erlang variables,
//! and the progress bound is the product of their CDFs.

use crate::rng::UniformSource;
use crate::{Error, Result};

/// Utilization above which a queue is flagged as heavy traffic.
pub const HEAVY_TRAFFIC_UTILIZATION: f64 = 0.99;

fn check_rate(rate: f64) -> Result<f64> {
    if rate > 0.0 && rate.is_finite() {
        Ok(rate)
    } else {
        Err(Error::InvalidRate(rate))
    }
}

fn check_time(t: f64) -> Result<f64> {
    // NaN fails the comparison as well.
    if t >= 0.0 {
        Ok(t)
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// Exponential distribution with rate in 1/seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpDist {
    rate: f64,
}

impl ExpDist {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self {
            rate: check_rate(rate)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        exp_cdf(self, t)
    }

    /// CDF extended by zero to negative arguments, for use as a KS reference.
    pub fn cdf_total(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -libm::expm1(-self.rate * t)
        }
    }

    pub fn sample<U: UniformSource + ?Sized>(&self, rng: &mut U) -> f64 {
        -libm::log(rng.next_unit()) / self.rate
    }
}

/// `1 − e^(−rate·t)`.
pub fn exp_cdf(d: &ExpDist, t: f64) -> Result<f64> {
    let t = check_time(t)?;
    Ok(d.cdf_total(t))
}

/// Inverse-transform draw, `−ln(u) / rate` with `u` uniform on `(0, 1]`.
pub fn exp_sample<U: UniformSource + ?Sized>(d: &ExpDist, rng: &mut U) -> f64 {
    d.sample(rng)
}

/// Erlang distribution: the sum of `shape` i.i.d. exponentials of `rate`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErlangDist {
    shape: u64,
    rate: f64,
}

impl ErlangDist {
    pub fn new(shape: u64, rate: f64) -> Result<Self> {
        if shape == 0 {
            return Err(Error::ZeroShape);
        }
        Ok(Self {
            shape,
            rate: check_rate(rate)?,
        })
    }

    pub fn shape(&self) -> u64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape as f64 / self.rate
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        erlang_cdf(self, t)
    }

    /// CDF extended by zero to negative arguments.
    pub fn cdf_total(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if self.shape == 1 {
            return -libm::expm1(-self.rate * t);
        }
        erlang_cdf_positive(self.shape, self.rate * t)
    }

    pub fn sample<U: UniformSource + ?Sized>(&self, rng: &mut U) -> f64 {
        let exp = ExpDist { rate: self.rate };
        (0..self.shape).map(|_| exp.sample(rng)).sum()
    }
}

/// `1 − Σ_{n<k} e^(−λt) (λt)^n / n!`.
///
/// Whichever tail is smaller is summed, so the result keeps its relative
/// precision at both ends. The first term comes from `lgamma` and the rest
/// from the ratio `term_{n+1} = term_n · λt / (n + 1)` (or its inverse when
/// walking down), which stays finite for shapes in the tens of thousands.
pub fn erlang_cdf(d: &ErlangDist, t: f64) -> Result<f64> {
    let t = check_time(t)?;
    Ok(d.cdf_total(t))
}

fn erlang_cdf_positive(shape: u64, x: f64) -> f64 {
    if x.is_infinite() {
        return 1.0;
    }
    let k = shape as f64;
    let ln_x = libm::log(x);
    if x < k {
        // Lower tail: Σ_{n ≥ k} e^(−x) x^n / n!.
        let mut term = libm::exp(-x + k * ln_x - libm::lgamma(k + 1.0));
        let mut sum = term;
        let mut n = k;
        while term > sum * 1e-17 {
            n += 1.0;
            term *= x / n;
            sum += term;
        }
        sum.clamp(0.0, 1.0)
    } else {
        // Upper tail: Σ_{n < k} e^(−x) x^n / n!, walking down from n = k − 1.
        let mut term = libm::exp(-x + (k - 1.0) * ln_x - libm::lgamma(k));
        let mut sum = term;
        let mut n = k - 1.0;
        while n > 0.0 && term > sum * 1e-17 {
            term *= n / x;
            sum += term;
            n -= 1.0;
        }
        (1.0 - sum).clamp(0.0, 1.0)
    }
}

/// Multicopy two-hop relay network: `node_count = M + 1` nodes (one source,
/// one destination, `M − 1` relays) with pairwise `Exp(meeting_rate)`
/// inter-meeting times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MtrConfig {
    meeting_rate: f64,
    node_count: u64,
}

impl MtrConfig {
    pub fn new(meeting_rate: f64, node_count: u64) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidNodeCount(node_count));
        }
        Ok(Self {
            meeting_rate: check_rate(meeting_rate)?,
            node_count,
        })
    }

    pub fn meeting_rate(&self) -> f64 {
        self.meeting_rate
    }

    pub fn node_count(&self) -> u64 {
        self.node_count
    }

    /// `M`: the number of delivery paths (direct plus one per relay).
    pub fn paths(&self) -> u64 {
        self.node_count - 1
    }

    pub fn relays(&self) -> u64 {
        self.node_count - 2
    }
}

/// `P(T_D ≤ t) = 1 − (1 − (1 − e^(−λ_MTR t)))^M`, evaluated as written.
pub fn mtr_delivery_cdf(cfg: &MtrConfig, t: f64) -> Result<f64> {
    let t = check_time(t)?;
    let single = 1.0 - libm::exp(-cfg.meeting_rate * t);
    let miss = libm::pow(1.0 - single, cfg.paths() as f64);
    Ok((1.0 - miss).clamp(0.0, 1.0))
}

/// The per-message transmission delay, `Exp(λ_MTR · M)`.
pub fn mtr_delay_dist(cfg: &MtrConfig) -> ExpDist {
    ExpDist {
        rate: cfg.meeting_rate * cfg.paths() as f64,
    }
}

/// Stable M/M/1 queue, `0 < arrival_rate < service_rate`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mm1Config {
    arrival_rate: f64,
    service_rate: f64,
}

impl Mm1Config {
    pub fn new(arrival_rate: f64, service_rate: f64) -> Result<Self> {
        let arrival_rate = check_rate(arrival_rate)?;
        let service_rate = check_rate(service_rate)?;
        if arrival_rate >= service_rate {
            return Err(Error::Unstable {
                arrival: arrival_rate,
                service: service_rate,
            });
        }
        Ok(Self {
            arrival_rate,
            service_rate,
        })
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn service_rate(&self) -> f64 {
        self.service_rate
    }

    pub fn utilization(&self) -> f64 {
        self.arrival_rate / self.service_rate
    }

    /// Valid but slow to converge in simulation.
    pub fn is_heavy_traffic(&self) -> bool {
        self.utilization() > HEAVY_TRAFFIC_UTILIZATION
    }
}

/// Mean number in system, `λ_a / (μ_s − λ_a)`.
pub fn mm1_mean_queue_len(cfg: &Mm1Config) -> f64 {
    cfg.arrival_rate / (cfg.service_rate - cfg.arrival_rate)
}

/// Mean sojourn time, `1 / (μ_s − λ_a)`.
pub fn mm1_mean_delay(cfg: &Mm1Config) -> f64 {
    1.0 / (cfg.service_rate - cfg.arrival_rate)
}

/// Sojourn-time distribution, `Exp(μ_s − λ_a)`.
pub fn mm1_sojourn_dist(cfg: &Mm1Config) -> ExpDist {
    ExpDist {
        rate: cfg.service_rate - cfg.arrival_rate,
    }
}

/// Messages needed for one propagation: four per replica.
pub fn message_count(replica_count: u64) -> Result<u64> {
    if replica_count == 0 {
        return Err(Error::ZeroReplicas);
    }
    Ok(4 * replica_count)
}

/// Lower bound on `P(T_S ≤ x + y)`:
/// `F_Er(x; n, trans_rate) · F_Er(y; n, proc_rate)`.
pub fn progress_bound(
    x: f64,
    y: f64,
    n_messages: u64,
    trans_rate: f64,
    proc_rate: f64,
) -> Result<f64> {
    let transmission = ErlangDist::new(n_messages, trans_rate)?;
    let processing = ErlangDist::new(n_messages, proc_rate)?;
    Ok(erlang_cdf(&transmission, x)? * erlang_cdf(&processing, y)?)
}
