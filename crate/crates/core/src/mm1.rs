// SPDX-License-Identifier: Apache-2.0

//! Discrete-event simulation of a FIFO single-server M/M/1 queue.
//!
//! Arrival and departure instants come from the Lindley recursion
//! `d_i = max(a_i, d_{i−1}) + s_i`; the event sequence is then swept to
//! accumulate `∫ N(τ) dτ` piecewise-constant, independently of the
//! per-message sojourns, so Little's identity can be checked between the
//! two.

use alloc::vec::Vec;

use crate::analytic::{mm1_mean_delay, mm1_sojourn_dist, ExpDist, Mm1Config};
use crate::rng::UniformSource;
use crate::stats::{self, EmpiricalCdf};
use crate::{Error, Result};

/// Fraction of leading departures dropped before stationary statistics.
pub const WARMUP_FRACTION: f64 = 0.01;
/// Keep every n-th stationary sojourn for the KS/DKW fit.
pub const THINNING_FACTOR: usize = 20;
pub const MIN_FIT_DEPARTURES: usize = 1000;
pub const FIT_CONFIDENCE: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Arrival,
    Departure,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Arrival => "arrival",
            Self::Departure => "departure",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueEvent {
    pub time: f64,
    pub kind: EventKind,
    pub message_id: u64,
    /// Number in system right after the event.
    pub occupancy: u64,
}

/// Record of one run over `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QueueTrace {
    pub horizon: f64,
    /// α(t).
    pub arrivals: u64,
    /// T(i) for every departed message, in departure (= arrival) order.
    pub sojourns: Vec<f64>,
    /// ∫₀ᵗ N(τ) dτ.
    pub occupancy_integral: f64,
    /// N(t).
    pub end_occupancy: u64,
    /// Arrival instants of messages still in the system at the horizon.
    pub in_system_arrivals: Vec<f64>,
    /// Time-sorted; ties put arrivals first, then lower message ids.
    pub events: Vec<QueueEvent>,
}

impl QueueTrace {
    /// Builds a trace from `(arrival, departure)` pairs listed in arrival
    /// order. Pairs arriving after `horizon` are ignored; departures after
    /// it leave the message in the system.
    pub fn from_schedule(horizon: f64, schedule: &[(f64, f64)]) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidHorizon(horizon));
        }
        let admitted: Vec<(u64, f64, f64)> = schedule
            .iter()
            .enumerate()
            .filter(|(_, &(a, _))| a <= horizon)
            .map(|(i, &(a, d))| (i as u64, a, d))
            .collect();

        let mut departures: Vec<(u64, f64)> = admitted
            .iter()
            .filter(|&&(_, _, d)| d <= horizon)
            .map(|&(id, _, d)| (id, d))
            .collect();
        departures.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));

        let mut events = Vec::with_capacity(admitted.len() + departures.len());
        let (mut ai, mut di) = (0, 0);
        let mut occupancy = 0u64;
        let mut integral = 0.0;
        let mut last = 0.0;
        loop {
            let next_arrival = admitted.get(ai);
            let next_departure = departures.get(di);
            let (time, kind, id) = match (next_arrival, next_departure) {
                (None, None) => break,
                (Some(&(id, a, _)), None) => (a, EventKind::Arrival, id),
                (None, Some(&(id, d))) => (d, EventKind::Departure, id),
                (Some(&(aid, a, _)), Some(&(did, d))) => {
                    if a <= d {
                        (a, EventKind::Arrival, aid)
                    } else {
                        (d, EventKind::Departure, did)
                    }
                }
            };
            integral += occupancy as f64 * (time - last);
            last = time;
            match kind {
                EventKind::Arrival => {
                    occupancy += 1;
                    ai += 1;
                }
                EventKind::Departure => {
                    occupancy -= 1;
                    di += 1;
                }
            }
            events.push(QueueEvent {
                time,
                kind,
                message_id: id,
                occupancy,
            });
        }
        integral += occupancy as f64 * (horizon - last);

        let mut sojourns = Vec::with_capacity(departures.len());
        let mut in_system_arrivals = Vec::new();
        for &(_, a, d) in &admitted {
            if d <= horizon {
                sojourns.push(d - a);
            } else {
                in_system_arrivals.push(a);
            }
        }

        Ok(Self {
            horizon,
            arrivals: admitted.len() as u64,
            sojourns,
            occupancy_integral: integral,
            end_occupancy: occupancy,
            in_system_arrivals,
            events,
        })
    }

    pub fn departures(&self) -> usize {
        self.sojourns.len()
    }

    /// Leading departures excluded from stationary statistics.
    pub fn warmup_departures(&self) -> usize {
        libm::ceil(self.departures() as f64 * WARMUP_FRACTION) as usize
    }

    /// Sojourns after the warm-up.
    pub fn stationary_sojourns(&self) -> &[f64] {
        &self.sojourns[self.warmup_departures()..]
    }

    /// Time-average of `N(τ)` from the last warm-up departure to the horizon.
    pub fn stationary_occupancy(&self) -> f64 {
        let skip = self.warmup_departures();
        let start = if skip == 0 {
            0.0
        } else {
            self.events
                .iter()
                .filter(|e| e.kind == EventKind::Departure)
                .nth(skip - 1)
                .map_or(0.0, |e| e.time)
        };
        let mut integral = 0.0;
        let mut occupancy = 0u64;
        let mut last = start;
        for e in &self.events {
            if e.time > start {
                integral += occupancy as f64 * (e.time - last);
                last = e.time;
            }
            occupancy = e.occupancy;
        }
        integral += occupancy as f64 * (self.horizon - last);
        integral / (self.horizon - start)
    }
}

/// Lindley recursion for a single FIFO server.
#[derive(Default)]
struct Server {
    free_at: f64,
}

impl Server {
    fn admit(&mut self, arrival: f64, service: f64) -> f64 {
        self.free_at = self.free_at.max(arrival) + service;
        self.free_at
    }
}

fn dists(cfg: &Mm1Config) -> (ExpDist, ExpDist) {
    (
        ExpDist::new(cfg.arrival_rate()).expect("validated by Mm1Config"),
        ExpDist::new(cfg.service_rate()).expect("validated by Mm1Config"),
    )
}

/// Runs the queue from empty over `[0, horizon]`. Each message consumes an
/// interarrival draw followed by a service draw.
pub fn simulate_queue<U: UniformSource + ?Sized>(
    cfg: &Mm1Config,
    horizon: f64,
    rng: &mut U,
) -> Result<QueueTrace> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidHorizon(horizon));
    }
    let (interarrival, service) = dists(cfg);
    let mut server = Server::default();
    let mut schedule = Vec::new();
    let mut t = 0.0;
    loop {
        t += interarrival.sample(rng);
        if t > horizon {
            break;
        }
        let d = server.admit(t, service.sample(rng));
        schedule.push((t, d));
    }
    QueueTrace::from_schedule(horizon, &schedule)
}

/// Runs until at least `min_arrivals` messages have arrived and the system
/// next empties; the horizon is that emptying instant, so `end_occupancy`
/// is zero and every arrival has a sojourn.
pub fn simulate_until_empty<U: UniformSource + ?Sized>(
    cfg: &Mm1Config,
    min_arrivals: usize,
    rng: &mut U,
) -> Result<QueueTrace> {
    if min_arrivals == 0 {
        return Err(Error::EmptyBatch);
    }
    let (interarrival, service) = dists(cfg);
    let mut server = Server::default();
    let mut schedule = Vec::with_capacity(min_arrivals + min_arrivals / 8);
    let mut t = 0.0;
    loop {
        t += interarrival.sample(rng);
        if schedule.len() >= min_arrivals && t > server.free_at {
            break;
        }
        let d = server.admit(t, service.sample(rng));
        schedule.push((t, d));
    }
    QueueTrace::from_schedule(server.free_at, &schedule)
}

/// Sojourn times of extra tagged messages injected at `tag_times` (sorted,
/// nonnegative) into a background Poisson stream. The tags share the FIFO
/// server with the background traffic and draw their own Exp(μ_s) service.
pub fn tagged_sojourns<U: UniformSource + ?Sized>(
    cfg: &Mm1Config,
    tag_times: &[f64],
    rng: &mut U,
) -> Vec<f64> {
    let (interarrival, service) = dists(cfg);
    let mut server = Server::default();
    let mut out = Vec::with_capacity(tag_times.len());
    let mut next_background = interarrival.sample(rng);
    for &tag in tag_times {
        while next_background <= tag {
            server.admit(next_background, service.sample(rng));
            next_background += interarrival.sample(rng);
        }
        out.push(server.admit(tag, service.sample(rng)) - tag);
    }
    out
}

/// Relaxation time of the queue-length process, `1 / (√μ_s − √λ_a)²`.
pub fn relaxation_time(cfg: &Mm1Config) -> f64 {
    let gap = libm::sqrt(cfg.service_rate()) - libm::sqrt(cfg.arrival_rate());
    1.0 / (gap * gap)
}

/// Empirical rates over the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStats {
    /// λ_t = α(t) / t.
    pub arrival_rate: f64,
    /// T_t = Σ T(i) / α(t), `None` when nothing arrived.
    pub mean_sojourn: Option<f64>,
    /// N_t = ∫ N / t.
    pub mean_occupancy: f64,
}

impl TraceStats {
    pub fn mean_sojourn(&self) -> Result<f64> {
        self.mean_sojourn.ok_or(Error::NoArrivals)
    }

    /// `|N_t − λ_t T_t| / N_t`.
    pub fn little_relative_error(&self) -> Result<f64> {
        Ok(
            libm::fabs(self.mean_occupancy - self.arrival_rate * self.mean_sojourn()?)
                / self.mean_occupancy,
        )
    }
}

pub fn trace_stats(trace: &QueueTrace) -> TraceStats {
    let t = trace.horizon;
    let mean_sojourn =
        (trace.arrivals > 0).then(|| trace.sojourns.iter().sum::<f64>() / trace.arrivals as f64);
    TraceStats {
        arrival_rate: trace.arrivals as f64 / t,
        mean_sojourn,
        mean_occupancy: trace.occupancy_integral / t,
    }
}

/// `|∫N − Σ_departed T(i) − Σ_in_system (t − a_i)|`: zero up to rounding
/// when the area under `N(τ)` is accounted for message by message.
pub fn little_identity_residual(trace: &QueueTrace) -> f64 {
    let departed: f64 = trace.sojourns.iter().sum();
    let resident: f64 = trace
        .in_system_arrivals
        .iter()
        .map(|a| trace.horizon - a)
        .sum();
    libm::fabs(trace.occupancy_integral - departed - resident)
}

/// Goodness of fit of the sojourn sample to `Exp(μ_s − λ_a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitReport {
    pub departures: usize,
    pub warmup: usize,
    pub thinned: usize,
    pub ks_distance: f64,
    pub dkw_epsilon: f64,
    pub confidence: f64,
    pub inside_band: bool,
    /// Lag-1 autocorrelation of the thinned series.
    pub thinned_lag1: f64,
    pub sample_mean: f64,
    pub expected_mean: f64,
}

impl FitReport {
    pub fn mean_relative_error(&self) -> f64 {
        libm::fabs(self.sample_mean - self.expected_mean) / self.expected_mean
    }
}

/// Drops the warm-up, thins by [`THINNING_FACTOR`] and compares the
/// thinned ECDF to the analytic sojourn CDF within the 99% DKW band. The
/// mean is taken over all stationary sojourns.
pub fn sojourn_fit(trace: &QueueTrace, cfg: &Mm1Config) -> Result<FitReport> {
    if trace.departures() < MIN_FIT_DEPARTURES {
        return Err(Error::InsufficientData {
            have: trace.departures(),
            need: MIN_FIT_DEPARTURES,
        });
    }
    let stationary = trace.stationary_sojourns();
    let thinned = stats::thin(stationary, THINNING_FACTOR);
    let n = thinned.len();
    let lag1 = stats::autocorrelation(&thinned, 1);
    let reference = mm1_sojourn_dist(cfg);
    let ecdf = EmpiricalCdf::new(thinned)?;
    let ks = stats::ks_distance(&ecdf, |t| reference.cdf_total(t));
    let eps = stats::dkw_epsilon(n, FIT_CONFIDENCE)?;
    Ok(FitReport {
        departures: trace.departures(),
        warmup: trace.warmup_departures(),
        thinned: n,
        ks_distance: ks,
        dkw_epsilon: eps,
        confidence: FIT_CONFIDENCE,
        inside_band: ks <= eps,
        thinned_lag1: lag1,
        sample_mean: stats::mean(stationary),
        expected_mean: mm1_mean_delay(cfg),
    })
}
