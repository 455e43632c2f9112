// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo delivery delays under the multicopy two-hop relay model.
//!
//! TTLs are unrestricted and in-range transmission is instantaneous, so a
//! copy is delivered the moment its holder meets the destination. Every
//! call draws fresh, independent inter-meeting times.

use alloc::vec::Vec;

use crate::analytic::{ExpDist, MtrConfig};
use crate::rng::{RngStream, UniformSource};
use crate::{Error, Result};

/// Number of draws per independently seeded chunk in seeded batches.
pub const BATCH_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DeliveryMode {
    /// Relays already hold copies; the delay is the minimum of the `M`
    /// destination meeting times.
    #[default]
    MinOfPaths,
    /// The source must first meet each relay; a relayed copy arrives at
    /// `T_{s r_i} + T_{r_i d}`.
    StrictTwoHop,
}

/// Destination meeting times for one message.
#[derive(Clone, Debug, PartialEq)]
pub struct MeetingSample {
    pub source_dest: f64,
    /// One entry per relay, `node_count − 2` in all.
    pub relay_dest: Vec<f64>,
}

impl MeetingSample {
    pub fn draw<U: UniformSource + ?Sized>(cfg: &MtrConfig, rng: &mut U) -> Self {
        let meet = meeting_dist(cfg);
        let source_dest = meet.sample(rng);
        let relay_dest = (0..cfg.relays()).map(|_| meet.sample(rng)).collect();
        Self {
            source_dest,
            relay_dest,
        }
    }

    /// First-delivery time: the minimum over all copies.
    pub fn delivery_delay(&self) -> f64 {
        self.relay_dest
            .iter()
            .copied()
            .fold(self.source_dest, f64::min)
    }
}

fn meeting_dist(cfg: &MtrConfig) -> ExpDist {
    ExpDist::new(cfg.meeting_rate()).expect("validated by MtrConfig")
}

/// One transmission delay `T_{D_m}`.
///
/// Draw order is fixed: `T_sd` first, then per relay either `T_{r_i d}`
/// (MinOfPaths) or `T_{s r_i}` followed by `T_{r_i d}` (StrictTwoHop). With
/// no relays both modes consume exactly one draw and agree.
pub fn sample_delivery_delay<U: UniformSource + ?Sized>(
    cfg: &MtrConfig,
    mode: DeliveryMode,
    rng: &mut U,
) -> f64 {
    let meet = meeting_dist(cfg);
    let mut best = meet.sample(rng);
    for _ in 0..cfg.relays() {
        let via_relay = match mode {
            DeliveryMode::MinOfPaths => meet.sample(rng),
            DeliveryMode::StrictTwoHop => meet.sample(rng) + meet.sample(rng),
        };
        best = best.min(via_relay);
    }
    best
}

/// `n` independent delays drawn from one stream.
pub fn delivery_delay_batch<U: UniformSource + ?Sized>(
    cfg: &MtrConfig,
    mode: DeliveryMode,
    n: usize,
    rng: &mut U,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok((0..n)
        .map(|_| sample_delivery_delay(cfg, mode, rng))
        .collect())
}

/// Chunk `index` of a seeded batch: `len` draws from stream `index`.
pub fn delivery_delay_chunk(
    cfg: &MtrConfig,
    mode: DeliveryMode,
    seed: u64,
    index: u64,
    len: usize,
) -> Vec<f64> {
    let mut rng = RngStream::new(seed, index);
    (0..len)
        .map(|_| sample_delivery_delay(cfg, mode, &mut rng))
        .collect()
}

/// `n` delays split into [`BATCH_CHUNK`]-sized chunks, chunk `i` drawn from
/// stream `i` of `seed`. Chunks can be produced in any order or in
/// parallel and concatenate to the same result.
pub fn delivery_delay_batch_seeded(
    cfg: &MtrConfig,
    mode: DeliveryMode,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let mut out = Vec::with_capacity(n);
    for (index, len) in chunk_lengths(n).enumerate() {
        out.extend(delivery_delay_chunk(cfg, mode, seed, index as u64, len));
    }
    Ok(out)
}

/// Lengths of the chunks a seeded batch of `n` is split into.
pub fn chunk_lengths(n: usize) -> impl Iterator<Item = usize> {
    (0..n.div_ceil(BATCH_CHUNK)).map(move |i| BATCH_CHUNK.min(n - i * BATCH_CHUNK))
}
