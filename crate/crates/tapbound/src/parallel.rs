// SPDX-License-Identifier: Apache-2.0

//! Parallel drivers. Every unit of work draws from its own seeded stream
//! and results are collected in index order, so output is identical for
//! any thread count.

use rayon::prelude::*;
use tapbound_core::analytic::MtrConfig;
use tapbound_core::engine::{self, ProgressSample, ScenarioConfig};
use tapbound_core::mtr::{self, DeliveryMode};

fn install<T: Send>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(work),
    }
}

/// All trials of `cfg`. `threads = None` uses the global pool.
pub fn run_trials(cfg: &ScenarioConfig, threads: Option<usize>) -> Vec<ProgressSample> {
    if threads == Some(1) {
        return engine::run_trials(cfg);
    }
    install(threads, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| engine::trial_sample(cfg, i))
            .collect()
    })
}

/// Same output as [`mtr::delivery_delay_batch_seeded`].
pub fn delivery_delays(
    cfg: &MtrConfig,
    mode: DeliveryMode,
    n: usize,
    seed: u64,
    threads: Option<usize>,
) -> Vec<f64> {
    let chunks: Vec<(u64, usize)> = mtr::chunk_lengths(n)
        .enumerate()
        .map(|(i, len)| (i as u64, len))
        .collect();
    install(threads, || {
        chunks
            .par_iter()
            .flat_map_iter(|&(index, len)| mtr::delivery_delay_chunk(cfg, mode, seed, index, len))
            .collect()
    })
}
