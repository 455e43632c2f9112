// SPDX-License-Identifier: Apache-2.0

mod common;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use common::{dkw99, erlang_pdf, ks, simpson, XorShift};
use tapbound_core::analytic::*;
use tapbound_core::engine::*;
use tapbound_core::mm1::*;
use tapbound_core::mtr::*;
use tapbound_core::rng::RngStream;
use tapbound_core::stats::{self, EmpiricalCdf};

#[test]
fn exp_cdf_matches_monte_carlo_fraction() {
    let mut rng = XorShift::new(17);
    let n = 1_000_000;
    let hits = (0..n).filter(|_| rng.exp(2.0) <= 0.5).count();
    let mc = hits as f64 / n as f64;
    let exact = exp_cdf(&ExpDist::new(2.0).unwrap(), 0.5).unwrap();
    assert!((mc - exact).abs() < dkw99(n), "{mc} vs {exact}");
    assert!((exact - 0.632_121).abs() < 1e-6);
}

#[test]
fn exp_sample_means() {
    for (rate, seed) in [(1.0, 1), (4.0, 2)] {
        let d = ExpDist::new(rate).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| exp_sample(&d, &mut rng)).collect();
        let m = stats::mean(&xs);
        assert!((m * rate - 1.0).abs() < 0.02, "rate {rate}: mean {m}");
    }
}

#[test]
fn exp_sample_reproducible() {
    let d = ExpDist::new(1.0).unwrap();
    let a = exp_sample(&d, &mut RngStream::new(99, 3));
    let b = exp_sample(&d, &mut RngStream::new(99, 3));
    assert_eq!(a, b);
}

#[test]
fn exp_samples_inside_dkw_band() {
    for (rate, seed) in [(0.3, 10), (1.0, 11), (7.5, 12)] {
        let d = ExpDist::new(rate).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let ecdf = EmpiricalCdf::new(xs).unwrap();
        let dist = stats::ks_distance(&ecdf, |t| d.cdf_total(t));
        assert!(
            dist <= stats::dkw_epsilon(100_000, 0.99).unwrap(),
            "rate {rate}: {dist}"
        );
    }
}

#[test]
fn sums_of_exponentials_follow_erlang() {
    for (k, rate, seed) in [(2u64, 1.0, 20), (5, 0.5, 21), (12, 3.0, 22)] {
        let e = ExpDist::new(rate).unwrap();
        let er = ErlangDist::new(k, rate).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| (0..k).map(|_| e.sample(&mut rng)).sum())
            .collect();
        let dist = stats::ks_distance(&EmpiricalCdf::new(xs).unwrap(), |t| er.cdf_total(t));
        assert!(dist <= dkw99(100_000), "k {k}: {dist}");
    }
}

#[test]
fn erlang_cdf_matches_quadrature() {
    for (k, rate, t) in [
        (2u32, 1.0, 1.0),
        (4, 2.0, 3.5),
        (12, 2.0, 6.0),
        (12, 3.0, 2.0),
        (30, 0.7, 50.0),
    ] {
        let quad = simpson(|s| erlang_pdf(k, rate, s), 0.0, t, 20_000);
        let exact = erlang_cdf(&ErlangDist::new(u64::from(k), rate).unwrap(), t).unwrap();
        assert!(
            (quad - exact).abs() < 1e-10,
            "k {k} rate {rate} t {t}: {quad} vs {exact}"
        );
    }
    let two = simpson(|s| erlang_pdf(2, 1.0, s), 0.0, 1.0, 20_000);
    assert!((two - 0.264_241).abs() < 1e-6);
}

#[test]
fn progress_bound_matches_quadrature_product() {
    let fx = simpson(|s| erlang_pdf(4, 2.0, s), 0.0, 10.0, 20_000);
    let fy = simpson(|s| erlang_pdf(4, 1.0, s), 0.0, 10.0, 20_000);
    let bound = progress_bound(10.0, 10.0, 4, 2.0, 1.0).unwrap();
    assert!((bound - fx * fy).abs() < 1e-10, "{bound} vs {}", fx * fy);
}

#[test]
fn mtr_cdf_matches_min_of_exponentials() {
    let mut rng = XorShift::new(5);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| (0..5).map(|_| rng.exp(0.1)).fold(f64::INFINITY, f64::min) <= 2.0)
        .count();
    let mc = hits as f64 / n as f64;
    let exact = mtr_delivery_cdf(&MtrConfig::new(0.1, 6).unwrap(), 2.0).unwrap();
    assert!((mc - exact).abs() < dkw99(n), "{mc} vs {exact}");
}

#[test]
fn min_of_paths_samples_fit_both_cdf_forms() {
    let cfg = MtrConfig::new(0.1, 6).unwrap();
    let xs = delivery_delay_batch(
        &cfg,
        DeliveryMode::MinOfPaths,
        100_000,
        &mut RngStream::new(31, 0),
    )
    .unwrap();
    let ecdf = EmpiricalCdf::new(xs).unwrap();
    let eps = stats::dkw_epsilon(100_000, 0.99).unwrap();
    let eq3 = stats::ks_distance(&ecdf, |t| mtr_delivery_cdf(&cfg, t.max(0.0)).unwrap());
    let ident = mtr_delay_dist(&cfg);
    let as_exp = stats::ks_distance(&ecdf, |t| ident.cdf_total(t));
    assert!(eq3 <= eps, "{eq3}");
    assert!(as_exp <= eps, "{as_exp}");
    assert!((ecdf.eval(2.0) - 0.632_121).abs() < eps);
}

#[test]
fn batch_mean_matches_combined_rate() {
    let cfg = MtrConfig::new(0.5, 5).unwrap();
    let xs = delivery_delay_batch(
        &cfg,
        DeliveryMode::MinOfPaths,
        100_000,
        &mut RngStream::new(8, 0),
    )
    .unwrap();
    let m = stats::mean(&xs);
    assert!((m - 0.5).abs() / 0.5 < 0.03, "{m}");
}

#[test]
fn strict_two_hop_is_stochastically_slower() {
    let cfg = MtrConfig::new(0.1, 6).unwrap();
    let n = 1_000_000;
    let direct = EmpiricalCdf::new(
        delivery_delay_batch_seeded(&cfg, DeliveryMode::MinOfPaths, n, 40).unwrap(),
    )
    .unwrap();
    let strict = EmpiricalCdf::new(
        delivery_delay_batch_seeded(&cfg, DeliveryMode::StrictTwoHop, n, 41).unwrap(),
    )
    .unwrap();
    let eps = dkw99(n);
    for i in 1..=200 {
        let t = f64::from(i) * 0.1;
        assert!(strict.eval(t) <= direct.eval(t) + 2.0 * eps, "t {t}");
    }
    // And strictly slower somewhere.
    assert!(strict.eval(2.0) < direct.eval(2.0) - 2.0 * eps);
}

#[test]
fn modes_agree_without_relays() {
    let cfg = MtrConfig::new(0.3, 2).unwrap();
    let a = delivery_delay_batch_seeded(&cfg, DeliveryMode::MinOfPaths, 5000, 6).unwrap();
    let b = delivery_delay_batch_seeded(&cfg, DeliveryMode::StrictTwoHop, 5000, 6).unwrap();
    assert_eq!(a, b);
}

#[test]
fn more_relays_never_slow_delivery() {
    let n = 100_000;
    let eps = dkw99(n);
    let cdfs: Vec<EmpiricalCdf> = (2..=7)
        .map(|nodes| {
            let cfg = MtrConfig::new(0.2, nodes).unwrap();
            EmpiricalCdf::new(
                delivery_delay_batch_seeded(&cfg, DeliveryMode::MinOfPaths, n, nodes).unwrap(),
            )
            .unwrap()
        })
        .collect();
    for pair in cdfs.windows(2) {
        for i in 1..=100 {
            let t = f64::from(i) * 0.1;
            assert!(pair[1].eval(t) + 2.0 * eps >= pair[0].eval(t));
        }
    }
}

/// Event-list M/M/1 simulator: a time-ordered heap of arrival and departure
/// events and an explicit waiting line. Returns (time-average N, mean sojourn).
fn reference_mm1(arrival: f64, service: f64, horizon: f64, seed: u64) -> (f64, f64) {
    #[derive(PartialEq)]
    struct Ev(f64, u8);
    impl Eq for Ev {}
    impl PartialOrd for Ev {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Ev {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
        }
    }
    let mut rng = XorShift::new(seed);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Ev(rng.exp(arrival), 0)));
    let mut line: std::collections::VecDeque<f64> = Default::default();
    let (mut now, mut area, mut total_sojourn, mut served) = (0.0, 0.0, 0.0, 0u64);
    while let Some(Reverse(Ev(t, kind))) = heap.pop() {
        if t > horizon {
            area += line.len() as f64 * (horizon - now);
            break;
        }
        area += line.len() as f64 * (t - now);
        now = t;
        if kind == 0 {
            line.push_back(t);
            if line.len() == 1 {
                heap.push(Reverse(Ev(t + rng.exp(service), 1)));
            }
            heap.push(Reverse(Ev(t + rng.exp(arrival), 0)));
        } else {
            let arrived = line.pop_front().unwrap();
            total_sojourn += t - arrived;
            served += 1;
            if !line.is_empty() {
                heap.push(Reverse(Ev(t + rng.exp(service), 1)));
            }
        }
    }
    (area / horizon, total_sojourn / served as f64)
}

#[test]
fn reference_simulator_agrees_with_closed_forms() {
    let (n, t) = reference_mm1(8.0, 10.0, 100_000.0, 3);
    assert!((n - 4.0).abs() / 4.0 < 0.05, "{n}");
    assert!((t - 0.5).abs() / 0.5 < 0.05, "{t}");
}

#[test]
fn mean_queue_length_matches_long_run_occupancy() {
    for (lambda, mu, horizon, seed) in [(8.0, 10.0, 100_000.0, 50), (0.5, 1.0, 200_000.0, 51)] {
        let cfg = Mm1Config::new(lambda, mu).unwrap();
        let trace = simulate_queue(&cfg, horizon, &mut RngStream::new(seed, 0)).unwrap();
        let sim = trace.stationary_occupancy();
        let exact = mm1_mean_queue_len(&cfg);
        assert!(
            (sim - exact).abs() / exact < 0.05,
            "λ {lambda}: {sim} vs {exact}"
        );
        let (reference, _) = reference_mm1(lambda, mu, horizon, seed);
        assert!((sim - reference).abs() / exact < 0.05);
    }
}

#[test]
fn mean_delay_matches_long_run_sojourns() {
    for (lambda, mu, seed) in [(8.0, 10.0, 60), (2.0, 3.0, 61)] {
        let cfg = Mm1Config::new(lambda, mu).unwrap();
        let trace = simulate_queue(&cfg, 100_000.0, &mut RngStream::new(seed, 0)).unwrap();
        let fit = sojourn_fit(&trace, &cfg).unwrap();
        assert!(
            fit.mean_relative_error() < 0.05,
            "λ {lambda}: {}",
            fit.sample_mean
        );
        assert_eq!(fit.expected_mean, mm1_mean_delay(&cfg));
    }
}

#[test]
fn arrival_process_is_poisson() {
    let cfg = Mm1Config::new(1.0, 2.0).unwrap();
    let horizon = 100_000.0;
    let trace = simulate_queue(&cfg, horizon, &mut RngStream::new(70, 0)).unwrap();
    let rate = trace.arrivals as f64 / horizon;
    assert!((rate - 1.0).abs() < 0.02, "{rate}");

    let windows = horizon as usize;
    let mut counts = vec![0.0f64; windows];
    for e in trace.events.iter().filter(|e| e.kind == EventKind::Arrival) {
        counts[(e.time as usize).min(windows - 1)] += 1.0;
    }
    let dispersion = stats::variance(&counts) / stats::mean(&counts);
    assert!((0.9..=1.1).contains(&dispersion), "{dispersion}");
}

#[test]
fn little_holds_on_runs_ending_empty() {
    let cfg = Mm1Config::new(1.0, 2.0).unwrap();
    let trace = simulate_until_empty(&cfg, 100_000, &mut RngStream::new(80, 0)).unwrap();
    assert!(little_identity_residual(&trace) <= 1e-6 * trace.occupancy_integral);
    let s = trace_stats(&trace);
    assert!(s.little_relative_error().unwrap() <= 0.05);
}

#[test]
fn little_residual_vanishes_on_truncated_runs_too() {
    let cfg = Mm1Config::new(3.0, 4.0).unwrap();
    for seed in 0..5 {
        let trace = simulate_queue(&cfg, 2_000.0, &mut RngStream::new(seed, 9)).unwrap();
        assert!(little_identity_residual(&trace) <= 1e-6 * trace.occupancy_integral);
        assert_eq!(
            trace.arrivals,
            trace.departures() as u64 + trace.end_occupancy
        );
    }
}

#[test]
fn little_error_shrinks_with_horizon() {
    let cfg = Mm1Config::new(1.0, 2.0).unwrap();
    let avg_error = |horizon: f64| {
        let errs: Vec<f64> = (0..40)
            .map(|seed| {
                let trace = simulate_queue(&cfg, horizon, &mut RngStream::new(seed, 1)).unwrap();
                trace_stats(&trace).little_relative_error().unwrap()
            })
            .collect();
        stats::mean(&errs)
    };
    let short = avg_error(200.0);
    let long = avg_error(2_000.0);
    assert!(long < short, "{long} vs {short}");
}

#[test]
fn sojourns_are_exponential_after_thinning() {
    for (lambda, mu, seed) in [(1.0, 2.0, 90), (8.0, 10.0, 91)] {
        let cfg = Mm1Config::new(lambda, mu).unwrap();
        let trace = simulate_queue(&cfg, 200_000.0 / lambda, &mut RngStream::new(seed, 0)).unwrap();
        let fit = sojourn_fit(&trace, &cfg).unwrap();
        assert!(
            fit.inside_band,
            "λ {lambda}: ks {} eps {}",
            fit.ks_distance, fit.dkw_epsilon
        );
        assert!(fit.mean_relative_error() < 0.05);
    }
}

#[test]
fn thinning_decorrelates_at_half_load() {
    let cfg = Mm1Config::new(1.0, 2.0).unwrap();
    let trace = simulate_queue(&cfg, 400_000.0, &mut RngStream::new(92, 0)).unwrap();
    let fit = sojourn_fit(&trace, &cfg).unwrap();
    assert!(fit.thinned_lag1.abs() < 0.05, "{}", fit.thinned_lag1);
    assert!(stats::autocorrelation(trace.stationary_sojourns(), 1) > 0.3);
}

#[test]
fn progress_median_matches_brute_force_sum() {
    let cfg = ScenarioConfig::new(
        2,
        MtrConfig::new(0.5, 5).unwrap(),
        Mm1Config::new(1.0, 3.0).unwrap(),
        100_000,
        123,
        ProcessingSource::AnalyticSojourn,
    )
    .unwrap();
    let median = empirical_progress_cdf(&cfg).median();

    // 8 transmission delays at rate 2 plus 8 processing delays at rate 2.
    let mut rng = XorShift::new(2024);
    let mut brute: Vec<f64> = (0..100_000)
        .map(|_| (0..16).map(|_| rng.exp(2.0)).sum())
        .collect();
    brute.sort_by(f64::total_cmp);
    let brute_median = brute[brute.len() / 2 - 1];
    assert!(
        (median - brute_median).abs() / brute_median < 0.03,
        "{median} vs {brute_median}"
    );
}

#[test]
fn simulated_queue_processing_is_erlang() {
    let cfg = ScenarioConfig::new(
        1,
        MtrConfig::new(0.5, 5).unwrap(),
        Mm1Config::new(1.0, 3.0).unwrap(),
        10_000,
        5,
        ProcessingSource::SimulatedQueue,
    )
    .unwrap();
    let samples = run_trials(&cfg);
    let mut tp: Vec<f64> = samples.iter().map(|s| s.total_processing).collect();
    let reference = ErlangDist::new(4, 2.0).unwrap();
    let d = ks(&mut tp, |t| reference.cdf_total(t));
    assert!(d <= dkw99(10_000), "{d}");
}

#[test]
fn best_split_beats_midpoint_for_asymmetric_rates() {
    let cfg = ScenarioConfig::new(
        2,
        MtrConfig::new(1.0, 4).unwrap(),
        Mm1Config::new(1.0, 2.0).unwrap(),
        1,
        0,
        ProcessingSource::AnalyticSojourn,
    )
    .unwrap();
    for t in [4.0, 8.0, 12.0, 20.0] {
        let best = best_split_bound(&cfg, t, 201).unwrap();
        let mid = cfg.analytic_bound(t / 2.0, t / 2.0).unwrap();
        assert!(best.bound >= mid);
        // Exhaustive grid is its own oracle.
        let brute = (0..201)
            .map(|i| {
                let x = t * f64::from(i) / 200.0;
                cfg.analytic_bound(x, (t - x).max(0.0)).unwrap()
            })
            .fold(0.0, f64::max);
        assert_eq!(best.bound, brute);
    }
    // Slower processing pushes the best split toward more processing time.
    assert!(best_split_bound(&cfg, 12.0, 201).unwrap().x < 6.0);
}

#[test]
fn best_split_bound_grows_with_budget() {
    let cfg = ScenarioConfig::new(
        3,
        MtrConfig::new(0.5, 5).unwrap(),
        Mm1Config::new(1.0, 3.0).unwrap(),
        1,
        0,
        ProcessingSource::AnalyticSojourn,
    )
    .unwrap();
    let mut last = 0.0;
    for i in 1..60 {
        let b = best_split_bound(&cfg, f64::from(i) * 0.5, 41)
            .unwrap()
            .bound;
        assert!(b >= last);
        last = b;
    }
}

#[test]
fn progress_cdf_is_deterministic() {
    let cfg = ScenarioConfig::new(
        2,
        MtrConfig::new(0.5, 5).unwrap(),
        Mm1Config::new(1.0, 3.0).unwrap(),
        5_000,
        77,
        ProcessingSource::AnalyticSojourn,
    )
    .unwrap();
    assert_eq!(empirical_progress_cdf(&cfg), empirical_progress_cdf(&cfg));
    // Trials are order-independent.
    let forward = run_trials(&cfg);
    let backward: Vec<_> = (0..5_000u64).rev().map(|i| trial_sample(&cfg, i)).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
}
