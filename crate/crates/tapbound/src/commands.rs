// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand. Each writes its CSV/text artifacts into the
//! output directory and returns a summary plus whether its checks held.

use std::fmt::Write as _;
use std::path::PathBuf;

use tapbound_core::analytic::{mm1_mean_queue_len, mtr_delivery_cdf};
use tapbound_core::engine::{self, best_split_bound, check_trials, verify_bound_samples};
use tapbound_core::mm1::{self, little_identity_residual, sojourn_fit, trace_stats};
use tapbound_core::mtr::DeliveryMode;
use tapbound_core::rng::RngStream;
use tapbound_core::stats::{self, EmpiricalCdf};
use tapbound_core::tap::{run_tap_trace, AgentId, KnowledgeValue};

use crate::config::{Axis, ConfigFile, DEFAULT_QUEUE_TOLERANCE, DEFAULT_SPLIT_POINTS};
use crate::output::{fmt_f64, write_file, Table};
use crate::{parallel, CliError};

/// Relative tolerance on the `∫N` bookkeeping identity.
pub const LITTLE_RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Default arrivals for `queue` when neither horizon nor count is given.
pub const DEFAULT_QUEUE_ARRIVALS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct Context {
    pub output_dir: PathBuf,
    /// `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn finish(
    ctx: &Context,
    name: &str,
    passed: bool,
    summary: String,
    mut files: Vec<PathBuf>,
) -> Result<Outcome, CliError> {
    files.push(write_file(
        &ctx.output_dir,
        &format!("{name}_summary.txt"),
        summary.as_bytes(),
    )?);
    Ok(Outcome {
        passed,
        summary,
        files,
    })
}

/// Analytic bound over the grid. No randomness.
pub fn cmd_bound(ctx: &Context, cfg: &ConfigFile) -> Result<Outcome, CliError> {
    let scenario = cfg.scenario_config()?;
    let grid = cfg.grid()?;
    let mut table = Table::new(&["x_seconds", "y_seconds", "analytic_bound"]);
    let mut best = (0.0, 0.0, 0.0);
    for &(x, y) in &grid {
        let b = scenario.analytic_bound(x, y)?;
        if b > best.2 {
            best = (x, y, b);
        }
        table.row([fmt_f64(x), fmt_f64(y), fmt_f64(b)]);
    }
    let csv = write_file(&ctx.output_dir, "bound.csv", &table.into_bytes())?;
    let mut s = String::new();
    writeln!(s, "messages N_M = {}", scenario.message_count()).unwrap();
    writeln!(
        s,
        "transmission rate (1/s) = {}",
        fmt_f64(scenario.transmission_rate())
    )
    .unwrap();
    writeln!(
        s,
        "processing rate (1/s) = {}",
        fmt_f64(scenario.processing_rate())
    )
    .unwrap();
    writeln!(s, "grid points = {}", grid.len()).unwrap();
    writeln!(
        s,
        "largest bound = {} at x = {} s, y = {} s",
        fmt_f64(best.2),
        best.0,
        best.1
    )
    .unwrap();
    finish(ctx, "bound", true, s, vec![csv])
}

/// Monte Carlo progress-time samples and their CDF against the best-split bound.
pub fn cmd_simulate(ctx: &Context, cfg: &ConfigFile) -> Result<Outcome, CliError> {
    let scenario = cfg.scenario_config()?;
    let confidence = cfg.confidence();
    let eps = stats::dkw_epsilon(scenario.trials, confidence).map_err(|e| CliError::Invalid {
        key: "verify.confidence".into(),
        source: e,
    })?;
    let samples = parallel::run_trials(&scenario, ctx.threads);

    let mut table = Table::new(&[
        "trial",
        "transmission_seconds",
        "processing_seconds",
        "total_seconds",
    ]);
    for (i, s) in samples.iter().enumerate() {
        table.row([
            i.to_string(),
            fmt_f64(s.total_transmission),
            fmt_f64(s.total_processing),
            fmt_f64(s.total),
        ]);
    }
    let samples_csv = write_file(&ctx.output_dir, "simulate_samples.csv", &table.into_bytes())?;

    let cdf = engine::progress_cdf(&samples);
    let mean_total = scenario.message_count() as f64
        * (1.0 / scenario.transmission_rate() + 1.0 / scenario.processing_rate());
    let default_axis = Axis::Range {
        start: mean_total / 4.0,
        stop: 2.0 * mean_total,
        count: 20,
    };
    let section = cfg.simulate.clone().unwrap_or_default();
    let budgets = section.t.unwrap_or(default_axis).points();
    let split_points = section.split_points.unwrap_or(DEFAULT_SPLIT_POINTS);

    let mut table = Table::new(&[
        "t_seconds",
        "empirical_prob",
        "best_split_bound",
        "best_x_seconds",
        "best_y_seconds",
        "dkw_epsilon",
        "satisfied",
    ]);
    let mut ok = 0;
    for &t in &budgets {
        let best = best_split_bound(&scenario, t, split_points).map_err(|e| CliError::Invalid {
            key: "simulate.t".into(),
            source: e,
        })?;
        let p = cdf.eval(t);
        let satisfied = p >= best.bound - eps;
        ok += usize::from(satisfied);
        table.row([
            fmt_f64(t),
            fmt_f64(p),
            fmt_f64(best.bound),
            fmt_f64(best.x),
            fmt_f64(best.y),
            fmt_f64(eps),
            flag(satisfied).into(),
        ]);
    }
    let cdf_csv = write_file(&ctx.output_dir, "simulate_cdf.csv", &table.into_bytes())?;

    let totals: Vec<f64> = samples.iter().map(|s| s.total).collect();
    let mut s = String::new();
    writeln!(s, "trials = {}", samples.len()).unwrap();
    writeln!(
        s,
        "mean T_S (s) = {} (analytic {})",
        fmt_f64(stats::mean(&totals)),
        fmt_f64(mean_total)
    )
    .unwrap();
    writeln!(s, "median T_S (s) = {}", fmt_f64(cdf.median())).unwrap();
    writeln!(s, "p95 T_S (s) = {}", fmt_f64(cdf.quantile(0.95))).unwrap();
    writeln!(
        s,
        "dkw epsilon = {} at confidence {}",
        fmt_f64(eps),
        confidence
    )
    .unwrap();
    let passed = ok == budgets.len();
    writeln!(
        s,
        "{} {ok}/{}",
        if passed { "SATISFIED" } else { "VIOLATED" },
        budgets.len()
    )
    .unwrap();
    finish(ctx, "simulate", passed, s, vec![samples_csv, cdf_csv])
}

/// Monte Carlo check of the Erlang-product bound over the grid.
pub fn cmd_verify(ctx: &Context, cfg: &ConfigFile) -> Result<Outcome, CliError> {
    let scenario = cfg.scenario_config()?;
    let grid = cfg.grid()?;
    let confidence = cfg.confidence();
    let max_epsilon = cfg.max_epsilon();
    check_trials(scenario.trials, confidence, max_epsilon)?;
    let samples = parallel::run_trials(&scenario, ctx.threads);
    let report = verify_bound_samples(&scenario, &samples, &grid, confidence, max_epsilon)?;

    let mut main = Table::new(&[
        "x_seconds",
        "y_seconds",
        "analytic_bound",
        "empirical_prob",
        "dkw_epsilon",
        "satisfied",
    ]);
    let mut checks = Table::new(&[
        "x_seconds",
        "y_seconds",
        "joint_prob",
        "marginal_product",
        "monotonicity_ok",
        "product_rule_ok",
        "implication_violations",
    ]);
    for p in &report.points {
        main.row([
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.analytic_bound),
            fmt_f64(p.empirical_prob),
            fmt_f64(p.dkw_epsilon),
            flag(p.satisfied).into(),
        ]);
        checks.row([
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.joint_prob),
            fmt_f64(p.marginal_product),
            flag(p.monotonicity_ok).into(),
            flag(p.product_rule_ok).into(),
            p.implication_violations.to_string(),
        ]);
    }
    let files = vec![
        write_file(&ctx.output_dir, "verify.csv", &main.into_bytes())?,
        write_file(&ctx.output_dir, "verify_checks.csv", &checks.into_bytes())?,
    ];

    let n = report.points.len();
    let mut s = String::new();
    writeln!(s, "trials = {}", report.trials).unwrap();
    writeln!(s, "messages N_M = {}", scenario.message_count()).unwrap();
    writeln!(
        s,
        "dkw epsilon = {} at confidence {}",
        fmt_f64(report.dkw_epsilon),
        report.confidence
    )
    .unwrap();
    writeln!(s, "correlation(T_D, T_P) = {}", fmt_f64(report.correlation)).unwrap();
    writeln!(
        s,
        "implication violations = {}",
        report.implication_violations()
    )
    .unwrap();
    writeln!(
        s,
        "PRODUCT-RULE {}/{n} within 3 epsilon",
        report.product_rule_count()
    )
    .unwrap();
    for p in report.points.iter().filter(|p| !p.satisfied) {
        writeln!(
            s,
            "VIOLATED at x = {}, y = {}: bound {} > empirical {} + epsilon",
            p.x,
            p.y,
            fmt_f64(p.analytic_bound),
            fmt_f64(p.empirical_prob)
        )
        .unwrap();
    }
    if report.all_satisfied() {
        writeln!(s, "SATISFIED {n}/{n}").unwrap();
    } else {
        writeln!(s, "SATISFIED {}/{n}", report.satisfied_count()).unwrap();
    }
    finish(ctx, "verify", report.checks_passed(), s, files)
}

/// M/M/1 run with Little's-law and sojourn-distribution checks.
pub fn cmd_queue(ctx: &Context, cfg: &ConfigFile) -> Result<Outcome, CliError> {
    let queue = cfg.queue_config()?;
    let section = cfg.queue_section()?;
    let tolerance = section.tolerance.unwrap_or(DEFAULT_QUEUE_TOLERANCE);
    let mut rng = RngStream::new(cfg.seed(), 0);
    let trace = match (section.horizon, section.min_arrivals) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "queue: give either `horizon` or `min_arrivals`, not both".into(),
            ))
        }
        (Some(h), None) => {
            mm1::simulate_queue(&queue, h, &mut rng).map_err(|e| CliError::Invalid {
                key: "queue.horizon".into(),
                source: e,
            })?
        }
        (None, count) => {
            mm1::simulate_until_empty(&queue, count.unwrap_or(DEFAULT_QUEUE_ARRIVALS), &mut rng)
                .map_err(|e| CliError::Invalid {
                    key: "queue.min_arrivals".into(),
                    source: e,
                })?
        }
    };
    let fit = sojourn_fit(&trace, &queue)?;
    let stats = trace_stats(&trace);
    let residual = little_identity_residual(&trace);
    let little_error = stats.little_relative_error()?;
    let occupancy = trace.stationary_occupancy();
    let expected_occupancy = mm1_mean_queue_len(&queue);
    let occupancy_error = (occupancy - expected_occupancy).abs() / expected_occupancy;

    let mut table = Table::new(&["time_seconds", "kind", "message_id", "occupancy"]);
    for e in &trace.events {
        table.row([
            fmt_f64(e.time),
            e.kind.as_str().into(),
            e.message_id.to_string(),
            e.occupancy.to_string(),
        ]);
    }
    let events_csv = write_file(&ctx.output_dir, "queue_events.csv", &table.into_bytes())?;

    let residual_ok =
        residual <= LITTLE_RESIDUAL_TOLERANCE * trace.occupancy_integral.max(f64::MIN_POSITIVE);
    let little_ok = little_error <= tolerance;
    let occupancy_ok = occupancy_error <= tolerance;
    let mean_ok = fit.mean_relative_error() <= tolerance;
    let mut kv = String::new();
    let mut put = |k: &str, v: String| writeln!(kv, "{k} = {v}").unwrap();
    put("horizon_seconds", fmt_f64(trace.horizon));
    put("arrivals", trace.arrivals.to_string());
    put("departures", trace.departures().to_string());
    put("end_occupancy", trace.end_occupancy.to_string());
    put("arrival_rate_per_second", fmt_f64(stats.arrival_rate));
    put("mean_sojourn_seconds", fmt_f64(stats.mean_sojourn()?));
    put("mean_occupancy", fmt_f64(stats.mean_occupancy));
    put("little_identity_residual", fmt_f64(residual));
    put("little_relative_error", fmt_f64(little_error));
    put("stationary_occupancy", fmt_f64(occupancy));
    put("expected_occupancy", fmt_f64(expected_occupancy));
    put("warmup_departures", fit.warmup.to_string());
    put("thinning_factor", mm1::THINNING_FACTOR.to_string());
    put("thinned_samples", fit.thinned.to_string());
    put("thinned_lag1_autocorrelation", fmt_f64(fit.thinned_lag1));
    put("ks_distance", fmt_f64(fit.ks_distance));
    put("dkw_epsilon", fmt_f64(fit.dkw_epsilon));
    put("confidence", fmt_f64(fit.confidence));
    put("inside_band", flag(fit.inside_band).into());
    put("stationary_mean_sojourn_seconds", fmt_f64(fit.sample_mean));
    put("expected_mean_sojourn_seconds", fmt_f64(fit.expected_mean));
    put("tolerance", fmt_f64(tolerance));
    let fit_txt = write_file(&ctx.output_dir, "queue_fit.txt", kv.as_bytes())?;

    let checks = [
        ("little-residual", residual_ok),
        ("little-relation", little_ok),
        ("mean-occupancy", occupancy_ok),
        ("mean-sojourn", mean_ok),
        ("sojourn-ks", fit.inside_band),
    ];
    let mut s = kv.clone();
    for (name, ok) in checks {
        writeln!(s, "{} {name}", if ok { "PASS" } else { "FAIL" }).unwrap();
    }
    let passed = checks.iter().all(|c| c.1);
    finish(ctx, "queue", passed, s, vec![events_csv, fit_txt])
}

/// Transmission-delay samples and their fit to the delivery CDF.
pub fn cmd_mtr(ctx: &Context, cfg: &ConfigFile) -> Result<Outcome, CliError> {
    let mtr_cfg = cfg.mtr_config()?;
    let mode = cfg.delivery_mode();
    let n = cfg.mtr_samples();
    if n == 0 {
        return Err(CliError::Invalid {
            key: "mtr.samples".into(),
            source: tapbound_core::Error::EmptyBatch,
        });
    }
    let confidence = cfg.confidence();
    let delays = parallel::delivery_delays(&mtr_cfg, mode, n, cfg.seed(), ctx.threads);

    let mut table = Table::new(&["delay_seconds"]);
    for d in &delays {
        table.row([fmt_f64(*d)]);
    }
    let csv = write_file(&ctx.output_dir, "mtr_delays.csv", &table.into_bytes())?;

    let mean = stats::mean(&delays);
    let ecdf = EmpiricalCdf::new(delays)?;
    let ks = stats::ks_distance(&ecdf, |t| {
        mtr_delivery_cdf(&mtr_cfg, t.max(0.0)).unwrap_or(0.0)
    });
    let eps = stats::dkw_epsilon(n, confidence)?;
    let inside = ks <= eps;
    let mut s = String::new();
    writeln!(
        s,
        "mode = {}",
        match mode {
            DeliveryMode::MinOfPaths => "min-of-paths",
            DeliveryMode::StrictTwoHop => "strict-two-hop",
        }
    )
    .unwrap();
    writeln!(s, "samples = {n}").unwrap();
    writeln!(s, "paths M = {}", mtr_cfg.paths()).unwrap();
    writeln!(
        s,
        "mean delay (s) = {} (analytic {})",
        fmt_f64(mean),
        fmt_f64(1.0 / (mtr_cfg.meeting_rate() * mtr_cfg.paths() as f64))
    )
    .unwrap();
    writeln!(s, "ks distance to delivery CDF = {}", fmt_f64(ks)).unwrap();
    writeln!(
        s,
        "dkw epsilon = {} at confidence {}",
        fmt_f64(eps),
        confidence
    )
    .unwrap();
    // The strict two-hop model is not expected to match the closed form.
    let passed = mode != DeliveryMode::MinOfPaths || inside;
    writeln!(
        s,
        "{}",
        if inside {
            "INSIDE-BAND"
        } else {
            "OUTSIDE-BAND"
        }
    )
    .unwrap();
    finish(ctx, "mtr", passed, s, vec![csv])
}

/// Instantaneous-delivery TAP run with the full message log.
pub fn cmd_tap_trace(ctx: &Context, cfg: &ConfigFile) -> Result<Outcome, CliError> {
    let r = cfg.scenario_section()?.replica_count;
    let value = KnowledgeValue::new(vec![AgentId(0)])?;
    let trace = run_tap_trace(value, r).map_err(|e| CliError::Invalid {
        key: "scenario.replica_count".into(),
        source: e,
    })?;
    let mut table = Table::new(&["sequence", "time_seconds", "kind", "from", "to"]);
    for m in &trace.log {
        table.row([
            m.sequence.to_string(),
            fmt_f64(m.delivered_at),
            m.kind.as_str().into(),
            m.from.to_string(),
            m.to.to_string(),
        ]);
    }
    let csv = write_file(&ctx.output_dir, "tap_trace.csv", &table.into_bytes())?;
    let expected = 4 * r as usize;
    let mut s = String::new();
    writeln!(s, "replicas = {r}").unwrap();
    writeln!(
        s,
        "messages = {} (expected {expected})",
        trace.message_count()
    )
    .unwrap();
    writeln!(s, "propagator phase = {:?}", trace.propagator.phase).unwrap();
    let e2 = trace.e2_achieved();
    writeln!(s, "{}", if e2 { "E2-ACHIEVED" } else { "E2-NOT-ACHIEVED" }).unwrap();
    finish(
        ctx,
        "tap_trace",
        e2 && trace.message_count() == expected,
        s,
        vec![csv],
    )
}
