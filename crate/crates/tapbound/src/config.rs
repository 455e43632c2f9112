// SPDX-License-Identifier: Apache-2.0

//! Scenario files.
//!
//! A config is a TOML document with the sections `[scenario]`, `[mtr]`,
//! `[queue]`, `[grid]`, `[verify]` and `[simulate]`; each command reads the
//! ones it needs. Unknown keys are rejected. See `configs/` for commented
//! examples. Individual keys can be overridden with `section.key=value`
//! strings, where the value is parsed as a TOML value.

use std::path::Path;

use serde::Deserialize;
use tapbound_core::analytic::{Mm1Config, MtrConfig};
use tapbound_core::engine::{ProcessingSource, ScenarioConfig};
use tapbound_core::mtr::DeliveryMode;

use crate::CliError;

pub const DEFAULT_TRIALS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_MTR_SAMPLES: usize = 100_000;
pub const DEFAULT_QUEUE_TOLERANCE: f64 = 0.05;
pub const DEFAULT_SPLIT_POINTS: usize = 101;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<ScenarioSection>,
    pub mtr: Option<MtrSection>,
    pub queue: Option<QueueSection>,
    pub grid: Option<GridSection>,
    pub verify: Option<VerifySection>,
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub replica_count: u32,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub processing_source: Option<ProcessingSourceName>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessingSourceName {
    Analytic,
    Simulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtrSection {
    /// λ_MTR, 1/s.
    pub meeting_rate: f64,
    /// M + 1. Give this or `paths`.
    pub node_count: Option<u64>,
    /// M.
    pub paths: Option<u64>,
    pub mode: Option<DeliveryModeName>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DeliveryModeName {
    MinOfPaths,
    StrictTwoHop,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSection {
    /// λ_a, 1/s.
    pub arrival_rate: f64,
    /// μ_s, 1/s.
    pub service_rate: f64,
    /// Fixed horizon in seconds for the `queue` command.
    pub horizon: Option<f64>,
    /// Alternatively: run until this many arrivals and the next empty instant.
    pub min_arrivals: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x: Axis,
    pub y: Axis,
}

/// Either an explicit list or `{ start, stop, count }` (inclusive, evenly spaced).
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| {
                        if i == n - 1 {
                            *stop
                        } else {
                            start + (stop - start) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub confidence: Option<f64>,
    pub max_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Time budgets at which the empirical CDF is reported.
    pub t: Option<Axis>,
    pub split_points: Option<usize>,
}

/// Parses `text`, applies `overrides` (`section.key=value`) and
/// deserializes the result.
pub fn parse(text: &str, overrides: &[String]) -> Result<ConfigFile, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    ConfigFile::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(format!("config schema error: {e}")))
}

pub fn load(path: &Path, overrides: &[String]) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, overrides)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::Config(format!(
            "override `{spec}` must look like section.key=value"
        ))
    })?;
    let (section, key) = path.trim().split_once('.').ok_or_else(|| {
        CliError::Config(format!("override key `{path}` must look like section.key"))
    })?;
    let value = parse_value(raw.trim()).ok_or_else(|| {
        CliError::Config(format!("override `{spec}`: cannot parse value `{raw}`"))
    })?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let section_table = entry.as_table_mut().ok_or_else(|| {
        CliError::Config(format!("override `{spec}`: `{section}` is not a section"))
    })?;
    section_table.insert(key.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Option<toml::Value> {
    let doc: toml::Table = toml::from_str(&format!("v = {raw}"))
        .or_else(|_| toml::from_str(&format!("v = \"{raw}\"")))
        .ok()?;
    doc.get("v").cloned()
}

fn invalid(key: &str) -> impl FnOnce(tapbound_core::Error) -> CliError + '_ {
    move |source| CliError::Invalid {
        key: key.to_string(),
        source,
    }
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing section [{section}]"))
}

impl ConfigFile {
    pub fn scenario_section(&self) -> Result<&ScenarioSection, CliError> {
        self.scenario.as_ref().ok_or_else(|| missing("scenario"))
    }

    pub fn mtr_config(&self) -> Result<MtrConfig, CliError> {
        let m = self.mtr.as_ref().ok_or_else(|| missing("mtr"))?;
        let nodes = match (m.node_count, m.paths) {
            (Some(n), None) => n,
            (None, Some(p)) => p.saturating_add(1),
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "mtr: give either `node_count` or `paths`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "mtr: missing `node_count` (or `paths`)".into(),
                ))
            }
        };
        MtrConfig::new(m.meeting_rate, nodes).map_err(|e| {
            let key = match e {
                tapbound_core::Error::InvalidNodeCount(_) if m.paths.is_some() => "mtr.paths",
                tapbound_core::Error::InvalidNodeCount(_) => "mtr.node_count",
                _ => "mtr.meeting_rate",
            };
            invalid(key)(e)
        })
    }

    pub fn delivery_mode(&self) -> DeliveryMode {
        match self.mtr.as_ref().and_then(|m| m.mode) {
            Some(DeliveryModeName::StrictTwoHop) => DeliveryMode::StrictTwoHop,
            _ => DeliveryMode::MinOfPaths,
        }
    }

    pub fn mtr_samples(&self) -> usize {
        self.mtr
            .as_ref()
            .and_then(|m| m.samples)
            .unwrap_or(DEFAULT_MTR_SAMPLES)
    }

    pub fn queue_section(&self) -> Result<&QueueSection, CliError> {
        self.queue.as_ref().ok_or_else(|| missing("queue"))
    }

    pub fn queue_config(&self) -> Result<Mm1Config, CliError> {
        let q = self.queue_section()?;
        let cfg = Mm1Config::new(q.arrival_rate, q.service_rate).map_err(|e| {
            let key = match e {
                tapbound_core::Error::InvalidRate(r)
                    if r == q.service_rate && r != q.arrival_rate =>
                {
                    "queue.service_rate"
                }
                _ => "queue.arrival_rate",
            };
            invalid(key)(e)
        })?;
        if cfg.is_heavy_traffic() {
            log::warn!(
                "queue utilization {:.4} is above {}; simulations converge slowly",
                cfg.utilization(),
                tapbound_core::analytic::HEAVY_TRAFFIC_UTILIZATION
            );
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.scenario
            .as_ref()
            .and_then(|s| s.seed)
            .unwrap_or(DEFAULT_SEED)
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig, CliError> {
        let s = self.scenario_section()?;
        let mtr = self.mtr_config()?;
        let queue = self.queue_config()?;
        let source = match s.processing_source {
            Some(ProcessingSourceName::Simulated) => ProcessingSource::SimulatedQueue,
            _ => ProcessingSource::AnalyticSojourn,
        };
        let trials = s.trials.unwrap_or(DEFAULT_TRIALS);
        ScenarioConfig::new(s.replica_count, mtr, queue, trials, self.seed(), source).map_err(|e| {
            let key = match e {
                tapbound_core::Error::ZeroReplicas => "scenario.replica_count",
                _ => "scenario.trials",
            };
            invalid(key)(e)
        })
    }

    /// Cartesian product of the `x` and `y` axes, x-major.
    pub fn grid(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid"))?;
        let (xs, ys) = (g.x.points(), g.y.points());
        for (key, axis) in [("grid.x", &xs), ("grid.y", &ys)] {
            if axis.is_empty() {
                return Err(invalid(key)(tapbound_core::Error::EmptyGrid));
            }
            if let Some(&bad) = axis.iter().find(|v| v.is_nan() || **v < 0.0) {
                return Err(invalid(key)(tapbound_core::Error::NegativeTime(bad)));
            }
        }
        Ok(xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .collect())
    }

    pub fn confidence(&self) -> f64 {
        self.verify
            .as_ref()
            .and_then(|v| v.confidence)
            .unwrap_or(DEFAULT_CONFIDENCE)
    }

    pub fn max_epsilon(&self) -> f64 {
        self.verify
            .as_ref()
            .and_then(|v| v.max_epsilon)
            .unwrap_or(tapbound_core::engine::DEFAULT_MAX_EPSILON)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[scenario]
replica_count = 3
trials = 2000
seed = 5

[mtr]
meeting_rate = 0.5
node_count = 5

[queue]
arrival_rate = 1.0
service_rate = 3.0

[grid]
x = [0.0, 5.0]
y = { start = 0.0, stop = 10.0, count = 3 }
"#;

    #[test]
    fn parses_full_scenario() {
        let cfg = parse(BASE, &[]).unwrap();
        let s = cfg.scenario_config().unwrap();
        assert_eq!(s.replica_count, 3);
        assert_eq!(s.trials, 2000);
        assert_eq!(s.transmission_rate(), 2.0);
        assert_eq!(
            cfg.grid().unwrap(),
            [
                (0.0, 0.0),
                (0.0, 5.0),
                (0.0, 10.0),
                (5.0, 0.0),
                (5.0, 5.0),
                (5.0, 10.0)
            ]
        );
    }

    #[test]
    fn overrides_replace_keys() {
        let cfg = parse(
            BASE,
            &["scenario.seed=99".into(), "mtr.mode=strict-two-hop".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed(), 99);
        assert_eq!(cfg.delivery_mode(), DeliveryMode::StrictTwoHop);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse(&BASE.replace("seed = 5", "sed = 5"), &[]).unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
    }

    #[test]
    fn unstable_queue_names_key() {
        let cfg = parse(
            &BASE.replace("arrival_rate = 1.0", "arrival_rate = 5.0"),
            &[],
        )
        .unwrap();
        let err = cfg.scenario_config().unwrap_err();
        assert!(err.to_string().starts_with("queue.arrival_rate"), "{err}");
    }

    #[test]
    fn paths_alternative_to_node_count() {
        let cfg = parse(&BASE.replace("node_count = 5", "paths = 4"), &[]).unwrap();
        assert_eq!(cfg.mtr_config().unwrap().node_count(), 5);
        let both = parse(
            &BASE.replace("node_count = 5", "node_count = 5\npaths = 4"),
            &[],
        )
        .unwrap();
        assert!(both.mtr_config().is_err());
    }

    #[test]
    fn missing_section_is_reported() {
        let cfg = parse("[scenario]\nreplica_count = 1\n", &[]).unwrap();
        assert_eq!(
            cfg.mtr_config().unwrap_err().to_string(),
            "missing section [mtr]"
        );
    }
}
