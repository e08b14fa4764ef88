//! Scenario configuration: the market, the schedule of linear cost
//! coefficients, the solution mode and output settings. Stored as JSON; see
//! `docs/config-schema.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Market;
use crate::nash::SolverConfig;
use crate::sensitivity::SensitivityOptions;
use crate::stackelberg::LeaderOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    #[serde(alias = "COURNOT")]
    Cournot,
    #[serde(alias = "STACKELBERG")]
    Stackelberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    #[serde(rename = "md", alias = "markdown")]
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

/// Whether the (δ, K) values of a shipped reference scenario are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceParams {
    Filled,
    Placeholder,
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Csv, ReportFormat::Markdown]
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
    #[serde(default = "default_samples")]
    pub curve_samples: usize,
    /// Half-width of the sampling window around each firm's production;
    /// the whole admissible interval when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_window: Option<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: default_formats(),
            curve_samples: default_samples(),
            curve_window: None,
        }
    }
}

fn default_leader() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub market: Market,
    /// Linear cost coefficients, one row per period `t = 1..T`.
    pub b_schedule: Vec<Vec<f64>>,
    #[serde(default)]
    pub mode: Mode,
    /// One-based index of the leader in Stackelberg mode.
    #[serde(default = "default_leader")]
    pub leader_index: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub stackelberg: LeaderOptions,
    #[serde(default)]
    pub sensitivity: SensitivityOptions,
    /// Parameter directions `(δb_1, …, δb_l, δγ)` for sensitivity reports;
    /// unit directions when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<Vec<f64>>,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_params: Option<ReferenceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => Error::Config(format!("{}: {other}", path.display())),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.market.len();
        if self.b_schedule.is_empty() {
            return Err(Error::Config("b_schedule is empty".into()));
        }
        for (t, row) in self.b_schedule.iter().enumerate() {
            if row.len() != l {
                return Err(Error::Config(format!(
                    "b_schedule period {}: expected {l} entries, got {}",
                    t + 1,
                    row.len()
                )));
            }
            if row.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                return Err(Error::Config(format!(
                    "b_schedule period {}: coefficients must be finite and nonnegative",
                    t + 1
                )));
            }
        }
        if self.mode == Mode::Stackelberg && !(1..=l).contains(&self.leader_index) {
            return Err(Error::Config(format!(
                "leader_index {} outside 1..={l}",
                self.leader_index
            )));
        }
        if self.mode == Mode::Stackelberg && l < 2 {
            return Err(Error::Config(
                "Stackelberg mode needs at least two firms".into(),
            ));
        }
        for (j, d) in self.directions.iter().enumerate() {
            if d.len() != l + 1 {
                return Err(Error::Config(format!(
                    "direction {}: expected {} entries (b_1..b_l, gamma), got {}",
                    j + 1,
                    l + 1,
                    d.len()
                )));
            }
        }
        self.solver.validate()
    }

    /// Market for period `t` (one-based), with the given anchors.
    pub fn market_for(&self, t: usize, anchors: &[f64]) -> Result<Market> {
        let row = self
            .b_schedule
            .get(t - 1)
            .ok_or_else(|| Error::Config(format!("b_schedule has no row for period {t}")))?;
        self.market.with_b(row)?.with_anchors(anchors)
    }

    /// The configured directions, or the unit directions.
    pub fn sensitivity_directions(&self) -> Vec<Vec<f64>> {
        if !self.directions.is_empty() {
            return self.directions.clone();
        }
        let n = self.market.len() + 1;
        (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}
