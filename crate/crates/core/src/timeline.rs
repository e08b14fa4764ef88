//! Period-by-period evolution: every period takes its cost coefficients from
//! the schedule and anchors each firm's cost of change at its production in
//! the previous period.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nash::{self, EquilibriumResult};
use crate::scenario::{Mode, ScenarioConfig};
use crate::stackelberg::{self, StackelbergResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PeriodOutcome {
    Cournot(EquilibriumResult),
    Stackelberg(StackelbergResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    /// One-based period index.
    pub period: usize,
    pub b: Vec<f64>,
    pub anchors: Vec<f64>,
    pub x: Vec<f64>,
    pub profits: Vec<f64>,
    pub change_costs: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub outcome: PeriodOutcome,
}

/// Run statistics; kept out of the reports so that those stay reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub wall_time_s: f64,
    pub total_sweeps: usize,
    pub theta_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineResult {
    pub mode: Mode,
    /// Zero-based leader index in Stackelberg mode.
    pub leader: Option<usize>,
    pub initial_anchors: Vec<f64>,
    pub periods: Vec<PeriodResult>,
    /// Period at which a solve failed to converge; the timeline stops there.
    pub halted_at: Option<usize>,
    pub metadata: RunMetadata,
}

impl TimelineResult {
    pub fn completed(&self) -> bool {
        self.halted_at.is_none()
    }
}

pub fn run_timeline(cfg: &ScenarioConfig) -> Result<TimelineResult> {
    cfg.validate()?;
    let start = Instant::now();
    let leader = (cfg.mode == Mode::Stackelberg).then(|| cfg.leader_index - 1);
    let initial_anchors = cfg.market.anchors();
    let mut anchors = initial_anchors.clone();
    let mut periods = Vec::with_capacity(cfg.b_schedule.len());
    let mut metadata = RunMetadata::default();
    let mut halted_at = None;

    for t in 1..=cfg.b_schedule.len() {
        let market = cfg.market_for(t, &anchors)?;
        let (x, profits, change_costs, residual, converged, outcome) = match leader {
            None => {
                let r = nash::gauss_seidel(&market, &anchors, &cfg.solver)?;
                metadata.total_sweeps += r.sweeps;
                (
                    r.x.clone(),
                    r.profits.clone(),
                    r.change_costs.clone(),
                    r.residual,
                    r.converged,
                    PeriodOutcome::Cournot(r),
                )
            }
            Some(l) => {
                let r = stackelberg::solve_leader(&market, l, &cfg.solver, &cfg.stackelberg)?;
                metadata.theta_evals += r.theta_evals;
                (
                    r.x.clone(),
                    r.profits.clone(),
                    r.change_costs.clone(),
                    r.residual,
                    r.converged,
                    PeriodOutcome::Stackelberg(r),
                )
            }
        };
        periods.push(PeriodResult {
            period: t,
            b: cfg.b_schedule[t - 1].clone(),
            anchors: anchors.clone(),
            x: x.clone(),
            profits,
            change_costs,
            residual,
            converged,
            outcome,
        });
        if !converged {
            halted_at = Some(t);
            break;
        }
        anchors = x;
    }
    metadata.wall_time_s = start.elapsed().as_secs_f64();
    Ok(TimelineResult {
        mode: cfg.mode,
        leader,
        initial_anchors,
        periods,
        halted_at,
        metadata,
    })
}
