//! Cournot-Nash equilibria by nonsmooth Gauss-Seidel iteration.
//!
//! Each firm minimizes its total cost
//!
//! ```text
//! J_i(x) = c_i(x_i) - x_i π(T) + β_i |x_i - a_i|,   x_i ∈ [lo_i, hi_i]
//! ```
//!
//! given the current productions of its rivals. Sweeps run until the
//! subdifferential optimality conditions hold up to `tol_residual`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{FirmParams, Market};
use crate::scalar_min::{minimize_convex_with_slope, ScalarProblem, Side};

/// Order in which firms are updated within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepOrder {
    #[default]
    Ascending,
    /// A fresh random permutation every sweep, from a seeded generator.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Threshold on the KKT residual.
    pub tol_residual: f64,
    /// Threshold on the largest production change within one sweep.
    pub tol_sweep: f64,
    pub max_sweeps: usize,
    /// Golden-section bracket width of the best-response search.
    pub inner_tol_x: f64,
    pub sweep_order: SweepOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_residual: 1e-9,
            tol_sweep: 1e-12,
            max_sweeps: 500,
            inner_tol_x: 1e-9,
            sweep_order: SweepOrder::Ascending,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol_residual, self.tol_sweep, self.inner_tol_x];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.max_sweeps == 0 {
            return Err(Error::Config(format!(
                "solver tolerances must be positive and max_sweeps >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// KKT residual below `tol_residual`.
    Residual,
    /// Sweep changes below `tol_sweep` with residual below `10 * tol_residual`.
    Stagnation,
    MaxSweeps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub x: Vec<f64>,
    pub total_costs: Vec<f64>,
    pub profits: Vec<f64>,
    pub change_costs: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub stop: StopReason,
}

/// One best-response update, reported to observers of [`gauss_seidel_observed`].
#[derive(Debug, Clone)]
pub struct Step<'a> {
    pub sweep: usize,
    pub firm: usize,
    pub before: f64,
    pub after: f64,
    /// Profile after the update.
    pub profile: &'a [f64],
}

/// `J_i` at profile `x`.
pub fn player_objective(m: &Market, i: usize, x: &[f64]) -> Result<f64> {
    let f = m.firm(i);
    let total: f64 = x.iter().sum();
    let price = m.demand().price(total)?;
    Ok(f.prod_cost(x[i])? - x[i] * price + f.change_cost(x[i]))
}

/// Firm `i`'s cost-minimizing production against a fixed rival total.
pub fn best_response(m: &Market, i: usize, rivals_total: f64, cfg: &SolverConfig) -> Result<f64> {
    let f = *m.firm(i);
    if !(rivals_total >= 0.0) || !(rivals_total + f.lo > 0.0) {
        return Err(Error::Precondition(format!(
            "best response of firm {} needs a positive total, rivals supply {rivals_total}",
            i + 1
        )));
    }
    if f.lo == f.hi {
        return Ok(f.lo);
    }
    let demand = *m.demand();
    let objective = |z: f64| {
        let price = demand.price(z + rivals_total)?;
        Ok(f.prod_cost(z)? - z * price + f.change_cost(z))
    };
    let slope = |z: f64, side: Side| {
        let p = demand.price_derivs(z + rivals_total)?;
        let smooth = f.prod_cost_derivs(z)?.marginal - p.value - z * p.slope;
        let sign = match side {
            Side::Right if z >= f.anchor => 1.0,
            Side::Left if z > f.anchor => 1.0,
            _ => -1.0,
        };
        Ok(smooth + f.beta * sign)
    };
    let mut problem = ScalarProblem::new(objective, f.lo, f.hi)?
        .with_kinks([f.anchor])?
        .convex();
    Ok(minimize_convex_with_slope(&mut problem, slope, cfg.inner_tol_x)?.x)
}

/// Distance from zero to `g + β ∂|·-a|(x) + N_[lo,hi](x)` for one firm.
pub fn firm_kkt_residual(f: &FirmParams, g: f64, x: f64) -> f64 {
    f.term().kkt_residual(g, x)
}

fn check_feasible(m: &Market, x: &[f64]) -> Result<()> {
    if x.len() != m.len() {
        return Err(Error::Precondition(format!(
            "profile has length {}, market has {} firms",
            x.len(),
            m.len()
        )));
    }
    for (i, (f, &xi)) in m.firms().iter().zip(x).enumerate() {
        if !(f.lo <= xi && xi <= f.hi) {
            return Err(Error::Precondition(format!(
                "production {xi} of firm {} outside [{}, {}]",
                i + 1,
                f.lo,
                f.hi
            )));
        }
    }
    Ok(())
}

/// Per-firm KKT residuals at a feasible profile.
pub fn kkt_residuals(m: &Market, x: &[f64]) -> Result<Vec<f64>> {
    check_feasible(m, x)?;
    let g = m.pseudo_gradient(x)?;
    Ok(m.firms()
        .iter()
        .zip(g)
        .zip(x)
        .map(|((f, gi), &xi)| firm_kkt_residual(f, gi, xi))
        .collect())
}

/// Largest per-firm KKT residual; zero exactly at a Cournot-Nash equilibrium.
pub fn kkt_residual(m: &Market, x: &[f64]) -> Result<f64> {
    Ok(kkt_residuals(m, x)?.into_iter().fold(0.0, f64::max))
}

/// Assembles per-firm costs and profits at `x`.
pub fn evaluate_profile(m: &Market, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let total_costs = (0..m.len())
        .map(|i| player_objective(m, i, x))
        .collect::<Result<Vec<_>>>()?;
    let profits = total_costs.iter().map(|c| -c).collect();
    let change_costs = m
        .firms()
        .iter()
        .zip(x)
        .map(|(f, &xi)| f.change_cost(xi))
        .collect();
    Ok((total_costs, profits, change_costs))
}

pub fn gauss_seidel(m: &Market, x0: &[f64], cfg: &SolverConfig) -> Result<EquilibriumResult> {
    gauss_seidel_observed(m, x0, cfg, |_| {})
}

/// Gauss-Seidel iteration starting at the anchors.
pub fn gauss_seidel_from_anchors(m: &Market, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    gauss_seidel(m, &m.anchors(), cfg)
}

/// [`gauss_seidel`] reporting every best-response update to `observer`.
pub fn gauss_seidel_observed(
    m: &Market,
    x0: &[f64],
    cfg: &SolverConfig,
    observer: impl FnMut(&Step<'_>),
) -> Result<EquilibriumResult> {
    let active: Vec<usize> = (0..m.len()).collect();
    let run = iterate(m, x0, &active, cfg, observer)?;
    let (total_costs, profits, change_costs) = evaluate_profile(m, &run.x)?;
    Ok(EquilibriumResult {
        x: run.x,
        total_costs,
        profits,
        change_costs,
        residual: run.residual,
        sweeps: run.sweeps,
        converged: run.stop != StopReason::MaxSweeps,
        stop: run.stop,
    })
}

pub(crate) struct Run {
    pub x: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
    pub stop: StopReason,
}

fn active_residual(m: &Market, x: &[f64], active: &[usize]) -> Result<f64> {
    let all = kkt_residuals(m, x)?;
    Ok(active.iter().map(|&i| all[i]).fold(0.0, f64::max))
}

/// Gauss-Seidel over the firms in `active`; the others stay at their `x0`
/// productions. The residual is taken over `active` only.
pub(crate) fn iterate(
    m: &Market,
    x0: &[f64],
    active: &[usize],
    cfg: &SolverConfig,
    mut observer: impl FnMut(&Step<'_>),
) -> Result<Run> {
    cfg.validate()?;
    check_feasible(m, x0)?;
    let mut x = x0.to_vec();
    let mut residual = active_residual(m, &x, active)?;
    if residual <= cfg.tol_residual {
        return Ok(Run {
            x,
            residual,
            sweeps: 0,
            stop: StopReason::Residual,
        });
    }
    let mut best = (x.clone(), residual);
    let mut order = active.to_vec();
    let mut rng = match cfg.sweep_order {
        SweepOrder::Shuffled { seed } => Some(rand::rngs::StdRng::seed_from_u64(seed)),
        SweepOrder::Ascending => None,
    };

    for sweep in 1..=cfg.max_sweeps {
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        let mut max_change: f64 = 0.0;
        for &i in &order {
            let total: f64 = x.iter().sum();
            let before = x[i];
            let after = best_response(m, i, (total - before).max(0.0), cfg)?;
            x[i] = after;
            max_change = max_change.max((after - before).abs());
            observer(&Step {
                sweep,
                firm: i,
                before,
                after,
                profile: &x,
            });
        }
        residual = active_residual(m, &x, active)?;
        if residual < best.1 {
            best = (x.clone(), residual);
        }
        if residual <= cfg.tol_residual {
            return Ok(Run {
                x,
                residual,
                sweeps: sweep,
                stop: StopReason::Residual,
            });
        }
        if max_change <= cfg.tol_sweep && residual <= 10.0 * cfg.tol_residual {
            return Ok(Run {
                x,
                residual,
                sweeps: sweep,
                stop: StopReason::Stagnation,
            });
        }
    }
    Ok(Run {
        x: best.0,
        residual: best.1,
        sweeps: cfg.max_sweeps,
        stop: StopReason::MaxSweeps,
    })
}
