//! Stackelberg-Cournot-Nash equilibria with a single leader.
//!
//! The followers play Cournot-Nash among themselves against the leader's
//! announced production. Substituting their equilibrium turns the leader's
//! problem into the minimization of a univariate, locally Lipschitz
//! function `Θ` over the leader's admissible interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Market;
use crate::nash::{self, evaluate_profile, SolverConfig, StopReason};
use crate::scalar_min::{minimize_lipschitz, ScalarProblem};

/// Default number of outer multi-start seeds.
pub const DEFAULT_OUTER_STARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeaderOptions {
    pub n_starts: usize,
    /// Jitters the multi-start grid; `None` keeps it uniform.
    pub seed: Option<u64>,
}

impl Default for LeaderOptions {
    fn default() -> Self {
        LeaderOptions {
            n_starts: DEFAULT_OUTER_STARTS,
            seed: None,
        }
    }
}

/// Followers' equilibrium for one leader production.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerEquilibrium {
    /// Follower productions in firm order, leader omitted.
    pub x: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergResult {
    /// Zero-based index of the leader.
    pub leader: usize,
    pub leader_x: f64,
    pub follower_x: Vec<f64>,
    pub leader_profit: f64,
    pub follower_profits: Vec<f64>,
    /// Full production profile, leader included.
    pub x: Vec<f64>,
    pub total_costs: Vec<f64>,
    pub profits: Vec<f64>,
    pub change_costs: Vec<f64>,
    pub theta_evals: usize,
    /// Worst follower residual over all `Θ` evaluations.
    pub worst_follower_residual: f64,
    /// Follower residual at the returned point.
    pub residual: f64,
    pub follower_failures: usize,
    pub converged: bool,
}

/// The inner tolerance is an order of magnitude below the outer one.
fn inner_config(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        tol_residual: cfg.tol_residual / 10.0,
        ..*cfg
    }
}

fn check_leader(m: &Market, leader: usize, leader_x: f64) -> Result<()> {
    if m.len() < 2 {
        return Err(Error::Precondition(
            "a Stackelberg game needs at least two firms".into(),
        ));
    }
    if leader >= m.len() {
        return Err(Error::Precondition(format!(
            "leader index {} out of range for {} firms",
            leader + 1,
            m.len()
        )));
    }
    let f = m.firm(leader);
    if !(f.lo <= leader_x && leader_x <= f.hi) {
        return Err(Error::Precondition(format!(
            "leader production {leader_x} outside [{}, {}]",
            f.lo, f.hi
        )));
    }
    Ok(())
}

fn followers(m: &Market, leader: usize) -> Vec<usize> {
    (0..m.len()).filter(|&i| i != leader).collect()
}

/// Gauss-Seidel over the followers with the leader held at `leader_x`.
/// `warm` holds follower productions (leader omitted); the anchors are used
/// without it.
pub fn followers_equilibrium(
    m: &Market,
    leader: usize,
    leader_x: f64,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<FollowerEquilibrium> {
    check_leader(m, leader, leader_x)?;
    let active = followers(m, leader);
    let mut x0 = m.anchors();
    x0[leader] = leader_x;
    if let Some(w) = warm {
        if w.len() != active.len() {
            return Err(Error::Precondition(format!(
                "warm start has {} entries, expected {}",
                w.len(),
                active.len()
            )));
        }
        for (&i, &v) in active.iter().zip(w) {
            let f = m.firm(i);
            x0[i] = v.clamp(f.lo, f.hi);
        }
    }
    let run = nash::iterate(m, &x0, &active, &inner_config(cfg), |_| {})?;
    Ok(FollowerEquilibrium {
        x: active.iter().map(|&i| run.x[i]).collect(),
        residual: run.residual,
        sweeps: run.sweeps,
        converged: run.stop != StopReason::MaxSweeps,
    })
}

fn assemble(m: &Market, leader: usize, leader_x: f64, follower_x: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(m.len());
    let mut it = follower_x.iter();
    for i in 0..m.len() {
        if i == leader {
            x.push(leader_x);
        } else {
            x.push(*it.next().expect("follower count"));
        }
    }
    x
}

/// Evaluates `Θ` with warm starts chained from one call to the next.
pub struct ThetaEvaluator<'a> {
    market: &'a Market,
    leader: usize,
    cfg: SolverConfig,
    warm: Option<Vec<f64>>,
    pub evals: usize,
    pub worst_residual: f64,
    pub failures: usize,
}

impl<'a> ThetaEvaluator<'a> {
    pub fn new(market: &'a Market, leader: usize, cfg: &SolverConfig) -> Self {
        ThetaEvaluator {
            market,
            leader,
            cfg: *cfg,
            warm: None,
            evals: 0,
            worst_residual: 0.0,
            failures: 0,
        }
    }

    /// Solves the followers' game and returns the full profile.
    pub fn profile(&mut self, leader_x: f64) -> Result<(Vec<f64>, FollowerEquilibrium)> {
        let eq = followers_equilibrium(
            self.market,
            self.leader,
            leader_x,
            self.warm.as_deref(),
            &self.cfg,
        )?;
        self.evals += 1;
        self.worst_residual = self.worst_residual.max(eq.residual);
        if !eq.converged {
            self.failures += 1;
        }
        self.warm = Some(eq.x.clone());
        Ok((assemble(self.market, self.leader, leader_x, &eq.x), eq))
    }

    pub fn theta(&mut self, leader_x: f64) -> Result<f64> {
        let (x, _) = self.profile(leader_x)?;
        nash::player_objective(self.market, self.leader, &x)
    }
}

/// The leader's total cost when the followers respond optimally.
pub fn theta(m: &Market, leader: usize, leader_x: f64, cfg: &SolverConfig) -> Result<f64> {
    ThetaEvaluator::new(m, leader, cfg).theta(leader_x)
}

/// Minimizes `Θ` over the leader's interval by multi-start golden section,
/// with the leader's anchor as an explicit candidate.
pub fn solve_leader(
    m: &Market,
    leader: usize,
    cfg: &SolverConfig,
    opts: &LeaderOptions,
) -> Result<StackelbergResult> {
    cfg.validate()?;
    if leader >= m.len() {
        return Err(Error::Precondition(format!(
            "leader index {} out of range for {} firms",
            leader + 1,
            m.len()
        )));
    }
    let lf = *m.firm(leader);
    check_leader(m, leader, lf.anchor)?;
    let mut eval = ThetaEvaluator::new(m, leader, cfg);

    let best = if lf.lo == lf.hi {
        lf.lo
    } else {
        let tol_x = 1e-9 * (lf.hi - lf.lo);
        let mut problem =
            ScalarProblem::new(|z| eval.theta(z), lf.lo, lf.hi)?.with_kinks([lf.anchor])?;
        minimize_lipschitz(&mut problem, tol_x, opts.n_starts, opts.seed)?.x
    };

    let (x, eq) = eval.profile(best)?;
    let (total_costs, profits, change_costs) = evaluate_profile(m, &x)?;
    let follower_profits = profits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != leader)
        .map(|(_, p)| *p)
        .collect();
    Ok(StackelbergResult {
        leader,
        leader_x: best,
        follower_x: eq.x,
        leader_profit: profits[leader],
        follower_profits,
        x,
        total_costs,
        profits,
        change_costs,
        theta_evals: eval.evals,
        worst_follower_residual: eval.worst_residual,
        residual: eq.residual,
        follower_failures: eval.failures,
        converged: eq.converged && eval.failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{DemandCurve, FirmParams};

    fn firm(b: f64, beta: f64, anchor: f64) -> FirmParams {
        FirmParams {
            b,
            delta: 1.0,
            cap_k: 5.0,
            beta,
            anchor,
            lo: 0.001,
            hi: 1000.0,
        }
    }

    fn market(firms: Vec<FirmParams>) -> Market {
        Market::new(DemandCurve::new(1.0, 5000.0).unwrap(), firms).unwrap()
    }

    #[test]
    fn single_follower_is_one_best_response() {
        let m = market(vec![firm(3.0, 0.0, 40.0), firm(2.0, 0.0, 40.0)]);
        let cfg = SolverConfig::default();
        let eq = followers_equilibrium(&m, 0, 55.0, None, &cfg).unwrap();
        let br = nash::best_response(&m, 1, 55.0, &cfg).unwrap();
        assert_eq!(eq.x, vec![br]);
        assert_eq!(eq.sweeps, 1);
    }

    #[test]
    fn theta_at_anchor_has_no_change_cost() {
        let m = market(vec![
            firm(3.0, 0.7, 40.0),
            firm(2.0, 0.0, 40.0),
            firm(4.0, 1.0, 30.0),
        ]);
        let cfg = SolverConfig::default();
        let mut ev = ThetaEvaluator::new(&m, 0, &cfg);
        let (x, _) = ev.profile(40.0).unwrap();
        let (costs, _, change) = evaluate_profile(&m, &x).unwrap();
        assert_eq!(change[0], 0.0);
        assert_eq!(theta(&m, 0, 40.0, &cfg).unwrap(), costs[0]);
    }

    #[test]
    fn leader_checks() {
        let m = market(vec![firm(3.0, 0.0, 40.0), firm(2.0, 0.0, 40.0)]);
        let cfg = SolverConfig::default();
        assert!(followers_equilibrium(&m, 0, 2000.0, None, &cfg).is_err());
        assert!(followers_equilibrium(&m, 5, 20.0, None, &cfg).is_err());
        assert!(followers_equilibrium(&m, 0, 20.0, Some(&[1.0, 2.0]), &cfg).is_err());
        let mono = market(vec![firm(3.0, 0.0, 40.0)]);
        assert!(solve_leader(&mono, 0, &cfg, &LeaderOptions::default()).is_err());
    }
}
