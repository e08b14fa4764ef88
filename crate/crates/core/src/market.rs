//! Market data and the smooth parts of the firms' objectives.
//!
//! Inverse demand is the isoelastic curve `π(T) = s^{1/γ} T^{-1/γ}` and firm
//! `i` produces at cost
//!
//! ```text
//! c_i(x) = b_i x + δ_i/(δ_i+1) K_i^{-1/δ_i} x^{(1+δ_i)/δ_i}
//! ```
//!
//! The pseudo-gradient stacks each firm's derivative of its own smooth cost
//! `c_i(x_i) - x_i π(T)` with respect to its own production. Its Jacobian
//! drives both the uniqueness certificate and the sensitivity analysis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default demand scale `s` of the isoelastic curve.
pub const DEFAULT_DEMAND_SCALE: f64 = 5000.0;

fn default_scale() -> f64 {
    DEFAULT_DEMAND_SCALE
}

/// Isoelastic inverse demand curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandCurve {
    /// Demand elasticity.
    pub gamma: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

/// Price and its first two derivatives with respect to total supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceDerivs {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

impl DemandCurve {
    pub fn new(gamma: f64, scale: f64) -> Result<Self> {
        let d = DemandCurve { gamma, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "demand elasticity must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "demand scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    fn check_total(total: f64) -> Result<()> {
        if total > 0.0 && total.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "total supply must be positive, got {total}"
            )))
        }
    }

    /// Market-clearing price for a total supply `total > 0`.
    pub fn price(&self, total: f64) -> Result<f64> {
        Self::check_total(total)?;
        Ok(self.price_unchecked(total))
    }

    fn price_unchecked(&self, total: f64) -> f64 {
        (self.scale / total).powf(1.0 / self.gamma)
    }

    pub fn price_derivs(&self, total: f64) -> Result<PriceDerivs> {
        Self::check_total(total)?;
        let inv_g = 1.0 / self.gamma;
        let value = self.price_unchecked(total);
        let slope = -inv_g * value / total;
        let curvature = inv_g * (inv_g + 1.0) * value / (total * total);
        Ok(PriceDerivs {
            value,
            slope,
            curvature,
        })
    }

    /// Derivatives of `π` and `∂π/∂T` with respect to the elasticity.
    pub fn gamma_derivs(&self, total: f64) -> Result<(f64, f64)> {
        Self::check_total(total)?;
        let g = self.gamma;
        let value = self.price_unchecked(total);
        let log_ratio = (self.scale / total).ln();
        let d_value = -value * log_ratio / (g * g);
        // ∂π/∂T = -π/(γT)
        let d_slope = -d_value / (g * total) + value / (g * g * total);
        Ok((d_value, d_slope))
    }
}

/// Cost data of one firm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmParams {
    /// Linear cost coefficient.
    pub b: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub cap_k: f64,
    /// Weight of the cost of change.
    pub beta: f64,
    /// Production in the previous period; the kink of the cost of change.
    #[serde(rename = "a")]
    pub anchor: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Production cost and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostDerivs {
    pub value: f64,
    pub marginal: f64,
    pub curvature: f64,
}

impl FirmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMarket(msg));
        let all = [
            self.b,
            self.delta,
            self.cap_k,
            self.beta,
            self.anchor,
            self.lo,
            self.hi,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad(format!("non-finite firm parameter in {self:?}"));
        }
        if self.b < 0.0 {
            return bad(format!("b must be nonnegative, got {}", self.b));
        }
        if self.delta <= 0.0 {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.cap_k <= 0.0 {
            return bad(format!("K must be positive, got {}", self.cap_k));
        }
        if self.beta < 0.0 {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(0.0 <= self.lo && self.lo <= self.hi) {
            return bad(format!(
                "interval [{}, {}] must satisfy 0 <= lo <= hi",
                self.lo, self.hi
            ));
        }
        if !(self.lo <= self.anchor && self.anchor <= self.hi) {
            return bad(format!(
                "anchor {} outside [{}, {}]",
                self.anchor, self.lo, self.hi
            ));
        }
        Ok(())
    }

    /// `(x/K)^{1/δ}`, the nonlinear part of the marginal cost.
    fn power_term(&self, x: f64) -> f64 {
        (x / self.cap_k).powf(1.0 / self.delta)
    }

    pub fn prod_cost(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!(
                "production must be nonnegative, got {x}"
            )));
        }
        let d = self.delta;
        Ok(self.b * x + d / (d + 1.0) * x * self.power_term(x))
    }

    pub fn prod_cost_derivs(&self, x: f64) -> Result<CostDerivs> {
        let value = self.prod_cost(x)?;
        let marginal = self.b + self.power_term(x);
        let curvature = if x > 0.0 {
            self.power_term(x) / (self.delta * x)
        } else if self.delta > 1.0 {
            return Err(Error::Domain(format!(
                "cost curvature is unbounded at x = 0 for delta = {}",
                self.delta
            )));
        } else {
            // δ ≤ 1: x^{1/δ-1} is finite at 0
            self.cap_k.powf(-1.0 / self.delta) * x.powf(1.0 / self.delta - 1.0) / self.delta
        };
        Ok(CostDerivs {
            value,
            marginal,
            curvature,
        })
    }

    /// Cost of change `β|x - a|`.
    pub fn change_cost(&self, x: f64) -> f64 {
        self.beta * (x - self.anchor).abs()
    }

    pub fn term(&self) -> NonsmoothTerm {
        NonsmoothTerm {
            beta: self.beta,
            anchor: self.anchor,
            lo: self.lo,
            hi: self.hi,
        }
    }
}

/// The nonsmooth part `β|x - a| + δ_[lo,hi](x)` of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonsmoothTerm {
    pub beta: f64,
    pub anchor: f64,
    pub lo: f64,
    pub hi: f64,
}

impl NonsmoothTerm {
    /// Subdifferential at `x` as a closed interval, possibly unbounded.
    pub fn subdifferential(&self, x: f64) -> (f64, f64) {
        let (mut lower, mut upper) = if x > self.anchor {
            (self.beta, self.beta)
        } else if x < self.anchor {
            (-self.beta, -self.beta)
        } else {
            (-self.beta, self.beta)
        };
        if x <= self.lo {
            lower = f64::NEG_INFINITY;
        }
        if x >= self.hi {
            upper = f64::INFINITY;
        }
        (lower, upper)
    }

    /// Distance from zero to `g + ∂(β|·-a| + δ_[lo,hi])(x)`.
    pub fn kkt_residual(&self, g: f64, x: f64) -> f64 {
        let (lower, upper) = self.subdifferential(x);
        if g + lower > 0.0 {
            g + lower
        } else if g + upper < 0.0 {
            -(g + upper)
        } else {
            0.0
        }
    }
}

/// An oligopoly: one demand curve and the ordered list of firms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarket", into = "RawMarket")]
pub struct Market {
    demand: DemandCurve,
    firms: Vec<FirmParams>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    demand: DemandCurve,
    firms: Vec<FirmParams>,
}

impl TryFrom<RawMarket> for Market {
    type Error = Error;

    fn try_from(raw: RawMarket) -> Result<Self> {
        Market::new(raw.demand, raw.firms)
    }
}

impl From<Market> for RawMarket {
    fn from(m: Market) -> Self {
        RawMarket {
            demand: m.demand,
            firms: m.firms,
        }
    }
}

impl Market {
    pub fn new(demand: DemandCurve, firms: Vec<FirmParams>) -> Result<Self> {
        demand.validate()?;
        if firms.is_empty() {
            return Err(Error::InvalidMarket("market has no firms".into()));
        }
        for (i, f) in firms.iter().enumerate() {
            f.validate()
                .map_err(|e| Error::InvalidMarket(format!("firm {}: {e}", i + 1)))?;
        }
        if !firms.iter().any(|f| f.lo > 0.0) {
            return Err(Error::InvalidMarket(
                "at least one firm needs a positive lower production bound".into(),
            ));
        }
        Ok(Market { demand, firms })
    }

    pub fn demand(&self) -> &DemandCurve {
        &self.demand
    }

    pub fn firms(&self) -> &[FirmParams] {
        &self.firms
    }

    pub fn firm(&self, i: usize) -> &FirmParams {
        &self.firms[i]
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }

    pub fn anchors(&self) -> Vec<f64> {
        self.firms.iter().map(|f| f.anchor).collect()
    }

    /// Copy of the market with the linear cost coefficients replaced.
    pub fn with_b(&self, b: &[f64]) -> Result<Market> {
        self.with_column(b, "b", |f, v| f.b = v)
    }

    /// Copy of the market with the anchors replaced.
    pub fn with_anchors(&self, anchors: &[f64]) -> Result<Market> {
        self.with_column(anchors, "anchor", |f, v| f.anchor = v)
    }

    pub fn with_betas(&self, betas: &[f64]) -> Result<Market> {
        self.with_column(betas, "beta", |f, v| f.beta = v)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Market> {
        Market::new(
            DemandCurve::new(gamma, self.demand.scale)?,
            self.firms.clone(),
        )
    }

    fn with_column(
        &self,
        values: &[f64],
        what: &str,
        set: impl Fn(&mut FirmParams, f64),
    ) -> Result<Market> {
        if values.len() != self.len() {
            return Err(Error::InvalidMarket(format!(
                "{what} vector has length {}, market has {} firms",
                values.len(),
                self.len()
            )));
        }
        let mut firms = self.firms.clone();
        for (f, &v) in firms.iter_mut().zip(values) {
            set(f, v);
        }
        Market::new(self.demand, firms)
    }

    fn check_profile(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.len() {
            return Err(Error::Domain(format!(
                "profile has length {}, market has {} firms",
                x.len(),
                self.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!(
                "productions must be nonnegative, got {v}"
            )));
        }
        Ok(x.iter().sum())
    }

    /// `F_i(x) = c_i'(x_i) - x_i π'(T) - π(T)`.
    pub fn pseudo_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let total = self.check_profile(x)?;
        let p = self.demand.price_derivs(total)?;
        self.firms
            .iter()
            .zip(x)
            .map(|(f, &xi)| {
                let mc = f.b + f.power_term(xi);
                Ok(mc - xi * p.slope - p.value)
            })
            .collect()
    }

    /// `∂F_i/∂x_j = -x_i π''(T) - π'(T) + [i=j](c_i''(x_i) - π'(T))`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let total = self.check_profile(x)?;
        let p = self.demand.price_derivs(total)?;
        let l = self.len();
        let mut jac = DMatrix::zeros(l, l);
        for (i, (f, &xi)) in self.firms.iter().zip(x).enumerate() {
            let off = -xi * p.curvature - p.slope;
            for j in 0..l {
                jac[(i, j)] = off;
            }
            jac[(i, i)] += f.prod_cost_derivs(xi)?.curvature - p.slope;
        }
        Ok(jac)
    }

    /// Derivative of the pseudo-gradient with respect to the parameters
    /// `(b_1, …, b_l, γ)`, an `l × (l+1)` matrix.
    pub fn param_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let total = self.check_profile(x)?;
        let (d_value, d_slope) = self.demand.gamma_derivs(total)?;
        let l = self.len();
        let mut jac = DMatrix::zeros(l, l + 1);
        for (i, &xi) in x.iter().enumerate() {
            jac[(i, i)] = 1.0;
            jac[(i, l)] = -d_value - xi * d_slope;
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn firm(b: f64, delta: f64, k: f64) -> FirmParams {
        FirmParams {
            b,
            delta,
            cap_k: k,
            beta: 0.0,
            anchor: 1.0,
            lo: 0.001,
            hi: 1000.0,
        }
    }

    #[test]
    fn price_closed_form_values() {
        let d = DemandCurve::new(1.0, 5000.0).unwrap();
        assert_eq!(d.price(5000.0).unwrap(), 1.0);
        assert_eq!(d.price(250.0).unwrap(), 20.0);
    }

    #[test]
    fn price_rejects_nonpositive_total() {
        let d = DemandCurve::new(1.0, 5000.0).unwrap();
        assert!(matches!(d.price(0.0), Err(Error::Domain(_))));
        assert!(matches!(d.price(-3.0), Err(Error::Domain(_))));
        assert!(d.price_derivs(0.0).is_err());
    }

    #[test]
    fn price_derivs_unit_elasticity() {
        let d = DemandCurve::new(1.0, 5000.0).unwrap();
        let p = d.price_derivs(100.0).unwrap();
        assert!((p.slope + 0.5).abs() < 1e-14);
        assert!((p.curvature - 0.01).abs() < 1e-15);
    }

    #[test]
    fn quadratic_cost_case() {
        let f = firm(2.0, 1.0, 5.0);
        assert!((f.prod_cost(10.0).unwrap() - 30.0).abs() < 1e-12);
        let c = f.prod_cost_derivs(10.0).unwrap();
        assert!((c.marginal - 4.0).abs() < 1e-12);
        assert!((c.curvature - 0.2).abs() < 1e-12);
        assert_eq!(firm(9.0, 0.8, 3.0).prod_cost(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cost_domain_errors() {
        assert!(firm(1.0, 1.0, 1.0).prod_cost(-1e-9).is_err());
        assert!(firm(1.0, 1.2, 5.0).prod_cost_derivs(0.0).is_err());
        let c = firm(0.0, 1.0, 1.0).prod_cost_derivs(0.0).unwrap();
        assert_eq!(c.marginal, 0.0);
        assert_eq!(c.curvature, 1.0);
    }

    #[test]
    fn market_validation() {
        let d = DemandCurve::new(1.0, 5000.0).unwrap();
        let mut f = firm(1.0, 1.0, 1.0);
        f.lo = 0.0;
        f.anchor = 0.0;
        assert!(Market::new(d, vec![f, f]).is_err());
        let mut g = f;
        g.lo = 0.5;
        g.anchor = 0.1;
        assert!(Market::new(d, vec![f, g]).is_err());
        g.anchor = 0.5;
        assert!(Market::new(d, vec![f, g]).is_ok());
        assert!(Market::new(d, vec![]).is_err());
        assert!(DemandCurve::new(0.0, 5000.0).is_err());
    }

    #[test]
    fn unit_elasticity_rows_have_equal_off_diagonals() {
        let d = DemandCurve::new(1.0, 5000.0).unwrap();
        let firms = vec![
            firm(1.0, 1.2, 5.0),
            firm(2.0, 1.0, 5.0),
            firm(3.0, 0.8, 5.0),
        ];
        let m = Market::new(d, firms).unwrap();
        let jac = m.jacobian(&[30.0, 45.0, 12.0]).unwrap();
        for i in 0..3 {
            let offs: Vec<f64> = (0..3).filter(|&j| j != i).map(|j| jac[(i, j)]).collect();
            assert_eq!(offs[0], offs[1]);
        }
    }
}
