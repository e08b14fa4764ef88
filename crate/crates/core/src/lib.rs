//! Equilibria of oligopolistic markets whose firms pay a cost for changing
//! their production.
//!
//! * [`market`]: inverse demand, production costs, pseudo-gradient and Jacobian.
//! * [`scalar_min`]: bounded univariate minimization with explicit kinks.
//! * [`nash`]: Cournot-Nash equilibria by nonsmooth Gauss-Seidel iteration.
//! * [`stackelberg`]: one leader anticipating the followers' equilibrium.
//! * [`sensitivity`]: uniqueness certificate, critical cones and directional
//!   responses of the equilibrium to parameter changes.
//! * [`scenario`], [`timeline`], [`report`]: configuration, the period-by-period
//!   evolution driver, and table/curve output.

// `!(a <= b)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod market;
pub mod nash;
pub mod reference;
pub mod report;
pub mod scalar_min;
pub mod scenario;
pub mod sensitivity;
pub mod stackelberg;
pub mod timeline;

pub use error::{Error, Result};
pub use market::{DemandCurve, FirmParams, Market};
pub use nash::{EquilibriumResult, SolverConfig};
