//! Stability and first-order sensitivity of the equilibrium map.
//!
//! At a solution `x̄` of `0 ∈ F(p, x) + ∂q̃(x)` with
//! `q̃(x) = Σ_i β_i|x_i - a_i| + δ_[lo_i, hi_i](x_i)`:
//!
//! * a positive-definite `∇_x F` certifies that the solution map has a
//!   single-valued Lipschitz localization;
//! * each coordinate gets a critical cone
//!   `K_i = {w | q̃_i'(x̄_i; w) = v̄_i w}`, `v̄ = -F(p̄, x̄)`, which for a
//!   piecewise-linear `q̃_i` is one of `{0}`, `ℝ`, `ℝ₊`, `ℝ₋`;
//! * the directional response `k` to a parameter direction `h` solves the
//!   affine generalized equation `0 ∈ ∇_p F h + ∇_x F k + N_K(k)`, found here
//!   by enumerating the faces of the cone product.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Market, NonsmoothTerm};

/// Critical cone of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConeTag {
    /// `{0}`
    Zero,
    /// `ℝ`
    Free,
    /// `ℝ₊`
    Nonneg,
    /// `ℝ₋`
    Nonpos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    LipschitzLocalizationCertified,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityOptions {
    /// A multiplier this close to an end of its subdifferential interval
    /// counts as touching it.
    pub boundary_margin: f64,
    /// Largest per-coordinate KKT residual accepted as a solution.
    pub kkt_tol: f64,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        SensitivityOptions {
            boundary_margin: 1e-9,
            kkt_tol: 1e-6,
        }
    }
}

/// Linearization data of a generalized equation at a reference solution.
#[derive(Debug, Clone, PartialEq)]
pub struct GePoint {
    pub x: Vec<f64>,
    /// `F(p̄, x̄)`
    pub g: Vec<f64>,
    /// `∇_x F(p̄, x̄)`
    pub jac_x: DMatrix<f64>,
    /// `∇_p F(p̄, x̄)`
    pub jac_p: DMatrix<f64>,
    pub terms: Vec<NonsmoothTerm>,
}

impl GePoint {
    /// Linearizes the market at `x`; parameters are `(b_1, …, b_l, γ)`.
    pub fn from_market(m: &Market, x: &[f64]) -> Result<Self> {
        Ok(GePoint {
            x: x.to_vec(),
            g: m.pseudo_gradient(x)?,
            jac_x: m.jacobian(x)?,
            jac_p: m.param_jacobian(x)?,
            terms: m.firms().iter().map(|f| f.term()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub jac: Vec<Vec<f64>>,
    pub min_sym_eig: f64,
    pub pd: bool,
    pub cones: Vec<ConeTag>,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalResponse {
    pub h: Vec<f64>,
    pub k: Vec<f64>,
    /// Face of each coordinate's cone that carries the response.
    pub active_pattern: Vec<ConeTag>,
}

/// Critical cone of coordinate `i` at a reference solution.
pub fn critical_cone_at(pt: &GePoint, i: usize, opts: &SensitivityOptions) -> Result<ConeTag> {
    let term = &pt.terms[i];
    let (x, g) = (pt.x[i], pt.g[i]);
    let residual = term.kkt_residual(g, x);
    if !(residual <= opts.kkt_tol) {
        return Err(Error::Precondition(format!(
            "coordinate {} is not a solution (residual {residual:e}); critical cone undefined",
            i + 1
        )));
    }
    if term.lo == term.hi {
        return Ok(ConeTag::Zero);
    }
    let v = -g;
    let (lower, upper) = term.subdifferential(x);
    if lower == upper {
        return Ok(ConeTag::Free);
    }
    // q̃'(x; w) = sup{s w : s ∈ [lower, upper]}, so w > 0 is critical iff
    // v sits at the upper end and w < 0 iff it sits at the lower end.
    let up = upper.is_finite() && (v - upper).abs() <= opts.boundary_margin;
    let down = lower.is_finite() && (v - lower).abs() <= opts.boundary_margin;
    Ok(match (down, up) {
        (true, true) => ConeTag::Free,
        (false, true) => ConeTag::Nonneg,
        (true, false) => ConeTag::Nonpos,
        (false, false) => ConeTag::Zero,
    })
}

pub fn critical_cone(m: &Market, i: usize, x: &[f64]) -> Result<ConeTag> {
    critical_cone_at(
        &GePoint::from_market(m, x)?,
        i,
        &SensitivityOptions::default(),
    )
}

pub fn critical_cones(pt: &GePoint, opts: &SensitivityOptions) -> Result<Vec<ConeTag>> {
    (0..pt.dim())
        .map(|i| critical_cone_at(pt, i, opts))
        .collect()
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

pub fn check_localization_at(
    pt: &GePoint,
    opts: &SensitivityOptions,
) -> Result<LocalizationReport> {
    let cones = critical_cones(pt, opts)?;
    let min_sym_eig = min_symmetric_eigenvalue(&pt.jac_x);
    let pd = min_sym_eig > 0.0;
    let (verdict, note) = if pd {
        (
            Verdict::LipschitzLocalizationCertified,
            "Jacobian of the pseudo-gradient is positive definite; the solution map is \
             single-valued and Lipschitz near this point"
                .to_string(),
        )
    } else {
        (
            Verdict::Inconclusive,
            "Jacobian of the pseudo-gradient is not positive definite; the sufficient \
             condition does not apply (no coderivative test is attempted)"
                .to_string(),
        )
    };
    let jac = (0..pt.jac_x.nrows())
        .map(|r| pt.jac_x.row(r).iter().copied().collect())
        .collect();
    Ok(LocalizationReport {
        jac,
        min_sym_eig,
        pd,
        cones,
        verdict,
        note,
    })
}

pub fn check_localization(m: &Market, x: &[f64]) -> Result<LocalizationReport> {
    check_localization_at(&GePoint::from_market(m, x)?, &SensitivityOptions::default())
}

/// Solves `0 ∈ ∇_p F h + ∇_x F k + N_K(k)` over the product of critical
/// cones. Every `ℝ₊`/`ℝ₋` coordinate is either pinned at zero or released
/// onto its half-line; the released and `ℝ` coordinates solve the square
/// linear system, and a face is accepted when the released coordinates have
/// the right sign and the pinned ones have a multiplier of the right sign.
pub fn graphical_derivative_at(
    pt: &GePoint,
    cones: &[ConeTag],
    h: &[f64],
) -> Result<DirectionalResponse> {
    let n = pt.dim();
    if cones.len() != n {
        return Err(Error::Precondition(format!(
            "{} cone tags for {n} coordinates",
            cones.len()
        )));
    }
    if h.len() != pt.jac_p.ncols() {
        return Err(Error::Precondition(format!(
            "direction has {} entries, expected {}",
            h.len(),
            pt.jac_p.ncols()
        )));
    }
    let rhs = &pt.jac_p * DVector::from_column_slice(h);
    let tol = 1e-10 * (1.0 + rhs.amax());
    let ambiguous: Vec<usize> = (0..n)
        .filter(|&i| matches!(cones[i], ConeTag::Nonneg | ConeTag::Nonpos))
        .collect();

    let mut found: Option<(Vec<f64>, Vec<ConeTag>)> = None;
    for mask in 0u64..(1u64 << ambiguous.len()) {
        let mut pattern: Vec<ConeTag> = cones.to_vec();
        for (bit, &i) in ambiguous.iter().enumerate() {
            if mask & (1 << bit) == 0 {
                pattern[i] = ConeTag::Zero;
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] != ConeTag::Zero).collect();
        let mut k = vec![0.0; n];
        if !free.is_empty() {
            let sub = DMatrix::from_fn(free.len(), free.len(), |r, c| pt.jac_x[(free[r], free[c])]);
            let b = DVector::from_iterator(free.len(), free.iter().map(|&i| -rhs[i]));
            let Some(sol) = sub.lu().solve(&b) else {
                continue;
            };
            for (&i, v) in free.iter().zip(sol.iter()) {
                // normalizes -0.0
                k[i] = *v + 0.0;
            }
        }
        let r = &rhs + &pt.jac_x * DVector::from_column_slice(&k);
        let feasible = (0..n).all(|i| match (cones[i], pattern[i]) {
            (ConeTag::Nonneg, ConeTag::Nonneg) => k[i] >= -tol,
            (ConeTag::Nonpos, ConeTag::Nonpos) => k[i] <= tol,
            (ConeTag::Nonneg, ConeTag::Zero) => r[i] >= -tol,
            (ConeTag::Nonpos, ConeTag::Zero) => r[i] <= tol,
            _ => true,
        });
        if !feasible {
            continue;
        }
        match &found {
            None => found = Some((k, pattern)),
            Some((prev, _)) => {
                let scale = 1.0 + prev.iter().chain(&k).fold(0.0f64, |m, v| m.max(v.abs()));
                let same = prev
                    .iter()
                    .zip(&k)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * scale);
                if !same {
                    return Err(Error::MultipleSolutions(prev.clone(), k));
                }
            }
        }
    }
    let (k, active_pattern) = found.ok_or(Error::NoSolutionFound)?;
    Ok(DirectionalResponse {
        h: h.to_vec(),
        k,
        active_pattern,
    })
}

/// Directional response of the market equilibrium at `x` to a change `h`
/// of `(b_1, …, b_l, γ)`.
pub fn graphical_derivative(m: &Market, x: &[f64], h: &[f64]) -> Result<DirectionalResponse> {
    let pt = GePoint::from_market(m, x)?;
    let cones = critical_cones(&pt, &SensitivityOptions::default())?;
    graphical_derivative_at(&pt, &cones, h)
}
