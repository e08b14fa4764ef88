//! Bounded univariate minimization of piecewise-smooth functions.
//!
//! The objective may fail to be differentiable at a known, finite set of
//! kinks. The interval is split at the kinks, every piece is searched by
//! golden section, and the kinks and both bounds always enter the final
//! comparison as explicit candidates. A minimizer sitting on a kink is
//! therefore returned bit-exactly.

use crate::error::{Error, Result};

/// Candidates whose values agree within this absolute margin are ties. Ties
/// go to kinks and bounds first, then to the leftmost point.
pub const TIE_MARGIN: f64 = 1e-12;

/// Default number of seeds for [`minimize_lipschitz`].
pub const DEFAULT_STARTS: usize = 16;

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const MAX_GOLDEN_ITERS: usize = 200;

/// Side of a one-sided derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A bounded scalar problem `min f(x), x ∈ [lo, hi]`.
pub struct ScalarProblem<F> {
    pub objective: F,
    pub lo: f64,
    pub hi: f64,
    pub kinks: Vec<f64>,
    pub convex_hint: bool,
}

/// Outcome of a scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub f: f64,
    pub evals: usize,
}

impl<F> ScalarProblem<F>
where
    F: FnMut(f64) -> Result<f64>,
{
    pub fn new(objective: F, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Precondition(format!(
                "scalar problem needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(ScalarProblem {
            objective,
            lo,
            hi,
            kinks: Vec::new(),
            convex_hint: false,
        })
    }

    pub fn with_kinks(mut self, kinks: impl IntoIterator<Item = f64>) -> Result<Self> {
        for k in kinks {
            if !(self.lo <= k && k <= self.hi) {
                return Err(Error::Precondition(format!(
                    "kink {k} outside [{}, {}]",
                    self.lo, self.hi
                )));
            }
            self.kinks.push(k);
        }
        Ok(self)
    }

    pub fn convex(mut self) -> Self {
        self.convex_hint = true;
        self
    }

    /// Bounds and kinks, sorted and deduplicated.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(self.kinks.len() + 2);
        pts.push(self.lo);
        pts.extend(self.kinks.iter().copied());
        pts.push(self.hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Tracks the best candidate seen so far.
struct Tracker {
    /// (x, f, is_breakpoint)
    best: Option<(f64, f64, bool)>,
    evals: usize,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            best: None,
            evals: 0,
        }
    }

    fn offer(&mut self, x: f64, f: f64, breakpoint: bool) {
        let better = match self.best {
            None => true,
            Some((bx, bf, bb)) => {
                if (f - bf).abs() <= TIE_MARGIN {
                    (breakpoint && !bb) || (breakpoint == bb && x < bx)
                } else {
                    f < bf
                }
            }
        };
        if better {
            self.best = Some((x, f, breakpoint));
        }
    }

    fn eval_at<F: FnMut(f64) -> Result<f64>>(
        &mut self,
        f: &mut F,
        x: f64,
        breakpoint: bool,
    ) -> Result<f64> {
        let v = f(x)?;
        self.evals += 1;
        if v.is_nan() {
            return Err(Error::Domain(format!("objective returned NaN at {x}")));
        }
        self.offer(x, v, breakpoint);
        Ok(v)
    }

    fn eval<F: FnMut(f64) -> Result<f64>>(&mut self, f: &mut F, x: f64) -> Result<f64> {
        self.eval_at(f, x, false)
    }

    fn finish(self) -> ScalarMin {
        let (x, f, _) = self.best.expect("at least one evaluation");
        ScalarMin {
            x,
            f,
            evals: self.evals,
        }
    }
}

/// Golden-section search on `[a, b]`. Every evaluation is offered to the
/// tracker; the final bracket is returned.
fn golden<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    tracker: &mut Tracker,
    mut a: f64,
    mut b: f64,
    tol_x: f64,
) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = tracker.eval(f, c)?;
    let mut fd = tracker.eval(f, d)?;
    for _ in 0..MAX_GOLDEN_ITERS {
        if b - a <= tol_x {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            if !(a < c && c < d) {
                break;
            }
            fc = tracker.eval(f, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            if !(c < d && d < b) {
                break;
            }
            fd = tracker.eval(f, d)?;
        }
    }
    Ok((a, b))
}

/// Minimizes a convex piecewise-smooth function: golden section on every
/// piece between consecutive breakpoints, then the best of all interior
/// candidates, kinks and bounds.
pub fn minimize_convex<F>(p: &mut ScalarProblem<F>, tol_x: f64) -> Result<ScalarMin>
where
    F: FnMut(f64) -> Result<f64>,
{
    let pts = p.breakpoints();
    let mut tracker = Tracker::new();
    for &x in &pts {
        tracker.eval_at(&mut p.objective, x, true)?;
    }
    for w in pts.windows(2) {
        golden(&mut p.objective, &mut tracker, w[0], w[1], tol_x)?;
    }
    Ok(tracker.finish())
}

/// Convex minimization refined by one-sided derivatives.
///
/// `slope(x, side)` must return the one-sided derivative of the objective.
/// A breakpoint is selected when its one-sided slopes bracket zero;
/// otherwise the unique piece containing the minimizer is located by the
/// slopes at its ends, searched by golden section, and the golden bracket
/// is refined by bisection on the sign of the slope down to adjacent
/// floating-point numbers. The result is accurate to roundoff in the
/// slope, far below what value comparisons alone can resolve.
pub fn minimize_convex_with_slope<F, S>(
    p: &mut ScalarProblem<F>,
    mut slope: S,
    tol_x: f64,
) -> Result<ScalarMin>
where
    F: FnMut(f64) -> Result<f64>,
    S: FnMut(f64, Side) -> Result<f64>,
{
    let pts = p.breakpoints();
    let last = pts.len() - 1;
    let mut tracker = Tracker::new();

    for (idx, &x) in pts.iter().enumerate() {
        let left_ok = idx == 0 || slope(x, Side::Left)? <= 0.0;
        let right_ok = idx == last || slope(x, Side::Right)? >= 0.0;
        if left_ok && right_ok {
            let f = tracker.eval(&mut p.objective, x)?;
            return Ok(ScalarMin {
                x,
                f,
                evals: tracker.evals,
            });
        }
    }

    // No breakpoint is optimal, so the minimizer is interior to the piece
    // whose right-slope at the left end is negative and left-slope at the
    // right end is positive.
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if slope(u, Side::Right)? < 0.0 && slope(v, Side::Left)? > 0.0 {
            let (ga, gb) = golden(&mut p.objective, &mut tracker, u, v, tol_x)?;
            let mut a = if ga > u && slope(ga, Side::Right)? < 0.0 {
                ga
            } else {
                u
            };
            let mut b = if gb < v && slope(gb, Side::Left)? > 0.0 {
                gb
            } else {
                v
            };
            let (mut sa, mut sb) = (slope(a, Side::Right)?, slope(b, Side::Left)?);
            loop {
                let mid = 0.5 * (a + b);
                if !(a < mid && mid < b) {
                    break;
                }
                let sm = slope(mid, Side::Right)?;
                if sm == 0.0 {
                    a = mid;
                    b = mid;
                    sa = 0.0;
                    sb = 0.0;
                    break;
                } else if sm < 0.0 {
                    a = mid;
                    sa = sm;
                } else {
                    b = mid;
                    sb = sm;
                }
            }
            let x = if sa.abs() <= sb.abs() { a } else { b };
            let f = (p.objective)(x)?;
            tracker.evals += 1;
            return Ok(ScalarMin {
                x,
                f,
                evals: tracker.evals,
            });
        }
    }

    // Slopes inconsistent with convexity (roundoff at a flat spot); fall
    // back to value comparison.
    let mut fallback = minimize_convex(p, tol_x)?;
    fallback.evals += tracker.evals;
    Ok(fallback)
}

/// Minimizes a locally Lipschitz function by multi-start golden section.
///
/// The objective is sampled on `n_starts + 1` uniformly spaced seeds (plus
/// kinks). Around each discrete local minimum of the samples, a golden
/// section search runs on the bracketing pair of neighbouring seeds; at most
/// `n_starts` such searches run, lowest samples first. With `seed` set, the
/// interior seeds are jittered within their cells by a deterministic
/// generator.
pub fn minimize_lipschitz<F>(
    p: &mut ScalarProblem<F>,
    tol_x: f64,
    n_starts: usize,
    seed: Option<u64>,
) -> Result<ScalarMin>
where
    F: FnMut(f64) -> Result<f64>,
{
    use rand::{Rng, SeedableRng};

    let n = n_starts.max(1);
    let step = (p.hi - p.lo) / n as f64;
    let mut rng = seed.map(rand::rngs::StdRng::seed_from_u64);
    let structural = p.breakpoints();
    let mut grid: Vec<f64> = (0..=n)
        .map(|j| {
            if j == 0 {
                p.lo
            } else if j == n {
                p.hi
            } else {
                let base = p.lo + j as f64 * step;
                match rng.as_mut() {
                    Some(r) => base + step * (r.gen::<f64>() - 0.5),
                    None => base,
                }
            }
        })
        .collect();
    grid.extend(p.kinks.iter().copied());
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut tracker = Tracker::new();
    let mut values = Vec::with_capacity(grid.len());
    for &x in &grid {
        let is_bp = structural.binary_search_by(|v| v.total_cmp(&x)).is_ok();
        values.push(tracker.eval_at(&mut p.objective, x, is_bp)?);
    }

    let mut seeds: Vec<usize> = (0..grid.len())
        .filter(|&j| {
            let left = j == 0 || values[j] <= values[j - 1];
            let right = j + 1 == grid.len() || values[j] <= values[j + 1];
            left && right
        })
        .collect();
    seeds.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    seeds.truncate(n);

    for j in seeds {
        let a = grid[j.saturating_sub(1)];
        let b = grid[(j + 1).min(grid.len() - 1)];
        if a < b {
            golden(&mut p.objective, &mut tracker, a, b, tol_x)?;
        }
    }
    Ok(tracker.finish())
}
