#![allow(dead_code)]

use oligo::market::{DemandCurve, FirmParams, Market};
use oligo::scenario::ScenarioConfig;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const REFERENCE_CONFIG: &str =
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/paper_t5.json");

pub fn reference_config() -> ScenarioConfig {
    ScenarioConfig::load(REFERENCE_CONFIG).expect("reference config loads")
}

/// Reference market for period `t` with the `t = 0` anchors.
pub fn reference_market(t: usize) -> Market {
    let cfg = reference_config();
    cfg.market_for(t, &cfg.market.anchors()).unwrap()
}

/// A random five-firm market satisfying the standing assumptions: convex
/// costs, γ ≥ 1, positive lower bounds.
pub fn random_market(rng: &mut StdRng, l: usize) -> Market {
    let gamma = rng.gen_range(1.0..1.5);
    let firms = (0..l)
        .map(|_| FirmParams {
            b: rng.gen_range(1.0..12.0),
            delta: rng.gen_range(0.7..1.3),
            cap_k: rng.gen_range(3.0..8.0),
            beta: if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..3.0)
            },
            anchor: rng.gen_range(20.0..70.0),
            lo: 0.001,
            hi: 1000.0,
        })
        .collect();
    Market::new(DemandCurve::new(gamma, 5000.0).unwrap(), firms).unwrap()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

// Closed forms written out independently of the library.

pub fn price(m: &Market, total: f64) -> f64 {
    let d = m.demand();
    d.scale.powf(1.0 / d.gamma) * total.powf(-1.0 / d.gamma)
}

pub fn cost(f: &FirmParams, x: f64) -> f64 {
    let d = f.delta;
    f.b * x + d / (d + 1.0) * f.cap_k.powf(-1.0 / d) * x.powf((1.0 + d) / d)
}

/// `J_i` with firm `i` at `z`, rivals supplying `rivals` in total.
pub fn total_cost(m: &Market, i: usize, z: f64, rivals: f64) -> f64 {
    let f = m.firm(i);
    cost(f, z) - z * price(m, z + rivals) + f.beta * (z - f.anchor).abs()
}

/// Smooth own-cost `f_i` at profile `x`.
pub fn smooth_cost(m: &Market, i: usize, x: &[f64]) -> f64 {
    let total: f64 = x.iter().sum();
    cost(m.firm(i), x[i]) - x[i] * price(m, total)
}

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Damped Newton on the smooth first-order system with a finite-difference
/// Jacobian; the oracle for β = 0 markets.
pub fn newton_oracle(m: &Market, x0: &[f64]) -> Vec<f64> {
    let l = m.len();
    let grad = |x: &[f64]| -> Vec<f64> {
        let total: f64 = x.iter().sum();
        let p = price(m, total);
        let dp = -p / (m.demand().gamma * total);
        (0..l)
            .map(|i| {
                let f = m.firm(i);
                f.b + (x[i] / f.cap_k).powf(1.0 / f.delta) - p - x[i] * dp
            })
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut x = x0.to_vec();
    for _ in 0..200 {
        let g = grad(&x);
        if norm(&g) < 1e-13 {
            break;
        }
        let mut jac = nalgebra::DMatrix::zeros(l, l);
        for j in 0..l {
            let h = 1e-6 * x[j].max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (grad(&xp), grad(&xm));
            for i in 0..l {
                jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&g))
            .expect("nonsingular");
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            if trial.iter().all(|v| *v > 0.0) && norm(&grad(&trial)) < norm(&g) {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return x;
            }
        }
    }
    x
}

/// Best grid point of `J_i` on `n` uniform points of `[lo_i, hi_i]`.
pub fn grid_best_response(m: &Market, i: usize, rivals: f64, n: usize) -> (f64, f64) {
    let f = m.firm(i);
    let step = (f.hi - f.lo) / (n - 1) as f64;
    let mut best = (f.lo, f64::INFINITY);
    for j in 0..n {
        let z = f.lo + j as f64 * step;
        let v = total_cost(m, i, z, rivals);
        if v < best.1 {
            best = (z, v);
        }
    }
    (best.0, step)
}
