//! Acceptance checks: one PASS/FAIL line per criterion; exits non-zero on
//! any failure.

mod common;

use std::time::Instant;

use common::*;
use oligo::market::{Market, NonsmoothTerm};
use oligo::nash::{
    best_response, gauss_seidel, gauss_seidel_from_anchors, gauss_seidel_observed, kkt_residual,
    player_objective, SolverConfig,
};
use oligo::reference::{BETAS, COURNOT, INITIAL_ANCHORS, STACKELBERG};
use oligo::scenario::{Mode, ReferenceParams};
use oligo::sensitivity::{
    critical_cone_at, critical_cones, graphical_derivative, graphical_derivative_at, ConeTag,
    GePoint, SensitivityOptions,
};
use oligo::timeline::run_timeline;
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: oligo::Error) -> String {
    e.to_string()
}

fn change_cost_arithmetic() -> Check {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (table, name) in [(&COURNOT, "cournot"), (&STACKELBERG, "stackelberg")] {
        let mut anchors = INITIAL_ANCHORS;
        for (t, period) in table.iter().enumerate() {
            for i in 0..5 {
                let printed = period.change_costs[i];
                if printed == 0.0 {
                    continue;
                }
                let computed = BETAS[i] * (period.x[i] - anchors[i]).abs();
                let e = (computed - printed).abs();
                worst = worst.max(e);
                checked += 1;
                ensure(e <= 0.02 + 1e-12, || {
                    format!(
                        "{name} t={} firm {}: {computed:.4} vs {printed}",
                        t + 1,
                        i + 1
                    )
                })?;
            }
            anchors = period.x;
        }
    }
    ensure(checked == 10, || {
        format!("checked {checked} entries, expected 10")
    })?;
    Ok(format!("{checked} entries, worst deviation {worst:.4}"))
}

fn reference_filled() -> bool {
    reference_config().reference_params == Some(ReferenceParams::Filled)
}

fn cournot_table() -> Check {
    if !reference_filled() {
        return Err("reference (delta, K) not filled".into());
    }
    let start = Instant::now();
    let r = run_timeline(&reference_config()).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.completed(), || "timeline halted".into())?;
    let (mut dx, mut dp): (f64, f64) = (0.0, 0.0);
    for (p, published) in r.periods.iter().zip(&COURNOT) {
        for i in 0..5 {
            dx = dx.max((p.x[i] - published.x[i]).abs());
            dp = dp.max((p.profits[i] - published.profits[i]).abs());
        }
    }
    ensure(dx <= 0.05, || {
        format!("production deviation {dx:.4} > 0.05")
    })?;
    ensure(dp <= 0.5, || format!("profit deviation {dp:.4} > 0.5"))?;
    let locked = r.periods[1]
        .x
        .iter()
        .zip(&r.periods[0].x)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(locked, || "t=2 profile differs from t=1".into())?;
    ensure(secs < 5.0, || format!("runtime {secs:.2} s"))?;
    Ok(format!(
        "max |dx| {dx:.4}, max |dprofit| {dp:.4}, t=2 bit-equal to t=1, {secs:.2} s"
    ))
}

fn stackelberg_table() -> Check {
    if !reference_filled() {
        return Err("reference (delta, K) not filled".into());
    }
    let mut cfg = reference_config();
    cfg.mode = Mode::Stackelberg;
    cfg.leader_index = 1;
    cfg.stackelberg.n_starts = 32;
    let start = Instant::now();
    let r = run_timeline(&cfg).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.completed(), || "timeline halted".into())?;
    let first = &r.periods[0];
    ensure((first.x[0] - 54.95).abs() <= 0.1, || {
        format!("leader x {}", first.x[0])
    })?;
    ensure((first.profits[0] - 380.49).abs() <= 1.0, || {
        format!("leader profit {}", first.profits[0])
    })?;
    let (mut dx, mut dp): (f64, f64) = (0.0, 0.0);
    for (p, published) in r.periods.iter().zip(&STACKELBERG) {
        for i in 0..5 {
            dx = dx.max((p.x[i] - published.x[i]).abs());
            dp = dp.max((p.profits[i] - published.profits[i]).abs());
        }
    }
    ensure(dx <= 0.1, || format!("production deviation {dx:.4} > 0.1"))?;
    ensure(dp <= 1.0, || format!("profit deviation {dp:.4} > 1.0"))?;
    ensure(secs < 60.0, || format!("runtime {secs:.2} s"))?;
    Ok(format!(
        "leader {:.4} / {:.3}, max |dx| {dx:.4}, max |dprofit| {dp:.4}, {} theta evals, {secs:.2} s",
        first.x[0], first.profits[0], r.metadata.theta_evals
    ))
}

fn fallback_checks() -> Check {
    let cfg = SolverConfig::default();
    let mut rng = rng(404);
    let mut worst_res: f64 = 0.0;
    for _ in 0..20 {
        let m = random_market(&mut rng, 5);
        let r = gauss_seidel_from_anchors(&m, &cfg).map_err(err)?;
        let res = kkt_residual(&m, &r.x).map_err(err)?;
        worst_res = worst_res.max(res);
        ensure(r.converged && res <= 1e-8, || format!("residual {res:e}"))?;
    }
    let mut worst_newton: f64 = 0.0;
    for n in 0..10 {
        let m = if n == 0 {
            reference_market(1)
        } else {
            random_market(&mut rng, 5)
        };
        let m = m.with_betas(&[0.0; 5]).map_err(err)?;
        let x = gauss_seidel_from_anchors(&m, &cfg).map_err(err)?.x;
        let xn = newton_oracle(&m, &m.anchors());
        let d = x
            .iter()
            .zip(&xn)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_newton = worst_newton.max(d);
        ensure(d <= 1e-6, || format!("Newton disagreement {d:e}"))?;
    }
    for _ in 0..50 {
        let m = random_market(&mut rng, 5);
        let i = rng.gen_range(0..5);
        let rivals = rng.gen_range(50.0..300.0);
        let z = best_response(&m, i, rivals, &cfg).map_err(err)?;
        let (gz, step) = grid_best_response(&m, i, rivals, 20001);
        ensure((z - gz).abs() <= step, || {
            format!("best response {z} vs grid {gz}")
        })?;
    }
    let status = if reference_filled() {
        "reference filled; fallback run anyway"
    } else {
        "reference absent"
    };
    Ok(format!("{status}: worst residual {worst_res:.1e}, Newton gap {worst_newton:.1e}, 50/50 grid checks"))
}

fn derivatives() -> Check {
    let start = Instant::now();
    let mut rng = rng(505);
    let (mut eg, mut ej): (f64, f64) = (0.0, 0.0);
    for n in 0..100 {
        let m = if n % 2 == 0 {
            reference_market(1)
        } else {
            random_market(&mut rng, 5)
        };
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(5.0..120.0)).collect();
        let g = m.pseudo_gradient(&x).map_err(err)?;
        let jac = m.jacobian(&x).map_err(err)?;
        for i in 0..5 {
            let fd = central_diff(
                |z| {
                    let mut y = x.clone();
                    y[i] = z;
                    smooth_cost(&m, i, &y)
                },
                x[i],
                1e-5 * x[i],
            );
            eg = eg.max(rel_err(g[i], fd));
            for j in 0..5 {
                let fd = central_diff(
                    |z| {
                        let mut y = x.clone();
                        y[j] = z;
                        m.pseudo_gradient(&y).unwrap()[i]
                    },
                    x[j],
                    1e-5 * x[j],
                );
                let scale = jac[(i, j)].abs().max(1e-3 * jac[(i, i)].abs());
                ej = ej.max((jac[(i, j)] - fd).abs() / scale);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(eg <= 1e-6, || format!("gradient rel err {eg:e}"))?;
    ensure(ej <= 1e-5, || format!("jacobian rel err {ej:e}"))?;
    ensure(secs < 1.0, || format!("runtime {secs:.2} s"))?;
    Ok(format!(
        "100 points, gradient {eg:.1e}, jacobian {ej:.1e}, {secs:.3} s"
    ))
}

fn example_one() -> Check {
    let pt = GePoint {
        x: vec![0.0],
        g: vec![-1.0],
        jac_x: nalgebra::DMatrix::from_row_slice(1, 1, &[1.0]),
        jac_p: nalgebra::DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        terms: vec![NonsmoothTerm {
            beta: 1.0,
            anchor: 0.0,
            lo: 0.0,
            hi: 1.0,
        }],
    };
    let opts = SensitivityOptions::default();
    let tag = critical_cone_at(&pt, 0, &opts).map_err(err)?;
    ensure(tag == ConeTag::Nonneg, || format!("cone {tag:?}"))?;
    let cones = critical_cones(&pt, &opts).map_err(err)?;
    for a in 0..10 {
        for b in 0..10 {
            let h = [-1.0 + 2.0 * a as f64 / 9.0, -1.0 + 2.0 * b as f64 / 9.0];
            let k = graphical_derivative_at(&pt, &cones, &h).map_err(err)?.k;
            ensure(k == [(-h[0]).max(0.0)], || format!("h {h:?}: k {k:?}"))?;
        }
    }
    Ok("NONNEG cone, k = max(0, -h1) exactly on 100 directions".into())
}

fn resolve(m: &Market, h: &[f64], t: f64) -> Result<Vec<f64>, String> {
    let b: Vec<f64> = (0..5).map(|i| m.firm(i).b + t * h[i]).collect();
    let moved = m
        .with_b(&b)
        .and_then(|mm| mm.with_gamma(m.demand().gamma + t * h[5]))
        .map_err(err)?;
    let cfg = SolverConfig {
        tol_residual: 1e-12,
        ..SolverConfig::default()
    };
    Ok(gauss_seidel_from_anchors(&moved, &cfg).map_err(err)?.x)
}

fn sensitivity_oracle() -> Check {
    let start = Instant::now();
    let m = if reference_filled() {
        reference_market(1)
    } else {
        random_market(&mut rng(606), 5)
    };
    let x = gauss_seidel_from_anchors(&m, &SolverConfig::default())
        .map_err(err)?
        .x;
    let base = resolve(&m, &[0.0; 6], 0.0)?;
    let mut rng = rng(607);
    let (mut compared, mut worst) = (0, 0.0f64);
    let mut tries = 0;
    while compared < 10 && tries < 100 {
        tries += 1;
        let h: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = graphical_derivative(&m, &x, &h).map_err(err)?.k;
        let fd = |t: f64| -> Result<Vec<f64>, String> {
            Ok(resolve(&m, &h, t)?
                .iter()
                .zip(&base)
                .map(|(a, b)| (a - b) / t)
                .collect())
        };
        let (k1, k2) = (fd(1e-5)?, fd(5e-6)?);
        let scale = k1.iter().fold(1e-8f64, |s, v| s.max(v.abs()));
        let gap = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
                / scale
        };
        if gap(&k1, &k2) > 1e-3 {
            continue;
        }
        compared += 1;
        let e = gap(&k, &k1);
        worst = worst.max(e);
        ensure(e <= 1e-3, || format!("h {h:?}: relative gap {e:e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(compared == 10, || {
        format!("only {compared} stable directions")
    })?;
    ensure(secs < 10.0, || format!("runtime {secs:.2} s"))?;
    Ok(format!(
        "10 directions, worst relative gap {worst:.1e}, {secs:.2} s"
    ))
}

fn property_suite() -> Check {
    let cfg = SolverConfig::default();
    let m = reference_market(1);
    let mut rng = rng(808);

    let mut descent_failures = 0;
    for n in 0..5 {
        let mm = if n == 0 {
            m.clone()
        } else {
            random_market(&mut rng, 5)
        };
        let x0: Vec<f64> = (0..5).map(|_| rng.gen_range(1.0..200.0)).collect();
        gauss_seidel_observed(&mm, &x0, &cfg, |s| {
            let mut before = s.profile.to_vec();
            before[s.firm] = s.before;
            let jb = player_objective(&mm, s.firm, &before).unwrap();
            let ja = player_objective(&mm, s.firm, s.profile).unwrap();
            if ja > jb + 1e-10 * (1.0 + jb.abs()) {
                descent_failures += 1;
            }
        })
        .map_err(err)?;
    }
    ensure(descent_failures == 0, || {
        format!("{descent_failures} ascent steps")
    })?;

    let x = gauss_seidel_from_anchors(&m, &cfg).map_err(err)?.x;
    let rev = Market::new(*m.demand(), m.firms().iter().rev().copied().collect()).map_err(err)?;
    let xr = gauss_seidel_from_anchors(&rev, &cfg).map_err(err)?.x;
    ensure((0..5).all(|i| (x[i] - xr[4 - i]).abs() < 1e-6), || {
        format!("reversed {xr:?} vs {x:?}")
    })?;

    for _ in 0..10 {
        let x0: Vec<f64> = (0..5).map(|_| rng.gen_range(0.001..1000.0)).collect();
        let r = gauss_seidel(&m, &x0, &cfg).map_err(err)?;
        ensure((0..5).all(|i| (r.x[i] - x[i]).abs() < 1e-5), || {
            format!("from {x0:?}: {:?}", r.x)
        })?;
    }

    let mut counts = Vec::new();
    for scale in [0.0, 1.0, 10.0, 100.0] {
        let betas: Vec<f64> = BETAS.iter().map(|b| b * scale).collect();
        let ms = m.with_betas(&betas).map_err(err)?;
        let xs = gauss_seidel_from_anchors(&ms, &cfg).map_err(err)?.x;
        counts.push((0..5).filter(|&i| xs[i] == ms.firm(i).anchor).count());
    }
    ensure(counts.windows(2).all(|w| w[0] <= w[1]), || {
        format!("lock-in counts {counts:?}")
    })?;

    for _ in 0..10 {
        let h: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = graphical_derivative(&m, &x, &h).map_err(err)?.k;
        for lambda in [0.5, 2.0, 7.0] {
            let hs: Vec<f64> = h.iter().map(|v| lambda * v).collect();
            let ks = graphical_derivative(&m, &x, &hs).map_err(err)?.k;
            ensure(
                ks.iter()
                    .zip(&k)
                    .all(|(a, b)| (a - lambda * b).abs() <= 1e-10 * (1.0 + (lambda * b).abs())),
                || format!("homogeneity fails for lambda {lambda}"),
            )?;
        }
    }
    Ok(format!(
        "descent, permutation, 10 starts, lock-in counts {counts:?}, homogeneity: 0 failures"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("change-cost arithmetic", change_cost_arithmetic),
        ("Cournot table reproduction", cournot_table),
        ("Stackelberg table reproduction", stackelberg_table),
        ("randomized fallback checks", fallback_checks),
        ("derivative correctness", derivatives),
        ("one-dimensional fixture", example_one),
        ("sensitivity vs re-solve", sensitivity_oracle),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
