//! `oligo`: command-line driver for the equilibrium solvers.
//!
//! Exit status: 0 on success, 1 when a solve does not converge (or a strict
//! comparison with the published tables fails), 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use oligo::nash::{gauss_seidel, EquilibriumResult};
use oligo::reference::{self, PublishedPeriod};
use oligo::report::{emit_objective_curves, emit_report, render_markdown, CurveOptions};
use oligo::scenario::{Mode, ReferenceParams, ReportFormat, ScenarioConfig};
use oligo::sensitivity::{check_localization_at, critical_cones, graphical_derivative_at, GePoint};
use oligo::stackelberg::{solve_leader, StackelbergResult};
use oligo::timeline::{run_timeline, TimelineResult};
use oligo::Market;

#[derive(Parser)]
#[command(
    name = "oligo",
    version,
    about = "Oligopoly equilibria with costs of change"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cournot-Nash equilibrium of one period.
    SolveNash(PeriodArgs),
    /// Stackelberg-Cournot-Nash equilibrium of one period.
    SolveStackelberg {
        #[command(flatten)]
        period: PeriodArgs,
        /// One-based leader index; overrides the config.
        #[arg(long)]
        leader: Option<usize>,
    },
    /// Solves every period of the schedule, chaining anchors, and writes reports.
    RunTimeline {
        #[command(flatten)]
        common: Common,
        /// Overrides the configured mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Localization certificate and directional responses at a Cournot-Nash equilibrium.
    Sensitivity(PeriodArgs),
    /// Objective curves around each period's equilibrium, as plot data.
    Curves(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `outputs.dir`, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report formats; defaults to the config's `outputs.formats`.
    #[arg(long, value_enum)]
    format: Vec<FormatArg>,
    /// KKT residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Seeds the jitter of the leader's multi-start grid.
    #[arg(long)]
    seed: Option<u64>,
    /// Compare with the published tables; requires the filled reference config.
    #[arg(long)]
    strict_paper: bool,
}

#[derive(Args)]
struct PeriodArgs {
    #[command(flatten)]
    common: Common,
    /// One-based period of the schedule, solved with the initial anchors.
    #[arg(long, default_value_t = 1)]
    period: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cournot,
    Stackelberg,
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<oligo::Error> for Failure {
    fn from(e: oligo::Error) -> Self {
        use oligo::Error::*;
        match e {
            Config(msg) => Failure::Config(msg),
            InvalidMarket(_) | Io { .. } | Json { .. } | Csv(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SolveNash(p) => solve_nash(&p),
        Command::SolveStackelberg { period, leader } => solve_stackelberg(&period, leader),
        Command::RunTimeline { common, mode } => timeline(&common, mode),
        Command::Sensitivity(p) => sensitivity(&p),
        Command::Curves(c) => curves(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(c: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&c.config)?;
    if let Some(tol) = c.tol {
        cfg.solver.tol_residual = tol;
    }
    if let Some(n) = c.max_sweeps {
        cfg.solver.max_sweeps = n;
    }
    if c.seed.is_some() {
        cfg.stackelberg.seed = c.seed;
    }
    if !c.format.is_empty() {
        cfg.outputs.formats = c
            .format
            .iter()
            .map(|f| match f {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Md => ReportFormat::Markdown,
            })
            .collect();
    }
    cfg.validate()?;
    if c.strict_paper {
        check_reference(&cfg)?;
    }
    Ok(cfg)
}

fn check_reference(cfg: &ScenarioConfig) -> Outcome {
    match cfg.reference_params {
        Some(ReferenceParams::Filled) => {}
        Some(ReferenceParams::Placeholder) => {
            return Err(Failure::Config(
                "--strict-paper: reference (delta, K) values are placeholders".into(),
            ))
        }
        None => {
            return Err(Failure::Config(
                "--strict-paper: config is not marked as the filled reference scenario".into(),
            ))
        }
    }
    if cfg.market.len() != 5 || cfg.b_schedule.len() > reference::B_SCHEDULE.len() {
        return Err(Failure::Config(
            "--strict-paper: config does not describe the five-firm reference scenario".into(),
        ));
    }
    Ok(())
}

fn out_dir(c: &Common, cfg: &ScenarioConfig) -> Result<PathBuf, Failure> {
    let dir = c
        .out
        .clone()
        .or_else(|| cfg.outputs.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Outcome {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn period_market(p: &PeriodArgs, cfg: &ScenarioConfig) -> Result<Market, Failure> {
    if p.period == 0 || p.period > cfg.b_schedule.len() {
        return Err(Failure::Config(format!(
            "period {} outside 1..={}",
            p.period,
            cfg.b_schedule.len()
        )));
    }
    Ok(cfg.market_for(p.period, &cfg.market.anchors())?)
}

fn print_profile(label: &str, x: &[f64], profits: &[f64], change: &[f64]) {
    println!("{label}");
    println!(
        "{:>4} {:>14} {:>14} {:>12}",
        "firm", "x", "profit", "change"
    );
    for i in 0..x.len() {
        println!(
            "{:>4} {:>14.6} {:>14.6} {:>12.6}",
            i + 1,
            x[i],
            profits[i],
            change[i]
        );
    }
}

fn not_converged(what: &str, residual: f64) -> Failure {
    Failure::Solver(format!("{what} did not converge (residual {residual:e})"))
}

fn solve_nash(p: &PeriodArgs) -> Outcome {
    let cfg = load(&p.common)?;
    let m = period_market(p, &cfg)?;
    let r = gauss_seidel(&m, &m.anchors(), &cfg.solver)?;
    print_profile(
        &format!("Cournot-Nash equilibrium, period {}", p.period),
        &r.x,
        &r.profits,
        &r.change_costs,
    );
    println!(
        "residual {:e} after {} sweeps ({:?})",
        r.residual, r.sweeps, r.stop
    );
    let dir = out_dir(&p.common, &cfg)?;
    write_json(&dir.join(format!("nash_t{}.json", p.period)), &json!(r))?;
    if p.common.strict_paper {
        strict_period(&r.x, &r.profits, &reference::COURNOT, p.period, 0.05, 0.5)?;
    }
    if !r.converged {
        return Err(not_converged("Gauss-Seidel", r.residual));
    }
    Ok(())
}

fn solve_stackelberg(p: &PeriodArgs, leader: Option<usize>) -> Outcome {
    let mut cfg = load(&p.common)?;
    if let Some(l) = leader {
        cfg.leader_index = l;
        cfg.mode = Mode::Stackelberg;
        cfg.validate()?;
    }
    let m = period_market(p, &cfg)?;
    if !(1..=m.len()).contains(&cfg.leader_index) || m.len() < 2 {
        return Err(Failure::Config(format!(
            "leader {} invalid for {} firms",
            cfg.leader_index,
            m.len()
        )));
    }
    let r: StackelbergResult =
        solve_leader(&m, cfg.leader_index - 1, &cfg.solver, &cfg.stackelberg)?;
    print_profile(
        &format!(
            "Stackelberg-Cournot-Nash equilibrium, period {}, firm {} leads",
            p.period, cfg.leader_index
        ),
        &r.x,
        &r.profits,
        &r.change_costs,
    );
    println!(
        "follower residual {:e}, {} leader-objective evaluations",
        r.residual, r.theta_evals
    );
    let dir = out_dir(&p.common, &cfg)?;
    write_json(
        &dir.join(format!("stackelberg_t{}.json", p.period)),
        &json!(r),
    )?;
    if p.common.strict_paper {
        if cfg.leader_index != 1 {
            return Err(Failure::Config(
                "--strict-paper: the published table has firm 1 leading".into(),
            ));
        }
        strict_period(
            &r.x,
            &r.profits,
            &reference::STACKELBERG,
            p.period,
            0.1,
            1.0,
        )?;
    }
    if !r.converged {
        return Err(not_converged(
            "follower equilibrium",
            r.worst_follower_residual,
        ));
    }
    Ok(())
}

/// Single-period comparisons only hold at `t = 1`, where the anchors are the
/// initial productions.
fn strict_period(
    x: &[f64],
    profits: &[f64],
    table: &[PublishedPeriod; 3],
    period: usize,
    tol_x: f64,
    tol_profit: f64,
) -> Outcome {
    if period != 1 {
        return Err(Failure::Config(
            "--strict-paper: single-period solves compare only period 1; use run-timeline".into(),
        ));
    }
    compare(x, profits, &table[0], 1, tol_x, tol_profit)
}

fn compare(
    x: &[f64],
    profits: &[f64],
    published: &PublishedPeriod,
    period: usize,
    tol_x: f64,
    tol_profit: f64,
) -> Outcome {
    let mut bad = Vec::new();
    for i in 0..5 {
        if (x[i] - published.x[i]).abs() > tol_x {
            bad.push(format!(
                "t={period} x_{} = {:.4} (table {})",
                i + 1,
                x[i],
                published.x[i]
            ));
        }
        if (profits[i] - published.profits[i]).abs() > tol_profit {
            bad.push(format!(
                "t={period} profit_{} = {:.4} (table {})",
                i + 1,
                profits[i],
                published.profits[i]
            ));
        }
    }
    if bad.is_empty() {
        println!("t={period}: matches the published table");
        Ok(())
    } else {
        Err(Failure::Solver(format!(
            "strict comparison failed: {}",
            bad.join("; ")
        )))
    }
}

fn strict_timeline(r: &TimelineResult) -> Outcome {
    let (table, tol_x, tol_profit) = match r.mode {
        Mode::Cournot => (&reference::COURNOT, 0.05, 0.5),
        Mode::Stackelberg => {
            if r.leader != Some(0) {
                return Err(Failure::Config(
                    "--strict-paper: the published table has firm 1 leading".into(),
                ));
            }
            (&reference::STACKELBERG, 0.1, 1.0)
        }
    };
    for (p, published) in r.periods.iter().zip(table.iter()) {
        compare(&p.x, &p.profits, published, p.period, tol_x, tol_profit)?;
    }
    if r.mode == Mode::Cournot && r.periods.len() >= 2 && r.periods[1].x != r.periods[0].x {
        return Err(Failure::Solver(
            "strict comparison failed: t=2 does not repeat t=1".into(),
        ));
    }
    Ok(())
}

fn timeline(c: &Common, mode: Option<ModeArg>) -> Outcome {
    let mut cfg = load(c)?;
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::Cournot => Mode::Cournot,
            ModeArg::Stackelberg => Mode::Stackelberg,
        };
        cfg.validate()?;
    }
    let r = run_timeline(&cfg)?;
    print!("{}", render_markdown(&r));
    let dir = out_dir(c, &cfg)?;
    for &format in &cfg.outputs.formats {
        emit_report(
            &r,
            format,
            &dir.join(format!("timeline.{}", format.extension())),
        )?;
    }
    println!(
        "{} periods in {:.3} s",
        r.periods.len(),
        r.metadata.wall_time_s
    );
    if c.strict_paper {
        strict_timeline(&r)?;
    }
    if let Some(t) = r.halted_at {
        let residual = r.periods.last().map_or(f64::NAN, |p| p.residual);
        return Err(not_converged(&format!("period {t}"), residual));
    }
    Ok(())
}

fn sensitivity(p: &PeriodArgs) -> Outcome {
    let cfg = load(&p.common)?;
    let m = period_market(p, &cfg)?;
    let eq: EquilibriumResult = gauss_seidel(&m, &m.anchors(), &cfg.solver)?;
    if !eq.converged {
        return Err(not_converged("Gauss-Seidel", eq.residual));
    }
    let pt = GePoint::from_market(&m, &eq.x)?;
    let report = check_localization_at(&pt, &cfg.sensitivity)?;
    let cones = critical_cones(&pt, &cfg.sensitivity)?;
    println!(
        "verdict {:?}, min eigenvalue of symmetric part {:.6e}",
        report.verdict, report.min_sym_eig
    );
    println!("cones {:?}", report.cones);
    let responses: Vec<serde_json::Value> = cfg
        .sensitivity_directions()
        .into_iter()
        .map(|h| match graphical_derivative_at(&pt, &cones, &h) {
            Ok(r) => {
                println!("h {:?} -> k {:?}", r.h, r.k);
                json!(r)
            }
            Err(e) => {
                println!("h {h:?} -> {e}");
                json!({ "h": h, "error": e.to_string() })
            }
        })
        .collect();
    let dir = out_dir(&p.common, &cfg)?;
    write_json(
        &dir.join(format!("sensitivity_t{}.json", p.period)),
        &json!({
            "period": p.period,
            "x": eq.x,
            "localization": report,
            "responses": responses,
        }),
    )
}

fn curves(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let r = run_timeline(&cfg)?;
    let dir = out_dir(c, &cfg)?;
    let opts = CurveOptions {
        samples: cfg.outputs.curve_samples,
        window: cfg.outputs.curve_window,
    };
    for p in &r.periods {
        let m = cfg.market_for(p.period, &p.anchors)?;
        let path = dir.join(format!("curves_t{}.dat", p.period));
        emit_objective_curves(&m, &p.x, &opts, &path)?;
        println!("{}", path.display());
    }
    if let Some(t) = r.halted_at {
        return Err(not_converged(
            &format!("period {t}"),
            r.periods.last().map_or(f64::NAN, |p| p.residual),
        ));
    }
    Ok(())
}
