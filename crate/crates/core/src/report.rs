//! Report and plot-data output.
//!
//! Tables carry two-decimal values (round half to even on the exact binary
//! value) next to full-precision `_raw` columns written in shortest
//! round-trip form.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Market;
use crate::nash::player_objective;
use crate::scenario::{Mode, ReportFormat};
use crate::timeline::TimelineResult;

/// Two-decimal rendering, ties to even, without a negative zero.
pub fn round2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// One CSV row: one firm in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub period: usize,
    pub firm: usize,
    pub role: String,
    pub anchor: String,
    pub x: String,
    pub profit: String,
    pub change_cost: String,
    pub b_raw: f64,
    pub anchor_raw: f64,
    pub x_raw: f64,
    pub profit_raw: f64,
    pub change_cost_raw: f64,
}

fn role(r: &TimelineResult, firm: usize) -> &'static str {
    match (r.mode, r.leader) {
        (Mode::Stackelberg, Some(l)) if l == firm => "leader",
        (Mode::Stackelberg, _) => "follower",
        _ => "player",
    }
}

pub fn report_rows(r: &TimelineResult) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for p in &r.periods {
        for i in 0..p.x.len() {
            rows.push(ReportRow {
                period: p.period,
                firm: i + 1,
                role: role(r, i).to_string(),
                anchor: round2(p.anchors[i]),
                x: round2(p.x[i]),
                profit: round2(p.profits[i]),
                change_cost: round2(p.change_costs[i]),
                b_raw: p.b[i],
                anchor_raw: p.anchors[i],
                x_raw: p.x[i],
                profit_raw: p.profits[i],
                change_cost_raw: p.change_costs[i],
            });
        }
    }
    rows
}

const CSV_HEADER: [&str; 12] = [
    "period",
    "firm",
    "role",
    "anchor",
    "x",
    "profit",
    "change_cost",
    "b_raw",
    "anchor_raw",
    "x_raw",
    "profit_raw",
    "change_cost_raw",
];

pub fn render_csv(r: &TimelineResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in report_rows(r) {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_csv_rows(text: &str) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Markdown table: an anchor row, then per period a production row, a
/// profit row and a cost-of-change row (blank where the cost is zero).
pub fn render_markdown(r: &TimelineResult) -> String {
    let l = r.initial_anchors.len();
    let mut out = String::new();
    let title = match r.mode {
        Mode::Cournot => "Cournot-Nash equilibria".to_string(),
        Mode::Stackelberg => format!(
            "Stackelberg-Cournot-Nash equilibria, firm {} leads",
            r.leader.map_or(1, |i| i + 1)
        ),
    };
    let _ = writeln!(out, "### {title}\n");
    let mut header = String::from("| t | i |");
    let mut rule = String::from("|---|---|");
    for i in 0..l {
        let _ = write!(header, " {} |", i + 1);
        rule.push_str("---:|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    if r.periods.is_empty() {
        return out;
    }
    let row = |out: &mut String, t: &str, label: &str, cells: Vec<String>| {
        let _ = writeln!(out, "| {t} | {label} | {} |", cells.join(" | "));
    };
    row(
        &mut out,
        "0",
        "a_i",
        r.initial_anchors.iter().map(|&v| round2(v)).collect(),
    );
    for p in &r.periods {
        row(
            &mut out,
            &p.period.to_string(),
            "x_i",
            p.x.iter().map(|&v| round2(v)).collect(),
        );
        row(
            &mut out,
            "",
            "-J_i",
            p.profits.iter().map(|&v| round2(v)).collect(),
        );
        row(
            &mut out,
            "",
            "change",
            p.change_costs
                .iter()
                .map(|&v| if v == 0.0 { String::new() } else { round2(v) })
                .collect(),
        );
    }
    out
}

/// Writes the timeline report in `format` to `path`.
pub fn emit_report(r: &TimelineResult, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(r)?,
        ReportFormat::Markdown => render_markdown(r),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub samples: usize,
    /// Half-width of a window around each firm's production; the whole
    /// admissible interval when `None`.
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Sample,
    Kink,
    Equilibrium,
    /// The equilibrium sits on the kink.
    KinkEquilibrium,
}

impl PointKind {
    fn code(self) -> u8 {
        match self {
            PointKind::Sample => 0,
            PointKind::Kink => 1,
            PointKind::Equilibrium => 2,
            PointKind::KinkEquilibrium => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmCurve {
    pub firm: usize,
    pub kink: f64,
    pub equilibrium: f64,
    /// `(x, J_i(x, x_{-i}), kind)`, sorted by `x`.
    pub points: Vec<(f64, f64, PointKind)>,
}

/// Samples each firm's total cost against the fixed productions of its rivals.
pub fn objective_curves(m: &Market, x: &[f64], opts: &CurveOptions) -> Result<Vec<FirmCurve>> {
    if opts.samples < 2 {
        return Err(Error::Config("curves need at least two samples".into()));
    }
    let mut curves = Vec::with_capacity(m.len());
    for (i, f) in m.firms().iter().enumerate() {
        let (lo, hi) = match opts.window {
            Some(w) => ((x[i] - w).max(f.lo), (x[i] + w).min(f.hi)),
            None => (f.lo, f.hi),
        };
        let mut xs: Vec<(f64, PointKind)> = (0..opts.samples)
            .map(|j| {
                let t = j as f64 / (opts.samples - 1) as f64;
                (lo + t * (hi - lo), PointKind::Sample)
            })
            .collect();
        if f.anchor == x[i] {
            xs.push((x[i], PointKind::KinkEquilibrium));
        } else {
            if (lo..=hi).contains(&f.anchor) {
                xs.push((f.anchor, PointKind::Kink));
            }
            xs.push((x[i], PointKind::Equilibrium));
        }
        xs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.code().cmp(&a.1.code())));
        xs.dedup_by(|a, b| a.0 == b.0);
        let mut profile = x.to_vec();
        let points = xs
            .into_iter()
            .map(|(z, kind)| {
                profile[i] = z;
                Ok((z, player_objective(m, i, &profile)?, kind))
            })
            .collect::<Result<Vec<_>>>()?;
        curves.push(FirmCurve {
            firm: i + 1,
            kink: f.anchor,
            equilibrium: x[i],
            points,
        });
    }
    Ok(curves)
}

/// Gnuplot-style text: one block per firm separated by two blank lines,
/// columns `x J kind` with kind 0 sample, 1 kink, 2 equilibrium, 3 both.
pub fn render_curves(curves: &[FirmCurve]) -> String {
    let mut out = String::new();
    for (n, c) in curves.iter().enumerate() {
        if n > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(
            out,
            "# firm {} kink {} equilibrium {}",
            c.firm, c.kink, c.equilibrium
        );
        let _ = writeln!(out, "# x J kind");
        for (x, j, kind) in &c.points {
            let _ = writeln!(out, "{x} {j} {}", kind.code());
        }
    }
    out
}

pub fn emit_objective_curves(
    m: &Market,
    x: &[f64],
    opts: &CurveOptions,
    path: &Path,
) -> Result<()> {
    let text = render_curves(&objective_curves(m, x, opts)?);
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}
