//! Output files: the structured-text report, the per-round metrics table
//! and the schedule tables.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use gridmaint_core::runtime::{RoundMetrics, RunReport};
use gridmaint_core::subproblem::{CostParts, ModelMode};
use thiserror::Error;

use crate::config::{RunConfig, RunMode};

pub const REPORT_VERSION: &str = "gridmaint-report v1";
pub const METRICS_HEADER: [&str; 10] = [
    "round",
    "mode",
    "primal",
    "dual",
    "converged",
    "gross",
    "exact",
    "inner_iterations",
    "messages",
    "bytes",
];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("header does not match the metrics schema")]
    Header,
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

fn parts_block(out: &mut String, p: &CostParts) {
    let _ = writeln!(out, "operations={}", p.operations);
    let _ = writeln!(out, "maintenance={}", p.maintenance);
    let _ = writeln!(out, "curtailment={}", p.curtailment);
    let _ = writeln!(out, "gross={}", p.gross());
    let _ = writeln!(out, "penalty_exact={}", p.penalty_exact);
    let _ = writeln!(out, "penalty_model={}", p.penalty_model);
    let _ = writeln!(out, "pwl_bound={}", p.pwl_bound);
}

/// Sectioned `key=value` text. Wall times are the only entries that differ
/// between repeated runs.
pub fn render_report(cfg: &RunConfig, r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{REPORT_VERSION}");
    let _ = writeln!(out, "[run]");
    let mode = match cfg.mode {
        RunMode::Decentralized => "decentralized",
        RunMode::Centralized => "centralized",
    };
    let _ = writeln!(out, "mode={mode}");
    let _ = writeln!(out, "seed={}", cfg.seed);
    let _ = writeln!(out, "threads={}", cfg.settings.threads);
    let _ = writeln!(out, "transport={}", cfg.settings.transport.name());
    let _ = writeln!(out, "regions={}", r.regions);
    let _ = writeln!(out, "epochs={}", r.grid.epochs);
    let _ = writeln!(out, "days={}", r.grid.days);
    let _ = writeln!(out, "cgd={}", r.grid.cgd);
    let _ = writeln!(out, "converged={}", r.converged());
    let _ = writeln!(out, "wall_s={:.3}", r.wall.as_secs_f64());
    for p in &r.phases {
        let _ = writeln!(out, "[phase {}]", p.mode.name());
        let _ = writeln!(out, "rounds={}", p.rounds);
        let _ = writeln!(out, "converged={}", p.converged);
        let _ = writeln!(out, "wall_s={:.3}", p.wall.as_secs_f64());
        let _ = writeln!(out, "objective={}", p.objective);
        parts_block(&mut out, &p.parts);
    }
    let _ = writeln!(out, "[totals]");
    parts_block(&mut out, &r.totals);
    let _ = writeln!(out, "upper_bound={}", r.upper_bound);
    let _ = writeln!(out, "reverted={}", r.reverted);
    let _ = writeln!(out, "inner_cap_hits={}", r.inner_cap_hits);
    let _ = writeln!(out, "balance_residual={}", r.balance_residual);
    let _ = writeln!(out, "tie_mismatch={}", r.tie_mismatch);
    let _ = writeln!(out, "[messages]");
    for (kind, (count, bytes)) in &r.messages {
        let _ = writeln!(out, "{}={count},{bytes}", kind.as_str());
    }
    out
}

/// Per-round metrics as comma-separated text. Floats use the shortest
/// representation that parses back to the same value.
pub fn render_metrics(rows: &[RoundMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER).expect("in-memory write");
    for m in rows {
        w.write_record([
            m.round.to_string(),
            m.mode.name().to_string(),
            m.primal.to_string(),
            m.dual.to_string(),
            m.converged.to_string(),
            m.gross.to_string(),
            m.exact.to_string(),
            m.inner_iterations.to_string(),
            m.messages.to_string(),
            m.bytes.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn mode_of(name: &str) -> Option<ModelMode> {
    [ModelMode::Fmrc, ModelMode::Fmbc, ModelMode::Bmbc]
        .into_iter()
        .find(|m| m.name() == name)
}

pub fn parse_metrics(text: &str) -> Result<Vec<RoundMetrics>, MetricsError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    if rd.headers()?.iter().ne(METRICS_HEADER) {
        return Err(MetricsError::Header);
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |col: usize| MetricsError::Row {
            row,
            message: format!("bad `{}` value `{}`", METRICS_HEADER[col], &rec[col]),
        };
        let f = |col: usize| rec[col].parse::<f64>().map_err(|_| bad(col));
        let u = |col: usize| rec[col].parse::<usize>().map_err(|_| bad(col));
        out.push(RoundMetrics {
            round: u(0)?,
            mode: mode_of(&rec[1]).ok_or_else(|| bad(1))?,
            primal: f(2)?,
            dual: f(3)?,
            converged: rec[4].parse().map_err(|_| bad(4))?,
            gross: f(5)?,
            exact: f(6)?,
            inner_iterations: u(7)?,
            messages: u(8)?,
            bytes: u(9)?,
        });
    }
    Ok(out)
}

fn table(ids: &[u32], rows: &[Vec<f64>], col: &str) -> String {
    let width = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["generator".to_string()];
    header.extend((1..=width).map(|i| format!("{col}{i}")));
    w.write_record(&header).expect("in-memory write");
    for (id, row) in ids.iter().zip(rows) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Commitment x, dispatch y (per step) and maintenance z (per epoch).
pub fn render_schedules(r: &RunReport) -> [(&'static str, String); 3] {
    let s = &r.schedule;
    [
        ("schedule_x.csv", table(&s.generator_ids, &s.x, "t")),
        ("schedule_y.csv", table(&s.generator_ids, &s.y, "t")),
        ("schedule_z.csv", table(&s.generator_ids, &s.z, "m")),
    ]
}

/// Whitespace-separated residual series for external plotting.
pub fn render_plot_data(rows: &[RoundMetrics]) -> String {
    let mut out = String::from("# round primal dual gross\n");
    for m in rows {
        let _ = writeln!(out, "{} {} {} {}", m.round, m.primal, m.dual, m.gross);
    }
    out
}

/// Write every artifact of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, r: &RunReport, plot: bool) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.txt"), render_report(cfg, r))?;
    std::fs::write(dir.join("metrics.csv"), render_metrics(&r.rounds))?;
    for (name, body) in render_schedules(r) {
        std::fs::write(dir.join(name), body)?;
    }
    if plot {
        std::fs::write(dir.join("residuals.dat"), render_plot_data(&r.rounds))?;
    }
    Ok(())
}
