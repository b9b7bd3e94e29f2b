//! Sweeps over the number of regions or the commitment resolution, each
//! point compared against its own centralized benchmark.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gridmaint_core::runtime::RunReport;

use crate::config::{RunConfig, RunMode};
use crate::{execute, report, RunFailure};

/// One value on the regions axis.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionPoint {
    /// Whole network as one region.
    Single,
    Partition(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Regions(Vec<RegionPoint>),
    Cgd(Vec<usize>),
}

impl Axis {
    /// `1` stands for the single-region partition; other entries are
    /// partition files relative to `base`.
    pub fn regions(list: &str, base: &Path) -> Self {
        Axis::Regions(
            list.split(',')
                .map(str::trim)
                .map(|v| {
                    if v == "1" {
                        RegionPoint::Single
                    } else {
                        RegionPoint::Partition(base.join(v))
                    }
                })
                .collect(),
        )
    }

    pub fn cgd(list: &str) -> Result<Self, String> {
        list.split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| format!("bad cgd value `{v}`")))
            .collect::<Result<_, _>>()
            .map(Axis::Cgd)
    }

    fn len(&self) -> usize {
        match self {
            Axis::Regions(v) => v.len(),
            Axis::Cgd(v) => v.len(),
        }
    }
}

/// Stretch a per-day profile to `cgd` steps by sampling it piecewise
/// constantly; a profile that already fits is returned unchanged.
pub fn resample_profile(profile: &[f64], cgd: usize) -> Vec<f64> {
    if profile.len() == cgd || profile.is_empty() {
        return profile.to_vec();
    }
    (0..cgd).map(|s| profile[s * profile.len() / cgd]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub regions: usize,
    pub cgd: usize,
    pub decentralized: f64,
    pub centralized: f64,
    /// (γ_decent − γ_c) / γ_c.
    pub gap: f64,
    pub decentralized_minutes: f64,
    pub centralized_minutes: f64,
    pub status: String,
}

/// Relative gap against the centralized value.
pub fn gap(decentralized: f64, centralized: f64) -> f64 {
    if decentralized == centralized {
        0.0
    } else {
        (decentralized - centralized) / centralized
    }
}

fn point_config(base: &RunConfig, axis: &Axis, i: usize) -> Result<RunConfig, String> {
    let mut c = base.clone();
    c.mode = RunMode::Decentralized;
    match axis {
        Axis::Regions(v) => {
            c.partition = match &v[i] {
                RegionPoint::Single => None,
                RegionPoint::Partition(p) => Some(p.clone()),
            }
        }
        Axis::Cgd(v) => {
            c.cgd = v[i];
            c.profile = resample_profile(&base.profile, v[i]);
        }
    }
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn status_of(r: &RunReport) -> &'static str {
    if r.converged() {
        "ok"
    } else {
        "not-converged"
    }
}

fn run_point(base: &RunConfig, axis: &Axis, i: usize, out: Option<&Path>) -> SweepRow {
    let mut row = SweepRow {
        point: i + 1,
        regions: 0,
        cgd: base.cgd,
        decentralized: f64::NAN,
        centralized: f64::NAN,
        gap: f64::NAN,
        decentralized_minutes: f64::NAN,
        centralized_minutes: f64::NAN,
        status: String::new(),
    };
    let cfg = match point_config(base, axis, i) {
        Ok(c) => c,
        Err(e) => {
            row.status = format!("config: {e}");
            return row;
        }
    };
    row.cgd = cfg.cgd;
    let central_cfg = RunConfig {
        mode: RunMode::Centralized,
        ..cfg.clone()
    };
    let runs = [&cfg, &central_cfg].map(|c| execute(c));
    let mut status = Vec::new();
    for (k, (c, r)) in [&cfg, &central_cfg].into_iter().zip(&runs).enumerate() {
        match r {
            Ok(rep) => {
                if k == 0 {
                    row.regions = rep.regions;
                    row.decentralized = rep.gross();
                    row.decentralized_minutes = rep.wall.as_secs_f64() / 60.0;
                } else {
                    row.centralized = rep.gross();
                    row.centralized_minutes = rep.wall.as_secs_f64() / 60.0;
                }
                status.push(status_of(rep).to_string());
                if let Some(dir) = out {
                    let name = if k == 0 { "decentralized" } else { "centralized" };
                    let d = dir.join(format!("point{}", i + 1)).join(name);
                    if let Err(e) = report::write_run(&d, c, rep, false) {
                        status.push(format!("write: {e}"));
                    }
                }
            }
            Err(RunFailure::Config(e)) => status.push(format!("config: {e}")),
            Err(RunFailure::Runtime(e)) => status.push(format!("failed: {e}")),
        }
    }
    if runs.iter().all(Result::is_ok) {
        row.gap = gap(row.decentralized, row.centralized);
    }
    status.dedup();
    row.status = status.join("; ");
    row
}

/// Run every point. Points run one at a time unless `parallel` is set,
/// which overlaps them at the cost of timing fidelity.
pub fn sweep(base: &RunConfig, axis: &Axis, parallel: bool, out: Option<&Path>) -> Vec<SweepRow> {
    let n = axis.len();
    if !parallel {
        return (0..n).map(|i| run_point(base, axis, i, out)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..n).map(|i| s.spawn(move || run_point(base, axis, i, out))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep point panicked"))
            .collect()
    })
}

pub fn render_summary(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "point,regions,cgd,decentralized_gross,centralized_gross,gap_pct,decentralized_min,centralized_min,status\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.4},{:.4},{}",
            r.point,
            r.regions,
            r.cgd,
            r.decentralized,
            r.centralized,
            r.gap * 100.0,
            r.decentralized_minutes,
            r.centralized_minutes,
            r.status.replace(',', ";")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_convention() {
        assert_eq!(gap(101.0, 100.0), 0.01);
        assert_eq!(gap(7.25, 7.25), 0.0);
        assert_eq!(gap(0.0, 0.0), 0.0);
        assert!(gap(99.0, 100.0) < 0.0);
    }

    #[test]
    fn profiles_resample() {
        assert_eq!(resample_profile(&[0.6, 1.0], 2), vec![0.6, 1.0]);
        assert_eq!(resample_profile(&[0.6, 1.0], 4), vec![0.6, 0.6, 1.0, 1.0]);
        assert_eq!(resample_profile(&[0.7, 0.9, 1.0, 0.8], 2), vec![0.7, 1.0]);
        assert_eq!(resample_profile(&[0.5], 3), vec![0.5; 3]);
    }

    #[test]
    fn axis_lists() {
        let a = Axis::regions("1, p.txt", Path::new("/x"));
        assert_eq!(
            a,
            Axis::Regions(vec![RegionPoint::Single, RegionPoint::Partition("/x/p.txt".into())])
        );
        assert_eq!(Axis::cgd("2,4").unwrap(), Axis::Cgd(vec![2, 4]));
        assert!(Axis::cgd("2,four").is_err());
    }
}
