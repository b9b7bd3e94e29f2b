use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(path)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gridmaint-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn gridmaint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridmaint"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn desk_run_converges_and_writes_every_artifact() {
    let out = scratch("run");
    let cfg = data("desk3/config.txt");
    let o = gridmaint(&["run", "--config", path(&cfg), "--out", path(&out), "--plot-data"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    for phase in ["FMRC", "FMBC", "BMBC"] {
        assert!(stdout.contains(&format!("{phase} rounds=")), "{stdout}");
    }
    assert_eq!(stdout.matches("converged=true").count(), 3, "{stdout}");
    for f in [
        "report.txt",
        "metrics.csv",
        "schedule_x.csv",
        "schedule_y.csv",
        "schedule_z.csv",
        "residuals.dat",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.starts_with("gridmaint-report v1\n[run]\n"));
}

#[test]
fn missing_partition_is_a_configuration_error() {
    let dir = scratch("missing");
    let cfg = dir.join("config.txt");
    std::fs::write(
        &cfg,
        format!(
            "case={}\npartition=nowhere.txt\nrld={}\nepochs=3\ndays=3\ncgd=2\nprofile=0.6,1.0\n",
            path(&data("desk3/case.txt")),
            path(&data("desk3/rld.txt"))
        ),
    )
    .unwrap();
    for sub in ["run", "validate"] {
        let o = gridmaint(&[sub, "--config", path(&cfg), "--out", path(&dir)]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{sub}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = gridmaint(&["run", "--config", path(&dir.join("absent.txt"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = gridmaint(&[
        "run",
        "--config",
        path(&data("desk3/config.txt")),
        "--set",
        "segments=zero",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_metrics() {
    let cfg = data("fig1/config.txt");
    let runs: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|tag| {
            let out = scratch(&format!("det-{tag}"));
            let o = gridmaint(&[
                "run",
                "--config",
                path(&cfg),
                "--out",
                path(&out),
                "--seed",
                "7",
                "--threads",
                "2",
            ]);
            assert_eq!(o.status.code(), Some(0));
            std::fs::read(out.join("metrics.csv")).unwrap()
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn single_region_sweep_point_has_no_gap() {
    let out = scratch("sweep");
    let cfg = data("desk3/config.txt");
    let o = gridmaint(&["sweep", "--config", path(&cfg), "--out", path(&out), "--regions", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(table.as_bytes());
    let headers = rd.headers().unwrap().clone();
    let gap = headers.iter().position(|h| h == "gap_pct").unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][gap].parse::<f64>().unwrap(), 0.0);
    assert!(out.join("point1/centralized/report.txt").is_file());
}

#[test]
fn centralized_mode_has_no_tie_lines() {
    let out = scratch("central");
    let cfg = data("fig1/config.txt");
    let o = gridmaint(&["centralized", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("regions=1\n"));
    assert!(report.contains("tie_mismatch=0\n"));
}
