use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridmaint::config::{RunConfig, RunMode};
use gridmaint::sweep::{render_summary, sweep, Axis};
use gridmaint::{exit, exit_code, report};
use gridmaint_core::runtime::TransportKind;

#[derive(Parser)]
#[command(
    name = "gridmaint",
    version,
    about = "Decentralized joint maintenance and unit commitment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value run configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// inproc or socket
    #[arg(long)]
    transport: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra key=value overrides, applied after the config file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the decentralized algorithm
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write gnuplot-ready residual series
        #[arg(long)]
        plot_data: bool,
    },
    /// Run with the whole network as one region
    Centralized {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plot_data: bool,
    },
    /// Compare decentralized and centralized runs along one axis
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma list of partition files; `1` means one region
        #[arg(long, conflicts_with = "cgd", required_unless_present = "cgd")]
        regions: Option<String>,
        /// Comma list of commitment decisions per day
        #[arg(long)]
        cgd: Option<String>,
        /// Run points concurrently (wall times become less meaningful)
        #[arg(long)]
        parallel_points: bool,
    },
    /// Check the configuration and inputs without solving
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(c: &Common) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::load(&c.config).map_err(|e| e.to_string())?;
    let here = Path::new(".");
    for kv in &c.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("override `{kv}` is not key=value"))?;
        cfg.set(k.trim(), v.trim(), here).map_err(|e| e.to_string())?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.threads {
        cfg.settings.threads = t;
    }
    if let Some(t) = &c.transport {
        cfg.settings.transport = TransportKind::parse(t).ok_or_else(|| format!("unknown transport `{t}`"))?;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(mut cfg: RunConfig, mode: RunMode, plot: bool) -> i32 {
    cfg.mode = mode;
    let r = match gridmaint::execute(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = report::write_run(&cfg.out, &cfg, &r, plot) {
        eprintln!("error: cannot write outputs to {}: {e}", cfg.out.display());
        return exit::OUTPUT;
    }
    for p in &r.phases {
        println!(
            "{} rounds={} converged={} gross={:.4} wall={:.2}s",
            p.mode.name(),
            p.rounds,
            p.converged,
            p.parts.gross(),
            p.wall.as_secs_f64()
        );
    }
    println!(
        "gross={:.4} ops={:.4} cbm={:.4} dc={:.4} reverted={} outputs={}",
        r.gross(),
        r.totals.operations,
        r.totals.maintenance,
        r.totals.curtailment,
        r.reverted,
        cfg.out.display()
    );
    exit_code(&r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run { common, .. }
        | Command::Centralized { common, .. }
        | Command::Sweep { common, .. }
        | Command::Validate { common } => common,
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    let code = match &cli.command {
        Command::Run { plot_data, .. } => run(cfg, RunMode::Decentralized, *plot_data),
        Command::Centralized { plot_data, .. } => run(cfg, RunMode::Centralized, *plot_data),
        Command::Validate { .. } => match cfg.inputs() {
            Ok(inp) => {
                let p = &inp.part;
                println!(
                    "ok: {} buses, {} lines, {} generators, {} regions, {} steps in {} epochs",
                    p.case.buses.len(),
                    p.case.lines.len(),
                    p.case.generators.len(),
                    p.num_regions(),
                    inp.grid.steps(),
                    inp.grid.epochs
                );
                exit::OK
            }
            Err(e) => {
                eprintln!("configuration error: {e}");
                exit::CONFIG
            }
        },
        Command::Sweep {
            regions,
            cgd,
            parallel_points,
            ..
        } => {
            let axis = match (regions, cgd) {
                (Some(r), _) => Axis::regions(r, Path::new(".")),
                (None, Some(c)) => match Axis::cgd(c) {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("configuration error: {e}");
                        return ExitCode::from(exit::CONFIG as u8);
                    }
                },
                (None, None) => unreachable!("clap requires one axis"),
            };
            let rows = sweep(&cfg, &axis, *parallel_points, Some(&cfg.out));
            let table = render_summary(&rows);
            print!("{table}");
            match std::fs::create_dir_all(&cfg.out).and_then(|_| std::fs::write(cfg.out.join("sweep.csv"), &table)) {
                Ok(()) => exit::OK,
                Err(e) => {
                    eprintln!("error: cannot write sweep table: {e}");
                    exit::OUTPUT
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
