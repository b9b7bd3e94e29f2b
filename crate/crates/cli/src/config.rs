//! `key=value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use gridmaint_core::case_model::{expand_demand, parse_case, parse_partition, PartitionedCase, TimeGrid};
use gridmaint_core::consensus::ViolationMode;
use gridmaint_core::degradation::{cost_curve, parse_rld_spec, CostParams};
use gridmaint_core::runtime::{RunInputs, RunSettings, StepBound, TransportKind};
use gridmaint_core::subproblem::PwlEncoding;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{what}: {message}")]
    Input { what: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Decentralized,
    Centralized,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: PathBuf,
    pub partition: Option<PathBuf>,
    pub rld: PathBuf,
    pub epochs: usize,
    pub days: usize,
    pub cgd: usize,
    pub profile: Vec<f64>,
    pub cost: CostParams<f64>,
    pub settings: RunSettings,
    pub mode: RunMode,
    /// Recorded in every output; the algorithm itself draws no random numbers.
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: PathBuf::new(),
            partition: None,
            rld: PathBuf::new(),
            epochs: 1,
            days: 1,
            cgd: 1,
            profile: vec![1.0],
            cost: CostParams::default(),
            settings: RunSettings::default(),
            mode: RunMode::default(),
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn value_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| value_err(key, format!("cannot parse `{v}`")))
}

fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(value_err(key, "must be finite"))
    }
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(value_err(key, format!("expected a boolean, found `{v}`"))),
    }
}

/// Split `key=value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key=value, found `{body}`"),
            });
        };
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parse config text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        let mut have_case = false;
        let mut have_rld = false;
        for (k, v) in parse_pairs(text)? {
            c.set(&k, &v, base)?;
            have_case |= k == "case";
            have_rld |= k == "rld";
        }
        if !have_case {
            return Err(ConfigError::Missing("case"));
        }
        if !have_rld {
            return Err(ConfigError::Missing("rld"));
        }
        c.validate()?;
        Ok(c)
    }

    /// Apply one setting; used by the parser and by command-line overrides.
    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<(), ConfigError> {
        let s = &mut self.settings;
        let m = &mut s.model;
        match key {
            "case" => self.case = base.join(v),
            "partition" => self.partition = Some(base.join(v)),
            "rld" => self.rld = base.join(v),
            "out" => self.out = base.join(v),
            "epochs" => self.epochs = num(key, v)?,
            "days" => self.days = num(key, v)?,
            "cgd" => self.cgd = num(key, v)?,
            "profile" => {
                self.profile = v.split(',').map(|f| real(key, f.trim())).collect::<Result<_, _>>()?;
            }
            "mode" => {
                self.mode = match v {
                    "decentralized" => RunMode::Decentralized,
                    "centralized" => RunMode::Centralized,
                    _ => return Err(value_err(key, "expected decentralized or centralized")),
                }
            }
            "seed" => self.seed = num(key, v)?,
            "rho_theta" => m.penalties.rho_theta = real(key, v)?,
            "rho_flow" => m.penalties.rho_flow = real(key, v)?,
            "rho_production" => m.penalties.rho_production = real(key, v)?,
            "curtailment_cost" => m.curtailment_cost = real(key, v)?,
            "segments" => m.segments = num(key, v)?,
            "theta_halfwidth" => m.theta_halfwidth = real(key, v)?,
            "flow_halfwidth" => m.flow_halfwidth = real(key, v)?,
            "production_halfwidth" => m.production_halfwidth = real(key, v)?,
            "abs_multipliers" => m.abs_multipliers = flag(key, v)?,
            "pwl_encoding" => {
                m.encoding = match v {
                    "segments" => PwlEncoding::Segments,
                    "epigraph" => PwlEncoding::Epigraph,
                    _ => return Err(value_err(key, "expected segments or epigraph")),
                }
            }
            "kappa" => self.cost.kappa = real(key, v)?,
            "preventive_cost" => self.cost.preventive = real(key, v)?,
            "failure_cost" => self.cost.failure = real(key, v)?,
            "substeps" => self.cost.substeps = num(key, v)?,
            "epsilon" => s.epsilon = real(key, v)?,
            "cap_fmrc" => s.caps.fmrc = num(key, v)?,
            "cap_fmbc" => s.caps.fmbc = num(key, v)?,
            "cap_bmbc" => s.caps.bmbc = num(key, v)?,
            "inner_cap" => s.inner_cap = num(key, v)?,
            "violation" => {
                s.violation_mode = match v {
                    "signed" => ViolationMode::Signed,
                    "absolute" => ViolationMode::Absolute,
                    _ => return Err(value_err(key, "expected signed or absolute")),
                }
            }
            "step_bound" => {
                s.step_bound = match v {
                    "regional" => StepBound::Regional,
                    "global" => StepBound::Global,
                    _ => return Err(value_err(key, "expected regional or global")),
                }
            }
            "threads" => s.threads = num(key, v)?,
            "transport" => {
                s.transport = TransportKind::parse(v).ok_or_else(|| value_err(key, "expected inproc or socket"))?
            }
            "timeout_secs" => s.timeout = Duration::from_secs_f64(real(key, v)?.max(0.0)),
            "trace" => s.trace = flag(key, v)?,
            "feasibility_tol" => s.tolerances.feasibility = real(key, v)?,
            "optimality_tol" => s.tolerances.optimality = real(key, v)?,
            "integrality_tol" => s.tolerances.integrality = real(key, v)?,
            "iteration_limit" => s.tolerances.max_iterations = num(key, v)?,
            "node_limit" => s.limits.node_limit = num(key, v)?,
            "relative_gap" => s.limits.relative_gap = real(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.settings;
        let caps = [
            ("cap_fmrc", s.caps.fmrc),
            ("cap_fmbc", s.caps.fmbc),
            ("cap_bmbc", s.caps.bmbc),
            ("inner_cap", s.inner_cap),
            ("segments", s.model.segments),
            ("threads", s.threads),
            ("substeps", self.cost.substeps),
            ("iteration_limit", s.tolerances.max_iterations),
            ("node_limit", s.limits.node_limit),
        ];
        for (k, v) in caps {
            if v < 1 {
                return Err(value_err(k, "must be at least 1"));
            }
        }
        if !(1..=24).contains(&self.cgd) {
            return Err(value_err("cgd", "must lie in 1..=24"));
        }
        if self.profile.len() != self.cgd {
            return Err(value_err(
                "profile",
                format!("has {} factors but cgd is {}", self.profile.len(), self.cgd),
            ));
        }
        if self.profile.iter().any(|f| *f < 0.0) {
            return Err(value_err("profile", "factors must be nonnegative"));
        }
        TimeGrid::new(self.epochs, self.days, self.cgd).map_err(|e| value_err("epochs", e.to_string()))?;
        let positive = [
            ("epsilon", s.epsilon),
            ("theta_halfwidth", s.model.theta_halfwidth),
            ("flow_halfwidth", s.model.flow_halfwidth),
            ("production_halfwidth", s.model.production_halfwidth),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(value_err(k, "must be positive"));
            }
        }
        let nonnegative = [
            ("rho_theta", s.model.penalties.rho_theta),
            ("rho_flow", s.model.penalties.rho_flow),
            ("rho_production", s.model.penalties.rho_production),
            ("curtailment_cost", s.model.curtailment_cost),
        ];
        for (k, v) in nonnegative {
            if v < 0.0 {
                return Err(value_err(k, "must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.epochs, self.days, self.cgd).expect("validated grid")
    }

    /// Read and check every input file, then build the run inputs.
    pub fn inputs(&self) -> Result<RunInputs, ConfigError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let input = |what: &Path, e: &dyn std::fmt::Display| ConfigError::Input {
            what: what.display().to_string(),
            message: e.to_string(),
        };
        let case = parse_case(&read(&self.case)?).map_err(|e| input(&self.case, &e))?;
        let part = match &self.partition {
            Some(p) => parse_partition(&read(p)?, &case).map_err(|e| input(p, &e))?,
            None => PartitionedCase::single_region(case),
        };
        let grid = self.grid();
        let demand = expand_demand(&part.case, &grid, &self.profile).map_err(|e| input(&self.case, &e))?;
        let rld_dir = self.rld.parent().unwrap_or(Path::new(".")).to_path_buf();
        let load = |name: &str| std::fs::read_to_string(rld_dir.join(name));
        let entries = parse_rld_spec(&read(&self.rld)?, &self.cost, &load).map_err(|e| input(&self.rld, &e))?;
        let mut curves = Vec::with_capacity(part.case.generators.len());
        for g in &part.case.generators {
            let e = entries
                .iter()
                .find(|e| e.generator == g.id)
                .ok_or_else(|| ConfigError::Input {
                    what: self.rld.display().to_string(),
                    message: format!("no residual-life entry for generator {}", g.id),
                })?;
            let c = cost_curve(g.id, &e.rld, &e.params, self.epochs).map_err(|err| input(&self.rld, &err))?;
            curves.push(c.values);
        }
        if let Some(extra) = entries
            .iter()
            .find(|e| part.case.generator_index(e.generator).is_none())
        {
            return Err(ConfigError::Input {
                what: self.rld.display().to_string(),
                message: format!("entry for unknown generator {}", extra.generator),
            });
        }
        let inputs = RunInputs {
            part,
            grid,
            demand,
            curves,
        };
        Ok(match self.mode {
            RunMode::Decentralized => inputs,
            RunMode::Centralized => inputs.centralized(),
        })
    }
}
