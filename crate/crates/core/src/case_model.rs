//! Network cases, region partitions and the operational time grid.
//!
//! Case files are section-tagged tables:
//!
//! ```text
//! BUS
//! # id demand_mw
//! 1 0
//! 2 3
//! BRANCH
//! # from to susceptance_mw_per_rad capacity_mw
//! 1 2 10 5
//! GEN
//! # id bus pmin pmax ramp min_up min_down [init_on init_steps]
//! 1 1 0 10 10 1 1
//! COST
//! # gen commit dispatch startup shutdown
//! 1 0 2 0 0
//! ```
//!
//! Partition files hold one `bus_id region_id` pair per line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown bus {bus}")]
    UnknownBus { line: usize, bus: u32 },
    #[error("line {line}: unknown generator {generator}")]
    UnknownGenerator { line: usize, generator: u32 },
    #[error("line {line}: {message}")]
    Domain { line: usize, message: String },
    #[error("{0}")]
    Partition(String),
    #[error("{0}")]
    Grid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: u32,
    /// Base demand in MW.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: u32,
    pub to: u32,
    /// Γ in MW/rad.
    pub susceptance: f64,
    /// F_max in MW.
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialStatus {
    pub on: bool,
    /// Steps already spent in the `on` state before the horizon starts.
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub pmin: f64,
    pub pmax: f64,
    /// MW per step.
    pub ramp: f64,
    pub min_up: u32,
    pub min_down: u32,
    pub commit_cost: f64,
    pub dispatch_cost: f64,
    pub startup_cost: f64,
    pub shutdown_cost: f64,
    pub initial: InitialStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkCase {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

impl NetworkCase {
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn generator_index(&self, id: u32) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    /// Renders the case back into the file format accepted by [`parse_case`].
    pub fn serialize(&self) -> String {
        let mut out = String::from("BUS\n");
        for b in &self.buses {
            let _ = writeln!(out, "{} {}", b.id, b.demand);
        }
        out.push_str("BRANCH\n");
        for l in &self.lines {
            let _ = writeln!(out, "{} {} {} {}", l.from, l.to, l.susceptance, l.capacity);
        }
        out.push_str("GEN\n");
        for g in &self.generators {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {}",
                g.id,
                g.bus,
                g.pmin,
                g.pmax,
                g.ramp,
                g.min_up,
                g.min_down,
                u8::from(g.initial.on),
                g.initial.steps
            );
        }
        out.push_str("COST\n");
        for g in &self.generators {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                g.id, g.commit_cost, g.dispatch_cost, g.startup_cost, g.shutdown_cost
            );
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Bus,
    Branch,
    Gen,
    Cost,
}

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
}

impl<'a> Tokens<'a> {
    fn split(line: usize, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    items.push((s + 1, &text[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            items.push((s + 1, &text[s..]));
        }
        Self { line, items }
    }

    fn arity(&self, allowed: &[usize], what: &str) -> Result<(), CaseError> {
        if allowed.contains(&self.items.len()) {
            return Ok(());
        }
        let column = self.items.get(allowed[0]).or(self.items.last()).map_or(1, |t| t.0);
        Err(CaseError::Syntax {
            line: self.line,
            column,
            message: format!("{what} row expects {:?} fields, found {}", allowed, self.items.len()),
        })
    }

    fn num(&self, k: usize) -> Result<f64, CaseError> {
        let (column, tok) = self.items[k];
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CaseError::Syntax {
                line: self.line,
                column,
                message: format!("expected a finite number, found `{tok}`"),
            }),
        }
    }

    fn uint(&self, k: usize) -> Result<u32, CaseError> {
        let (column, tok) = self.items[k];
        tok.parse::<u32>().map_err(|_| CaseError::Syntax {
            line: self.line,
            column,
            message: format!("expected a non-negative integer, found `{tok}`"),
        })
    }

    fn domain(&self, message: impl Into<String>) -> CaseError {
        CaseError::Domain {
            line: self.line,
            message: message.into(),
        }
    }
}

fn content(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

/// Parse a case file. Every generator needs exactly one `COST` row.
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    let mut case = NetworkCase::default();
    let mut section = None;
    let mut costs: HashMap<u32, (usize, [f64; 4])> = HashMap::new();
    let mut line_refs = Vec::new();
    let mut gen_refs = Vec::new();
    let mut seen_bus = HashMap::new();
    let mut seen_gen = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let header = match body.to_ascii_uppercase().as_str() {
            "BUS" => Some(Section::Bus),
            "BRANCH" => Some(Section::Branch),
            "GEN" => Some(Section::Gen),
            "COST" => Some(Section::Cost),
            _ => None,
        };
        if header.is_some() {
            section = header;
            continue;
        }
        let offset = raw.len() - raw.trim_start().len();
        let mut tok = Tokens::split(lineno, body);
        for t in tok.items.iter_mut() {
            t.0 += offset;
        }
        match section {
            None => {
                return Err(CaseError::Syntax {
                    line: lineno,
                    column: offset + 1,
                    message: "data before any section header".into(),
                })
            }
            Some(Section::Bus) => {
                tok.arity(&[2], "BUS")?;
                let id = tok.uint(0)?;
                let demand = tok.num(1)?;
                if demand < 0.0 {
                    return Err(tok.domain(format!("bus {id} has negative demand")));
                }
                if seen_bus.insert(id, lineno).is_some() {
                    return Err(tok.domain(format!("duplicate bus {id}")));
                }
                case.buses.push(Bus { id, demand });
            }
            Some(Section::Branch) => {
                tok.arity(&[4], "BRANCH")?;
                let l = Line {
                    from: tok.uint(0)?,
                    to: tok.uint(1)?,
                    susceptance: tok.num(2)?,
                    capacity: tok.num(3)?,
                };
                if l.susceptance <= 0.0 {
                    return Err(tok.domain("susceptance must be positive"));
                }
                if l.capacity <= 0.0 {
                    return Err(tok.domain("capacity must be positive"));
                }
                if l.from == l.to {
                    return Err(tok.domain("branch endpoints coincide"));
                }
                line_refs.push(lineno);
                case.lines.push(l);
            }
            Some(Section::Gen) => {
                tok.arity(&[7, 9], "GEN")?;
                let g = Generator {
                    id: tok.uint(0)?,
                    bus: tok.uint(1)?,
                    pmin: tok.num(2)?,
                    pmax: tok.num(3)?,
                    ramp: tok.num(4)?,
                    min_up: tok.uint(5)?,
                    min_down: tok.uint(6)?,
                    commit_cost: 0.0,
                    dispatch_cost: 0.0,
                    startup_cost: 0.0,
                    shutdown_cost: 0.0,
                    initial: if tok.items.len() == 9 {
                        let on = tok.uint(7)?;
                        if on > 1 {
                            return Err(tok.domain("init_on must be 0 or 1"));
                        }
                        InitialStatus {
                            on: on == 1,
                            steps: tok.uint(8)?,
                        }
                    } else {
                        InitialStatus::default()
                    },
                };
                if !(0.0 <= g.pmin && g.pmin <= g.pmax) {
                    return Err(tok.domain(format!("generator {} needs 0 <= pmin <= pmax", g.id)));
                }
                if g.ramp <= 0.0 {
                    return Err(tok.domain(format!("generator {} needs a positive ramp limit", g.id)));
                }
                if g.min_up < 1 || g.min_down < 1 {
                    return Err(tok.domain(format!("generator {} needs min up/down >= 1", g.id)));
                }
                if seen_gen.insert(g.id, lineno).is_some() {
                    return Err(tok.domain(format!("duplicate generator {}", g.id)));
                }
                gen_refs.push(lineno);
                case.generators.push(g);
            }
            Some(Section::Cost) => {
                tok.arity(&[5], "COST")?;
                let id = tok.uint(0)?;
                let vals = [tok.num(1)?, tok.num(2)?, tok.num(3)?, tok.num(4)?];
                if vals.iter().any(|v| *v < 0.0) {
                    return Err(tok.domain(format!("generator {id} has a negative cost")));
                }
                if costs.insert(id, (lineno, vals)).is_some() {
                    return Err(tok.domain(format!("duplicate cost row for generator {id}")));
                }
            }
        }
    }

    if case.buses.is_empty() {
        return Err(CaseError::Syntax {
            line: text.lines().count().max(1),
            column: 1,
            message: "case has no BUS rows".into(),
        });
    }
    for (l, &lineno) in case.lines.iter().zip(&line_refs) {
        for b in [l.from, l.to] {
            if !seen_bus.contains_key(&b) {
                return Err(CaseError::UnknownBus { line: lineno, bus: b });
            }
        }
    }
    for (g, &lineno) in case.generators.iter_mut().zip(&gen_refs) {
        if !seen_bus.contains_key(&g.bus) {
            return Err(CaseError::UnknownBus {
                line: lineno,
                bus: g.bus,
            });
        }
        let Some((_, [c, d, su, sd])) = costs.remove(&g.id) else {
            return Err(CaseError::Domain {
                line: lineno,
                message: format!("generator {} has no COST row", g.id),
            });
        };
        g.commit_cost = c;
        g.dispatch_cost = d;
        g.startup_cost = su;
        g.shutdown_cost = sd;
    }
    if let Some((&id, &(lineno, _))) = costs.iter().min_by_key(|(_, v)| v.0) {
        return Err(CaseError::UnknownGenerator {
            line: lineno,
            generator: id,
        });
    }
    Ok(case)
}

/// A line crossing a region border, seen from the region owning `local`.
#[derive(Debug, Clone, PartialEq)]
pub struct TieLine {
    pub line: usize,
    pub local: usize,
    pub remote: usize,
    pub remote_region: usize,
}

/// A bus in B_r = U_r ∪ V_r with the regions it is exchanged with.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedBus {
    pub bus: usize,
    pub owned: bool,
    /// N^b_r, ascending.
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Label used in the partition file.
    pub label: u32,
    /// Bus indices, ascending.
    pub owned: Vec<usize>,
    pub internal: Vec<usize>,
    pub boundary: Vec<usize>,
    pub foreign: Vec<usize>,
    pub generators: Vec<usize>,
    pub neighbors: Vec<usize>,
    /// Lines with both ends owned by the region.
    pub internal_lines: Vec<usize>,
    pub tie_lines: Vec<TieLine>,
    /// Boundary and foreign buses, ascending by bus index.
    pub shared: Vec<SharedBus>,
}

impl Region {
    pub fn shared_position(&self, bus: usize) -> Option<usize> {
        self.shared.iter().position(|s| s.bus == bus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedCase {
    pub case: NetworkCase,
    /// Owning region of each bus index.
    pub owner: Vec<usize>,
    pub regions: Vec<Region>,
}

impl PartitionedCase {
    /// Every bus in one region.
    pub fn single_region(case: NetworkCase) -> Self {
        let labels = vec![1; case.buses.len()];
        Self::from_labels(case, &labels).expect("a nonempty case always forms one region")
    }

    /// Build from one region label per bus index.
    pub fn from_labels(case: NetworkCase, labels: &[u32]) -> Result<Self, CaseError> {
        if labels.len() != case.buses.len() {
            return Err(CaseError::Partition("one region label per bus required".into()));
        }
        if case.buses.is_empty() {
            return Err(CaseError::Partition("case has no buses".into()));
        }
        let distinct: BTreeSet<u32> = labels.iter().copied().collect();
        let rank: BTreeMap<u32, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let owner: Vec<usize> = labels.iter().map(|l| rank[l]).collect();
        let nb = case.buses.len();
        let bus_idx: HashMap<u32, usize> = case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let ends: Vec<(usize, usize)> = case.lines.iter().map(|l| (bus_idx[&l.from], bus_idx[&l.to])).collect();

        // visible[b] = regions that carry bus b as owned or foreign
        let mut visible: Vec<BTreeSet<usize>> = (0..nb).map(|b| BTreeSet::from([owner[b]])).collect();
        for &(a, b) in &ends {
            if owner[a] != owner[b] {
                visible[a].insert(owner[b]);
                visible[b].insert(owner[a]);
            }
        }

        let mut regions = Vec::new();
        for (r, &label) in distinct.iter().enumerate() {
            let owned: Vec<usize> = (0..nb).filter(|&b| owner[b] == r).collect();
            let mut boundary = BTreeSet::new();
            let mut foreign = BTreeSet::new();
            let mut neighbors = BTreeSet::new();
            let mut internal_lines = Vec::new();
            let mut tie_lines = Vec::new();
            for (l, &(a, b)) in ends.iter().enumerate() {
                let (ra, rb) = (owner[a], owner[b]);
                if ra == r && rb == r {
                    internal_lines.push(l);
                } else if ra == r || rb == r {
                    let (local, remote) = if ra == r { (a, b) } else { (b, a) };
                    boundary.insert(local);
                    foreign.insert(remote);
                    neighbors.insert(owner[remote]);
                    tie_lines.push(TieLine {
                        line: l,
                        local,
                        remote,
                        remote_region: owner[remote],
                    });
                }
            }
            let internal = owned.iter().copied().filter(|b| !boundary.contains(b)).collect();
            let mut shared = Vec::new();
            for &b in boundary.iter().chain(foreign.iter()) {
                let owned_here = owner[b] == r;
                let neighbors: Vec<usize> = visible[b]
                    .iter()
                    .copied()
                    .filter(|&q| q != r && (owned_here || q == owner[b]))
                    .collect();
                shared.push(SharedBus {
                    bus: b,
                    owned: owned_here,
                    neighbors,
                });
            }
            shared.sort_by_key(|s| s.bus);
            let generators = case
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| owner[bus_idx[&g.bus]] == r)
                .map(|(i, _)| i)
                .collect();
            regions.push(Region {
                label,
                owned,
                internal,
                boundary: boundary.into_iter().collect(),
                foreign: foreign.into_iter().collect(),
                generators,
                neighbors: neighbors.into_iter().collect(),
                internal_lines,
                tie_lines,
                shared,
            });
        }
        Ok(Self { case, owner, regions })
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }
}

/// Parse `bus_id region_id` lines and classify buses per region.
pub fn parse_partition(text: &str, case: &NetworkCase) -> Result<PartitionedCase, CaseError> {
    let mut labels: Vec<Option<u32>> = vec![None; case.buses.len()];
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = content(raw);
        if body.is_empty() {
            continue;
        }
        let tok = Tokens::split(lineno, body);
        tok.arity(&[2], "partition")?;
        let bus = tok.uint(0)?;
        let region = tok.uint(1)?;
        let b = case.bus_index(bus).ok_or(CaseError::UnknownBus { line: lineno, bus })?;
        if labels[b].is_some_and(|r| r != region) {
            return Err(CaseError::Partition(format!("line {lineno}: bus {bus} assigned twice")));
        }
        labels[b] = Some(region);
    }
    if let Some(b) = labels.iter().position(Option::is_none) {
        return Err(CaseError::Partition(format!(
            "bus {} is not assigned to a region",
            case.buses[b].id
        )));
    }
    let labels: Vec<u32> = labels.into_iter().map(Option::unwrap).collect();
    PartitionedCase::from_labels(case.clone(), &labels)
}

/// Maintenance epochs over an operational step grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub epochs: usize,
    pub days: usize,
    /// Commitment decisions per generator per day.
    pub cgd: usize,
}

impl TimeGrid {
    pub fn new(epochs: usize, days: usize, cgd: usize) -> Result<Self, CaseError> {
        if epochs == 0 || days == 0 || cgd == 0 {
            return Err(CaseError::Grid("epochs, days and cgd must be positive".into()));
        }
        if (days * cgd) % epochs != 0 {
            return Err(CaseError::Grid(format!(
                "{} steps do not divide into {epochs} equal epochs",
                days * cgd
            )));
        }
        Ok(Self { epochs, days, cgd })
    }

    pub fn steps(&self) -> usize {
        self.days * self.cgd
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.steps() / self.epochs
    }

    /// T_m for a zero-based epoch.
    pub fn epoch_steps(&self, m: usize) -> Range<usize> {
        let l = self.steps_per_epoch();
        m * l..(m + 1) * l
    }

    pub fn epoch_of(&self, t: usize) -> usize {
        t / self.steps_per_epoch()
    }

    pub fn step_of_day(&self, t: usize) -> usize {
        t % self.cgd
    }
}

/// δ[b][t] = base demand of bus b times the profile factor of t's step of day.
pub fn expand_demand(case: &NetworkCase, grid: &TimeGrid, profile: &[f64]) -> Result<Vec<Vec<f64>>, CaseError> {
    if profile.len() != grid.cgd {
        return Err(CaseError::Grid(format!(
            "demand profile has {} factors, expected {}",
            profile.len(),
            grid.cgd
        )));
    }
    if profile.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(CaseError::Grid("demand factors must be finite and nonnegative".into()));
    }
    Ok(case
        .buses
        .iter()
        .map(|b| {
            (0..grid.steps())
                .map(|t| b.demand * profile[grid.step_of_day(t)])
                .collect()
        })
        .collect())
}
