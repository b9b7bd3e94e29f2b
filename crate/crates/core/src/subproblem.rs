//! Per-region, per-epoch mixed-integer models.
//!
//! For epoch m the model holds commitment `x`, dispatch `y`, start/stop
//! indicators `π_U`/`π_D`, the epoch's maintenance indicator `z`, bus angles,
//! line flows, curtailment `ψ` and the regional production `p`, restricted to
//! the steps of T_m. Quadratic consensus penalties are replaced by convex
//! piecewise-linear interpolants.

use std::ops::Range;

use gridmaint_milp::{
    solve_lp_warm, solve_milp_warm, write_lp, Basis, Limits, LinearModel, Sense, SolveResult, SolveStatus, Tolerances,
};
use thiserror::Error;

use crate::case_model::{Generator, PartitionedCase, Region, TimeGrid};
use crate::consensus::{ConsensusState, Penalties};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelMode {
    /// Maintenance fixed, commitment relaxed to [0, 1].
    Fmrc,
    /// Maintenance fixed, binary commitment.
    Fmbc,
    /// Maintenance released, binary commitment.
    Bmbc,
}

impl ModelMode {
    pub fn name(self) -> &'static str {
        match self {
            ModelMode::Fmrc => "FMRC",
            ModelMode::Fmbc => "FMBC",
            ModelMode::Bmbc => "BMBC",
        }
    }

    pub fn fixes_maintenance(self) -> bool {
        self != ModelMode::Bmbc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PwlEncoding {
    /// One epigraph column bounded below by one row per chord.
    Epigraph,
    /// Bounded segment columns plus two unbounded end extensions, one row.
    #[default]
    Segments,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub penalties: Penalties<f64>,
    /// ν, USD per MW of curtailment.
    pub curtailment_cost: f64,
    /// Chords per quadratic penalty.
    pub segments: usize,
    /// Trust half-width for angle penalties, rad.
    pub theta_halfwidth: f64,
    /// Trust half-width for flow penalties as a fraction of line capacity.
    pub flow_halfwidth: f64,
    /// Trust half-width for the production penalty as a fraction of regional capacity.
    pub production_halfwidth: f64,
    /// Multiplier terms as κ|dev| instead of κ·dev.
    pub abs_multipliers: bool,
    pub encoding: PwlEncoding,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            penalties: Penalties::default(),
            curtailment_cost: 1e4,
            segments: 8,
            theta_halfwidth: 0.5,
            flow_halfwidth: 0.5,
            production_halfwidth: 0.1,
            abs_multipliers: false,
            encoding: PwlEncoding::Segments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubproblemError {
    #[error("region {region}, epoch {epoch}: model infeasible ({class})")]
    Infeasible { region: usize, epoch: usize, class: String },
    #[error("region {region}, epoch {epoch}: solver stopped with {status:?}")]
    Solver {
        region: usize,
        epoch: usize,
        status: SolveStatus,
    },
    #[error("consensus state does not cover the region: {0}")]
    MissingConsensus(String),
    #[error("invalid penalty interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("column {column} of an integer variable has value {value}")]
    Integrality { column: String, value: f64 },
    #[error("maintenance fixing required in mode {0}")]
    MissingFixing(&'static str),
}

/// One region's private inputs: its topology view, its generators, the
/// demand of its buses and the cost curves of its generators.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProblem {
    pub index: usize,
    pub num_regions: usize,
    pub region: Region,
    pub grid: TimeGrid,
    /// Local generators, in `region.generators` order.
    pub generators: Vec<Generator>,
    /// Bus index of each local generator.
    pub generator_bus: Vec<usize>,
    /// (from, to, susceptance, capacity) by line index, for incident lines.
    pub lines: Vec<Option<(usize, usize, f64, f64)>>,
    /// δ[owned position][t].
    pub demand: Vec<Vec<f64>>,
    /// ω[local generator][epoch].
    pub curves: Vec<Vec<f64>>,
    /// Owned bus pinned to zero angle.
    pub reference: Option<usize>,
}

impl RegionProblem {
    /// Extract region `index`. `demand` is [bus][t] for the whole case,
    /// `curves` is per generator of the whole case. The global angle
    /// reference is the lowest-indexed bus.
    pub fn new(part: &PartitionedCase, index: usize, grid: TimeGrid, demand: &[Vec<f64>], curves: &[Vec<f64>]) -> Self {
        let region = part.regions[index].clone();
        let case = &part.case;
        let generators = region.generators.iter().map(|&g| case.generators[g].clone()).collect();
        let generator_bus = region
            .generators
            .iter()
            .map(|&g| case.bus_index(case.generators[g].bus).expect("validated case"))
            .collect();
        let mut lines = vec![None; case.lines.len()];
        for &l in region
            .internal_lines
            .iter()
            .chain(region.tie_lines.iter().map(|t| &t.line))
        {
            let line = &case.lines[l];
            lines[l] = Some((
                case.bus_index(line.from).expect("validated case"),
                case.bus_index(line.to).expect("validated case"),
                line.susceptance,
                line.capacity,
            ));
        }
        let reference = (part.owner[0] == index).then_some(0);
        Self {
            index,
            num_regions: part.regions.len(),
            grid,
            generators,
            generator_bus,
            lines,
            demand: region.owned.iter().map(|&b| demand[b].clone()).collect(),
            curves: region.generators.iter().map(|&g| curves[g].clone()).collect(),
            region,
            reference,
        }
    }

    /// Σ δ over owned buses for each step.
    pub fn total_demand(&self) -> Vec<f64> {
        (0..self.grid.steps())
            .map(|t| self.demand.iter().map(|d| d[t]).sum())
            .collect()
    }

    pub fn capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.pmax).sum()
    }

    fn line(&self, l: usize) -> (usize, usize, f64, f64) {
        self.lines[l].expect("incident line")
    }
}

/// Piecewise-linear stand-in for (ρ/2)·d² on d ∈ [lo, hi] with K uniform
/// chords. An optional outer breakpoint at distance `reach` beyond each end
/// adds one steeper chord per side; past the last breakpoint the end chords
/// continue linearly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwlSpec {
    pub rho: f64,
    pub lo: f64,
    pub hi: f64,
    pub segments: usize,
    pub reach: f64,
}

impl PwlSpec {
    pub fn new(rho: f64, lo: f64, hi: f64, segments: usize) -> Result<Self, SubproblemError> {
        if !(lo < hi) || segments == 0 || !(rho >= 0.0) {
            return Err(SubproblemError::BadInterval { lo, hi });
        }
        Ok(Self {
            rho,
            lo,
            hi,
            segments,
            reach: 0.0,
        })
    }

    pub fn with_reach(mut self, reach: f64) -> Self {
        self.reach = if reach.is_finite() && reach > 0.0 { reach } else { 0.0 };
        self
    }

    /// Outer reach that keeps the penalty coercive against a linear term of
    /// magnitude |multiplier|: the outer chord slope is at least |multiplier|
    /// plus the slope of the last inner chord end.
    pub fn guard_reach(rho: f64, half: f64, multiplier: f64) -> f64 {
        if rho > 0.0 {
            half.max(2.0 * multiplier.abs() / rho)
        } else {
            0.0
        }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.segments as f64
    }

    pub fn breakpoint(&self, k: usize) -> f64 {
        if k == self.segments {
            self.hi
        } else {
            self.lo + self.width() * k as f64
        }
    }

    /// All breakpoints in increasing order, outer ones included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.segments + 3);
        if self.reach > 0.0 {
            b.push(self.lo - self.reach);
        }
        b.extend((0..=self.segments).map(|k| self.breakpoint(k)));
        if self.reach > 0.0 {
            b.push(self.hi + self.reach);
        }
        b
    }

    /// (slope, intercept) of the chord between two breakpoints.
    fn chord_between(&self, a: f64, b: f64) -> (f64, f64) {
        (0.5 * self.rho * (a + b), -0.5 * self.rho * a * b)
    }

    /// (slope, intercept) of inner chord k.
    pub fn chord(&self, k: usize) -> (f64, f64) {
        self.chord_between(self.breakpoint(k), self.breakpoint(k + 1))
    }

    /// Every chord in order, outer ones included.
    pub fn chords(&self) -> Vec<(f64, f64)> {
        self.breakpoints()
            .windows(2)
            .map(|w| self.chord_between(w[0], w[1]))
            .collect()
    }

    pub fn exact(&self, d: f64) -> f64 {
        0.5 * self.rho * d * d
    }

    /// Max over chords, which is the interpolant between the breakpoints.
    pub fn value(&self, d: f64) -> f64 {
        self.chords()
            .into_iter()
            .map(|(s, c)| s * d + c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst-case |interpolant − exact| inside the interval.
    pub fn max_error(&self) -> f64 {
        let h = self.width();
        0.5 * self.rho * h * h / 4.0
    }

    /// Realized |interpolant − exact| at a specific deviation. Never more
    /// than `max_error` inside the interval.
    pub fn error_at(&self, d: f64) -> f64 {
        (self.exact(d) - self.value(d)).abs()
    }
}

/// Columns and rows added for one quadratic penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlHandle {
    pub spec: PwlSpec,
    pub columns: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Add (ρ/2)(v − center)² for column `var` to the objective of `model`.
/// Nothing is emitted when ρ = 0.
pub fn encode_quadratic_penalty(
    model: &mut LinearModel<f64>,
    name: &str,
    var: usize,
    center: f64,
    spec: PwlSpec,
    encoding: PwlEncoding,
) -> PwlHandle {
    let mut h = PwlHandle {
        spec,
        columns: Vec::new(),
        rows: Vec::new(),
    };
    if spec.rho == 0.0 {
        return h;
    }
    let chords = spec.chords();
    match encoding {
        PwlEncoding::Epigraph => {
            let e = model.add_column(format!("epi_{name}"), f64::NEG_INFINITY, f64::INFINITY, 1.0);
            h.columns.push(e);
            for (k, &(s, c)) in chords.iter().enumerate() {
                // e ≥ s·(v − center) + c
                let r = model.add_row(
                    format!("chord_{name}_k{k}"),
                    vec![(e, 1.0), (var, -s)],
                    Sense::Ge,
                    c - s * center,
                );
                h.rows.push(r);
            }
        }
        PwlEncoding::Segments => {
            // v − center = b₀ − s₋ + Σ s_k + s₊
            let bp = spec.breakpoints();
            let below = model.add_column(format!("seglo_{name}"), 0.0, f64::INFINITY, -chords[0].0);
            let mut coeffs = vec![(var, 1.0), (below, 1.0)];
            h.columns.push(below);
            for (k, &(s, _)) in chords.iter().enumerate() {
                let c = model.add_column(format!("seg_{name}_k{k}"), 0.0, bp[k + 1] - bp[k], s);
                coeffs.push((c, -1.0));
                h.columns.push(c);
            }
            let above = model.add_column(format!("seghi_{name}"), 0.0, f64::INFINITY, chords[chords.len() - 1].0);
            coeffs.push((above, -1.0));
            h.columns.push(above);
            let r = model.add_row(format!("pwl_{name}"), coeffs, Sense::Eq, center + bp[0]);
            h.rows.push(r);
            model.objective_offset += spec.exact(bp[0]);
        }
    }
    h
}

/// Multiplier term κ·(v − center), or κ·|v − center| in abs mode via a
/// split v − center = s⁺ − s⁻ with both parts capped at `cap`.
pub fn encode_abs(
    model: &mut LinearModel<f64>,
    name: &str,
    var: usize,
    center: f64,
    coefficient: f64,
    abs_mode: bool,
    cap: f64,
) -> Vec<usize> {
    if coefficient == 0.0 {
        return Vec::new();
    }
    if !abs_mode {
        model.columns[var].cost += coefficient;
        model.objective_offset -= coefficient * center;
        return Vec::new();
    }
    let plus = model.add_column(format!("absp_{name}"), 0.0, cap, coefficient);
    let minus = model.add_column(format!("absm_{name}"), 0.0, cap, coefficient);
    model.add_row(
        format!("abs_{name}"),
        vec![(var, 1.0), (plus, -1.0), (minus, 1.0)],
        Sense::Eq,
        center,
    );
    vec![plus, minus]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    /// Shared-bus position.
    Theta(usize),
    /// Tie-line position.
    Flow(usize),
    Production,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerm {
    pub kind: PenaltyKind,
    /// Position inside the epoch.
    pub step: usize,
    pub column: usize,
    pub center: f64,
    pub multiplier: f64,
    pub pwl: PwlHandle,
}

/// Constraint families that can be dropped to locate infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Relax {
    pub coupling: bool,
    pub min_up_down: bool,
    pub ramp: bool,
    pub initial_status: bool,
    pub line_limits: bool,
}

/// Column layout of one epoch block inside a model.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLayout {
    pub epoch: usize,
    pub steps: Range<usize>,
    /// [local generator][step in epoch]
    pub x: Vec<Vec<usize>>,
    pub y: Vec<Vec<usize>>,
    pub pi_up: Vec<Vec<usize>>,
    pub pi_down: Vec<Vec<usize>>,
    /// [local generator]
    pub z: Vec<usize>,
    /// Angles of owned then foreign buses: (bus index, [step]).
    pub theta: Vec<(usize, Vec<usize>)>,
    /// [internal line position][step]
    pub internal_flow: Vec<Vec<usize>>,
    /// [tie position][step], oriented local → remote.
    pub tie_flow: Vec<Vec<usize>>,
    /// [owned position][step]
    pub psi: Vec<Vec<usize>>,
    pub production: Vec<usize>,
    pub penalties: Vec<PenaltyTerm>,
    /// Σ_g α_g / |M| folded into the model offset.
    pub dual_constant: f64,
    pub alpha: Vec<f64>,
}

impl EpochLayout {
    fn theta_of(&self, bus: usize) -> &[usize] {
        &self.theta.iter().find(|(b, _)| *b == bus).expect("bus in model").1
    }
}

/// A standalone epoch model L^m_r.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochModel {
    pub region: usize,
    pub mode: ModelMode,
    pub model: LinearModel<f64>,
    pub layout: EpochLayout,
    pub options: ModelOptions,
}

impl EpochModel {
    /// Model in the LP interchange text format.
    pub fn to_lp(&self) -> String {
        write_lp(&self.model)
    }

    /// Names of every column, for disjointness checks.
    pub fn column_names(&self) -> Vec<&str> {
        self.model.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Inputs shared by every epoch of one round.
#[derive(Debug, Clone, Copy)]
pub struct EpochInputs<'a> {
    pub consensus: &'a ConsensusState<f64>,
    /// α per local generator.
    pub alpha: &'a [f64],
    pub mode: ModelMode,
    /// Fixed maintenance epoch per local generator (FMRC/FMBC).
    pub fixing: Option<&'a [usize]>,
    pub options: &'a ModelOptions,
    pub relax: Relax,
}

fn check_inputs(p: &RegionProblem, inp: &EpochInputs) -> Result<(), SubproblemError> {
    let steps = p.grid.steps();
    let c = inp.consensus;
    let miss = |what: &str| Err(SubproblemError::MissingConsensus(what.into()));
    if c.theta_bar.len() != p.region.shared.len() || c.lambda.len() != p.region.shared.len() {
        return miss("angle entries");
    }
    if c.flow_bar.len() != p.region.tie_lines.len() || c.phi.len() != p.region.tie_lines.len() {
        return miss("flow entries");
    }
    let rows_ok = c
        .theta_bar
        .iter()
        .chain(&c.lambda)
        .chain(&c.flow_bar)
        .chain(&c.phi)
        .all(|r| r.len() == steps);
    if !rows_ok || c.production_target.len() != steps || c.eta.len() != steps {
        return miss("step coverage");
    }
    if inp.alpha.len() != p.generators.len() {
        return miss("alpha per generator");
    }
    if inp.mode.fixes_maintenance() {
        match inp.fixing {
            Some(f) if f.len() == p.generators.len() => {}
            _ => return Err(SubproblemError::MissingFixing(inp.mode.name())),
        }
    }
    Ok(())
}

/// Append the block of epoch `m` to `model`.
pub fn append_epoch(
    model: &mut LinearModel<f64>,
    p: &RegionProblem,
    m: usize,
    inp: &EpochInputs,
) -> Result<EpochLayout, SubproblemError> {
    check_inputs(p, inp)?;
    let opt = inp.options;
    let steps = p.grid.epoch_steps(m);
    let len = steps.len();
    let integer_x = inp.mode != ModelMode::Fmrc;
    let r = &p.region;
    let ng = p.generators.len();

    let mut lay = EpochLayout {
        epoch: m,
        steps: steps.clone(),
        x: vec![Vec::with_capacity(len); ng],
        y: vec![Vec::with_capacity(len); ng],
        pi_up: vec![Vec::with_capacity(len); ng],
        pi_down: vec![Vec::with_capacity(len); ng],
        z: Vec::with_capacity(ng),
        theta: Vec::new(),
        internal_flow: vec![Vec::with_capacity(len); r.internal_lines.len()],
        tie_flow: vec![Vec::with_capacity(len); r.tie_lines.len()],
        psi: vec![Vec::with_capacity(len); r.owned.len()],
        production: Vec::with_capacity(len),
        penalties: Vec::new(),
        dual_constant: 0.0,
        alpha: inp.alpha.to_vec(),
    };

    // maintenance indicators
    for (g, gen) in p.generators.iter().enumerate() {
        let name = format!("z_g{}_m{}", gen.id, m + 1);
        let cost = p.curves[g][m] - inp.alpha[g];
        let col = match inp.fixing.filter(|_| inp.mode.fixes_maintenance()) {
            Some(fix) => {
                let v = if fix[g] == m { 1.0 } else { 0.0 };
                model.add_column(name, v, v, cost)
            }
            None => model.add_binary(name, cost),
        };
        lay.z.push(col);
        lay.dual_constant += inp.alpha[g] / p.grid.epochs as f64;
    }
    model.objective_offset += lay.dual_constant;

    // generator columns and rows
    for (g, gen) in p.generators.iter().enumerate() {
        for t in steps.clone() {
            let tag = format!("g{}_t{}", gen.id, t + 1);
            let x = if integer_x {
                model.add_binary(format!("x_{tag}"), gen.commit_cost)
            } else {
                model.add_column(format!("x_{tag}"), 0.0, 1.0, gen.commit_cost)
            };
            let y = model.add_column(format!("y_{tag}"), 0.0, gen.pmax, gen.dispatch_cost);
            let pu = model.add_column(format!("piu_{tag}"), 0.0, 1.0, gen.startup_cost);
            let pd = model.add_column(format!("pid_{tag}"), 0.0, 1.0, gen.shutdown_cost);
            lay.x[g].push(x);
            lay.y[g].push(y);
            lay.pi_up[g].push(pu);
            lay.pi_down[g].push(pd);
        }
        let z = lay.z[g];
        let init = gen.initial;
        let carry = m == 0 && init.steps > 0 && !inp.relax.initial_status;
        for s in 0..len {
            let t = steps.start + s;
            let tag = format!("g{}_t{}", gen.id, t + 1);
            let (x, y, pu, pd) = (lay.x[g][s], lay.y[g][s], lay.pi_up[g][s], lay.pi_down[g][s]);
            if !inp.relax.coupling {
                model.add_row(format!("mcpl_{tag}"), vec![(x, 1.0), (z, 1.0)], Sense::Le, 1.0);
            }
            model.add_row(format!("pmin_{tag}"), vec![(y, 1.0), (x, -gen.pmin)], Sense::Ge, 0.0);
            model.add_row(format!("pmax_{tag}"), vec![(y, 1.0), (x, -gen.pmax)], Sense::Le, 0.0);
            if s > 0 {
                let (xp, yp) = (lay.x[g][s - 1], lay.y[g][s - 1]);
                model.add_row(
                    format!("su_{tag}"),
                    vec![(x, 1.0), (xp, -1.0), (pu, -1.0)],
                    Sense::Le,
                    0.0,
                );
                model.add_row(
                    format!("sd_{tag}"),
                    vec![(xp, 1.0), (x, -1.0), (pd, -1.0)],
                    Sense::Le,
                    0.0,
                );
                if !inp.relax.ramp {
                    model.add_row(format!("rup_{tag}"), vec![(y, 1.0), (yp, -1.0)], Sense::Le, gen.ramp);
                    model.add_row(format!("rdn_{tag}"), vec![(yp, 1.0), (y, -1.0)], Sense::Le, gen.ramp);
                }
            } else if carry {
                let prev = if init.on { 1.0 } else { 0.0 };
                model.add_row(format!("su_{tag}"), vec![(x, 1.0), (pu, -1.0)], Sense::Le, prev);
                model.add_row(format!("sd_{tag}"), vec![(x, -1.0), (pd, -1.0)], Sense::Le, -prev);
            }
            if !inp.relax.min_up_down {
                let up_lo = (s + 1).saturating_sub(gen.min_up as usize);
                let mut up: Vec<(usize, f64)> = (up_lo..=s).map(|i| (lay.pi_up[g][i], 1.0)).collect();
                up.push((x, -1.0));
                model.add_row(format!("minup_{tag}"), up, Sense::Le, 0.0);
                let dn_lo = (s + 1).saturating_sub(gen.min_down as usize);
                let mut dn: Vec<(usize, f64)> = (dn_lo..=s).map(|i| (lay.pi_down[g][i], 1.0)).collect();
                dn.push((x, 1.0));
                model.add_row(format!("mindn_{tag}"), dn, Sense::Le, 1.0);
                if carry {
                    let held = init.steps as usize;
                    if init.on && s + held < gen.min_up as usize {
                        model.add_row(format!("holdon_{tag}"), vec![(x, 1.0)], Sense::Ge, 1.0);
                    }
                    if !init.on && s + held < gen.min_down as usize {
                        model.add_row(format!("holdoff_{tag}"), vec![(x, 1.0)], Sense::Le, 0.0);
                    }
                }
            }
        }
    }

    // network
    let mut buses: Vec<usize> = r.owned.clone();
    buses.extend(r.foreign.iter().copied());
    for &b in &buses {
        let cols = steps
            .clone()
            .map(|t| {
                let name = format!("th_b{}_t{}", b + 1, t + 1);
                if p.reference == Some(b) {
                    model.add_column(name, 0.0, 0.0, 0.0)
                } else {
                    model.add_column(name, f64::NEG_INFINITY, f64::INFINITY, 0.0)
                }
            })
            .collect();
        lay.theta.push((b, cols));
    }
    let cap_bounds = |cap: f64| {
        if inp.relax.line_limits {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (-cap, cap)
        }
    };
    for (i, &l) in r.internal_lines.iter().enumerate() {
        let (from, to, gamma, cap) = p.line(l);
        let (lo, hi) = cap_bounds(cap);
        for (s, t) in steps.clone().enumerate() {
            let f = model.add_column(format!("f_l{}_t{}", l + 1, t + 1), lo, hi, 0.0);
            let (ta, tb) = (lay.theta_of(from)[s], lay.theta_of(to)[s]);
            model.add_row(
                format!("dcf_l{}_t{}", l + 1, t + 1),
                vec![(f, 1.0), (ta, -gamma), (tb, gamma)],
                Sense::Eq,
                0.0,
            );
            lay.internal_flow[i].push(f);
        }
    }
    for (i, tie) in r.tie_lines.iter().enumerate() {
        let (_, _, gamma, cap) = p.line(tie.line);
        let (lo, hi) = cap_bounds(cap);
        for (s, t) in steps.clone().enumerate() {
            let f = model.add_column(format!("ft_l{}_t{}", tie.line + 1, t + 1), lo, hi, 0.0);
            let (tu, tv) = (lay.theta_of(tie.local)[s], lay.theta_of(tie.remote)[s]);
            model.add_row(
                format!("dct_l{}_t{}", tie.line + 1, t + 1),
                vec![(f, 1.0), (tu, -gamma), (tv, gamma)],
                Sense::Eq,
                0.0,
            );
            lay.tie_flow[i].push(f);
        }
    }
    for (pos, &b) in r.owned.iter().enumerate() {
        for (s, t) in steps.clone().enumerate() {
            let d = p.demand[pos][t];
            let psi = model.add_column(format!("psi_b{}_t{}", b + 1, t + 1), 0.0, d, opt.curtailment_cost);
            lay.psi[pos].push(psi);
            let mut coeffs = vec![(psi, 1.0)];
            for (g, &gb) in p.generator_bus.iter().enumerate() {
                if gb == b {
                    coeffs.push((lay.y[g][s], 1.0));
                }
            }
            for (i, &l) in r.internal_lines.iter().enumerate() {
                let (from, to, _, _) = p.line(l);
                if from == b {
                    coeffs.push((lay.internal_flow[i][s], -1.0));
                } else if to == b {
                    coeffs.push((lay.internal_flow[i][s], 1.0));
                }
            }
            for (i, tie) in r.tie_lines.iter().enumerate() {
                if tie.local == b {
                    coeffs.push((lay.tie_flow[i][s], -1.0));
                }
            }
            model.add_row(format!("bal_b{}_t{}", b + 1, t + 1), coeffs, Sense::Eq, d);
        }
    }
    let capacity = p.capacity();
    for (s, t) in steps.clone().enumerate() {
        let pc = model.add_column(format!("p_r{}_t{}", p.index + 1, t + 1), 0.0, capacity, 0.0);
        let mut coeffs = vec![(pc, 1.0)];
        for g in 0..ng {
            coeffs.push((lay.y[g][s], -1.0));
        }
        model.add_row(format!("plink_r{}_t{}", p.index + 1, t + 1), coeffs, Sense::Eq, 0.0);
        lay.production.push(pc);
    }

    // consensus penalties
    let c = inp.consensus;
    let pen = opt.penalties;
    let k = opt.segments;
    let add_term = |model: &mut LinearModel<f64>,
                    lay: &mut EpochLayout,
                    kind: PenaltyKind,
                    s: usize,
                    name: String,
                    column: usize,
                    center: f64,
                    multiplier: f64,
                    rho: f64,
                    half: f64|
     -> Result<(), SubproblemError> {
        encode_abs(model, &name, column, center, multiplier, opt.abs_multipliers, half);
        let spec = PwlSpec::new(rho, -half, half, k)?.with_reach(PwlSpec::guard_reach(rho, half, multiplier));
        let pwl = encode_quadratic_penalty(model, &name, column, center, spec, opt.encoding);
        lay.penalties.push(PenaltyTerm {
            kind,
            step: s,
            column,
            center,
            multiplier,
            pwl,
        });
        Ok(())
    };
    for (i, sb) in r.shared.iter().enumerate() {
        let cols: Vec<usize> = lay.theta_of(sb.bus).to_vec();
        for (s, t) in steps.clone().enumerate() {
            add_term(
                model,
                &mut lay,
                PenaltyKind::Theta(i),
                s,
                format!("th_b{}_t{}", sb.bus + 1, t + 1),
                cols[s],
                c.theta_bar[i][t],
                c.lambda[i][t],
                pen.rho_theta,
                opt.theta_halfwidth,
            )?;
        }
    }
    for (i, tie) in r.tie_lines.iter().enumerate() {
        let (_, _, _, cap) = p.line(tie.line);
        for (s, t) in steps.clone().enumerate() {
            let col = lay.tie_flow[i][s];
            add_term(
                model,
                &mut lay,
                PenaltyKind::Flow(i),
                s,
                format!("ft_l{}_t{}", tie.line + 1, t + 1),
                col,
                c.flow_bar[i][t],
                c.phi[i][t],
                pen.rho_flow,
                opt.flow_halfwidth * cap,
            )?;
        }
    }
    let half_p = if capacity > 0.0 {
        opt.production_halfwidth * capacity
    } else {
        1.0
    };
    for (s, t) in steps.clone().enumerate() {
        let col = lay.production[s];
        add_term(
            model,
            &mut lay,
            PenaltyKind::Production,
            s,
            format!("p_r{}_t{}", p.index + 1, t + 1),
            col,
            c.production_target[t],
            c.eta[t],
            pen.rho_production,
            half_p,
        )?;
    }
    Ok(lay)
}

pub fn build_epoch_model(p: &RegionProblem, m: usize, inp: &EpochInputs) -> Result<EpochModel, SubproblemError> {
    let mut model = LinearModel::new();
    let layout = append_epoch(&mut model, p, m, inp)?;
    Ok(EpochModel {
        region: p.index,
        mode: inp.mode,
        model,
        layout,
        options: *inp.options,
    })
}

/// All epochs in one model plus Σ_m z^g_m = 1 per generator.
pub fn build_region_model(
    p: &RegionProblem,
    inp: &EpochInputs,
) -> Result<(LinearModel<f64>, Vec<EpochLayout>), SubproblemError> {
    let mut model = LinearModel::new();
    let mut layouts = Vec::with_capacity(p.grid.epochs);
    for m in 0..p.grid.epochs {
        layouts.push(append_epoch(&mut model, p, m, inp)?);
    }
    for (g, gen) in p.generators.iter().enumerate() {
        let coeffs = layouts.iter().map(|l| (l.z[g], 1.0)).collect();
        model.add_row(format!("card_g{}", gen.id), coeffs, Sense::Eq, 1.0);
    }
    Ok((model, layouts))
}

/// Objective components of one solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostParts {
    /// Σ c x + d y + S_U π_U + S_D π_D
    pub operations: f64,
    /// Σ ω z
    pub maintenance: f64,
    /// ν Σ ψ
    pub curtailment: f64,
    /// Consensus terms with exact quadratics.
    pub penalty_exact: f64,
    /// Consensus terms as the model sees them.
    pub penalty_model: f64,
    /// Σ α (1/|M| − z)
    pub dual: f64,
    /// Bound on |penalty_model − penalty_exact| from the PWL encoding.
    pub pwl_bound: f64,
}

impl CostParts {
    pub fn gross(&self) -> f64 {
        self.operations + self.maintenance + self.curtailment
    }

    /// L^j of the subgradient loop: c·x + d·y + ω·z.
    pub fn exact_objective(&self) -> f64 {
        self.gross() + self.penalty_exact + self.dual
    }

    pub fn add(&mut self, o: &CostParts) {
        self.operations += o.operations;
        self.maintenance += o.maintenance;
        self.curtailment += o.curtailment;
        self.penalty_exact += o.penalty_exact;
        self.penalty_model += o.penalty_model;
        self.dual += o.dual;
        self.pwl_bound += o.pwl_bound;
    }
}

/// Values of one solved epoch block, indexed like its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSolution {
    pub epoch: usize,
    pub steps: Range<usize>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub pi_up: Vec<Vec<f64>>,
    pub pi_down: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    /// (bus, [step]) for owned then foreign buses.
    pub theta: Vec<(usize, Vec<f64>)>,
    pub internal_flow: Vec<Vec<f64>>,
    pub tie_flow: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub production: Vec<f64>,
    pub parts: CostParts,
    /// Model objective (PWL).
    pub objective: f64,
    /// c·x + d·y only, for the subgradient objective.
    pub commit_dispatch: f64,
}

impl EpochSolution {
    pub fn theta_of(&self, bus: usize) -> Option<&[f64]> {
        self.theta.iter().find(|(b, _)| *b == bus).map(|(_, v)| v.as_slice())
    }
}

/// Map solver values back to named indices and decompose the objective.
pub fn extract_solution(
    p: &RegionProblem,
    model: &LinearModel<f64>,
    lay: &EpochLayout,
    values: &[f64],
    options: &ModelOptions,
    integrality_tol: f64,
) -> Result<EpochSolution, SubproblemError> {
    if values.len() != model.num_columns() {
        return Err(SubproblemError::MissingConsensus(
            "solution length does not match model".into(),
        ));
    }
    let get = |j: usize| -> Result<f64, SubproblemError> {
        let v = values[j];
        if model.columns[j].integer {
            let r = v.round();
            if (v - r).abs() > integrality_tol {
                return Err(SubproblemError::Integrality {
                    column: model.columns[j].name.clone(),
                    value: v,
                });
            }
            Ok(r)
        } else {
            Ok(v)
        }
    };
    let grid = |m: &Vec<Vec<usize>>| -> Result<Vec<Vec<f64>>, SubproblemError> {
        m.iter().map(|row| row.iter().map(|&j| get(j)).collect()).collect()
    };
    let mut sol = EpochSolution {
        epoch: lay.epoch,
        steps: lay.steps.clone(),
        x: grid(&lay.x)?,
        y: grid(&lay.y)?,
        pi_up: grid(&lay.pi_up)?,
        pi_down: grid(&lay.pi_down)?,
        z: lay.z.iter().map(|&j| get(j)).collect::<Result<_, _>>()?,
        theta: lay
            .theta
            .iter()
            .map(|(b, cols)| Ok((*b, cols.iter().map(|&j| get(j)).collect::<Result<Vec<_>, _>>()?)))
            .collect::<Result<_, SubproblemError>>()?,
        internal_flow: grid(&lay.internal_flow)?,
        tie_flow: grid(&lay.tie_flow)?,
        psi: grid(&lay.psi)?,
        production: lay.production.iter().map(|&j| get(j)).collect::<Result<_, _>>()?,
        parts: CostParts::default(),
        objective: 0.0,
        commit_dispatch: 0.0,
    };
    let mut parts = CostParts::default();
    let mut cd = 0.0;
    for (g, gen) in p.generators.iter().enumerate() {
        for s in 0..lay.steps.len() {
            let base = gen.commit_cost * sol.x[g][s] + gen.dispatch_cost * sol.y[g][s];
            cd += base;
            parts.operations += base + gen.startup_cost * sol.pi_up[g][s] + gen.shutdown_cost * sol.pi_down[g][s];
        }
        parts.maintenance += p.curves[g][lay.epoch] * sol.z[g];
        parts.dual += lay.alpha[g] * (1.0 / p.grid.epochs as f64 - sol.z[g]);
    }
    parts.curtailment = options.curtailment_cost * sol.psi.iter().flatten().sum::<f64>();
    for term in &lay.penalties {
        let d = values[term.column] - term.center;
        let lin = if options.abs_multipliers {
            term.multiplier * d.abs()
        } else {
            term.multiplier * d
        };
        parts.penalty_exact += lin + term.pwl.spec.exact(d);
        if term.pwl.spec.rho > 0.0 {
            parts.pwl_bound += term.pwl.spec.error_at(d);
        }
    }
    // Rounded binaries can shift the model value by solver noise only; use
    // the raw vector for the model objective.
    let raw = model.evaluate(values);
    parts.penalty_model = raw - parts.operations - parts.maintenance - parts.curtailment - parts.dual;
    sol.objective = raw;
    sol.commit_dispatch = cd;
    sol.parts = parts;
    Ok(sol)
}

/// Solve one epoch model, starting from `warm` when given.
pub fn solve_epoch(
    p: &RegionProblem,
    em: &EpochModel,
    tol: &Tolerances<f64>,
    limits: &Limits<f64>,
    warm: Option<&Basis>,
) -> Result<(EpochSolution, Option<Basis>), SubproblemError> {
    let res = run_solver(&em.model, tol, limits, warm);
    match res.status {
        SolveStatus::Optimal | SolveStatus::NodeLimit if !res.values.is_empty() => {
            let sol = extract_solution(
                p,
                &em.model,
                &em.layout,
                &res.values,
                &em.options,
                tol.integrality * 10.0,
            )?;
            Ok((sol, res.basis))
        }
        SolveStatus::Infeasible => Err(SubproblemError::Infeasible {
            region: p.index,
            epoch: em.layout.epoch,
            class: "no feasible point".into(),
        }),
        status => Err(SubproblemError::Solver {
            region: p.index,
            epoch: em.layout.epoch,
            status,
        }),
    }
}

pub fn run_solver(
    model: &LinearModel<f64>,
    tol: &Tolerances<f64>,
    limits: &Limits<f64>,
    warm: Option<&Basis>,
) -> SolveResult<f64> {
    if model.has_integers() {
        solve_milp_warm(model, tol, limits, warm)
    } else {
        let bounds: Vec<(f64, f64)> = model.columns.iter().map(|c| (c.lower, c.upper)).collect();
        solve_lp_warm(model, tol, &bounds, warm)
    }
}

/// Name the constraint family whose removal restores feasibility.
pub fn diagnose_infeasibility(p: &RegionProblem, m: usize, inp: &EpochInputs, tol: &Tolerances<f64>) -> String {
    let families: [(&str, Relax); 5] = [
        (
            "maintenance coupling",
            Relax {
                coupling: true,
                ..Relax::default()
            },
        ),
        (
            "initial status",
            Relax {
                initial_status: true,
                ..Relax::default()
            },
        ),
        (
            "min up/down",
            Relax {
                min_up_down: true,
                ..Relax::default()
            },
        ),
        (
            "ramp",
            Relax {
                ramp: true,
                ..Relax::default()
            },
        ),
        (
            "line limits",
            Relax {
                line_limits: true,
                ..Relax::default()
            },
        ),
    ];
    for (name, relax) in families {
        let trial = EpochInputs { relax, ..*inp };
        if let Ok(em) = build_epoch_model(p, m, &trial) {
            let r = run_solver(&em.model, tol, &Limits::default(), None);
            if r.status == SolveStatus::Optimal {
                return name.to_string();
            }
        }
    }
    "unknown".to_string()
}
