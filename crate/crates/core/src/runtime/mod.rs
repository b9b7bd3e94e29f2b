//! Region agents running the three phases in synchronous rounds.
//!
//! Each region is an OS thread with exclusive state. Within a round an
//! agent solves its epoch models on a shared worker pool, then exchanges
//! encoded records with the other agents and updates its consensus state.
//! The phases are fixed maintenance with relaxed commitment (FMRC), fixed
//! maintenance with binary commitment (FMBC) and released maintenance
//! (BMBC), where the cardinality constraint is dualized.
//!
//! The printed loop guard of the fixed phases reads "while Ω != 0" although
//! Ω = 1 marks convergence; the loop here runs until Ω is set.

mod agent;
pub mod subgradient;
pub mod transport;
pub mod wire;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use gridmaint_milp::{Basis, Limits, Tolerances};
use rayon::prelude::*;
use rayon::ThreadPool;
use thiserror::Error;

use crate::case_model::{PartitionedCase, Region, TimeGrid};
use crate::consensus::{ConsensusError, ViolationMode};
use crate::subproblem::{
    build_epoch_model, diagnose_infeasibility, solve_epoch, CostParts, EpochInputs, EpochSolution, ModelMode,
    ModelOptions, RegionProblem, SubproblemError,
};

pub use subgradient::{cardinality_satisfied, repair, step_size, subgradient_step, SubgradientState};
pub use transport::TransportKind;
pub use wire::{Kind, Payload, RoundMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundCaps {
    pub fmrc: usize,
    pub fmbc: usize,
    pub bmbc: usize,
}

impl Default for RoundCaps {
    fn default() -> Self {
        Self {
            fmrc: 200,
            fmbc: 200,
            bmbc: 500,
        }
    }
}

impl RoundCaps {
    pub fn for_mode(&self, mode: ModelMode) -> usize {
        match mode {
            ModelMode::Fmrc => self.fmrc,
            ModelMode::Fmbc => self.fmbc,
            ModelMode::Bmbc => self.bmbc,
        }
    }
}

/// Which upper bound enters the step-size numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepBound {
    /// The region's own exact FMBC objective.
    #[default]
    Regional,
    /// The sum over all regions.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub model: ModelOptions,
    pub tolerances: Tolerances<f64>,
    pub limits: Limits<f64>,
    /// Max-norm threshold on tie-line flow residuals.
    pub epsilon: f64,
    pub caps: RoundCaps,
    pub inner_cap: usize,
    pub violation_mode: ViolationMode,
    pub step_bound: StepBound,
    /// Worker threads for epoch solves, shared by all agents.
    pub threads: usize,
    pub transport: TransportKind,
    pub timeout: Duration,
    /// Keep every record text in the report.
    pub trace: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            model: ModelOptions::default(),
            tolerances: Tolerances::default(),
            limits: Limits::default(),
            epsilon: 1e-2,
            caps: RoundCaps::default(),
            inner_cap: 30,
            violation_mode: ViolationMode::default(),
            step_bound: StepBound::default(),
            threads: 1,
            transport: TransportKind::InProc,
            timeout: Duration::from_secs(300),
            trace: false,
        }
    }
}

/// Everything a run needs: the partitioned network, the grid, demand
/// `[bus][t]` and cost curves `[generator][epoch]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInputs {
    pub part: PartitionedCase,
    pub grid: TimeGrid,
    pub demand: Vec<Vec<f64>>,
    pub curves: Vec<Vec<f64>>,
}

impl RunInputs {
    /// The same inputs with every bus in one region.
    pub fn centralized(&self) -> Self {
        Self {
            part: PartitionedCase::single_region(self.part.case.clone()),
            ..self.clone()
        }
    }

    pub fn problems(&self) -> Vec<RegionProblem> {
        (0..self.part.num_regions())
            .map(|r| RegionProblem::new(&self.part, r, self.grid, &self.demand, &self.curves))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("region {region}, epoch {epoch}: infeasible, {class} constraints conflict")]
    Infeasible { region: usize, epoch: usize, class: String },
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error("region {region}: {source}")]
    Consensus {
        region: usize,
        #[source]
        source: ConsensusError,
    },
    #[error("region {region}, round {round}: no {kind} from regions {missing:?} within the timeout")]
    Timeout {
        region: usize,
        round: usize,
        kind: &'static str,
        missing: Vec<usize>,
    },
    #[error("region {region}: protocol violation: {message}")]
    Protocol { region: usize, message: String },
    #[error("region {region}: transport failure: {message}")]
    Transport { region: usize, message: String },
    #[error("region {region} stopped because another agent failed")]
    Aborted { region: usize },
    #[error("setup failed: {0}")]
    Setup(String),
}

/// One region's solution over the whole horizon, epoch slices in order.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSolution {
    pub epochs: Vec<EpochSolution>,
    pub parts: CostParts,
}

impl RegionSolution {
    pub fn from_epochs(epochs: Vec<EpochSolution>) -> Self {
        let mut parts = CostParts::default();
        for e in &epochs {
            parts.add(&e.parts);
        }
        Self { epochs, parts }
    }

    /// Sum of the epoch model objectives.
    pub fn objective(&self) -> f64 {
        self.epochs.iter().map(|e| e.objective).sum()
    }

    /// c·x + d·y + ω·z, the subgradient loop's L^j.
    pub fn lagrangian_value(&self) -> f64 {
        self.epochs.iter().map(|e| e.commit_dispatch).sum::<f64>() + self.parts.maintenance
    }

    fn rows(&self, pick: impl Fn(&EpochSolution) -> &Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let n = self.epochs.first().map_or(0, |e| pick(e).len());
        (0..n)
            .map(|i| self.epochs.iter().flat_map(|e| pick(e)[i].iter().copied()).collect())
            .collect()
    }

    /// x[local generator][t].
    pub fn x(&self) -> Vec<Vec<f64>> {
        self.rows(|e| &e.x)
    }

    pub fn y(&self) -> Vec<Vec<f64>> {
        self.rows(|e| &e.y)
    }

    pub fn tie_flows(&self) -> Vec<Vec<f64>> {
        self.rows(|e| &e.tie_flow)
    }

    pub fn internal_flows(&self) -> Vec<Vec<f64>> {
        self.rows(|e| &e.internal_flow)
    }

    /// ψ[owned position][t].
    pub fn psi(&self) -> Vec<Vec<f64>> {
        self.rows(|e| &e.psi)
    }

    /// z[local generator][epoch].
    pub fn z(&self) -> Vec<Vec<f64>> {
        let n = self.epochs.first().map_or(0, |e| e.z.len());
        (0..n).map(|g| self.epochs.iter().map(|e| e.z[g]).collect()).collect()
    }

    pub fn z_sums(&self) -> Vec<f64> {
        self.z().iter().map(|r| r.iter().sum()).collect()
    }

    pub fn production(&self) -> Vec<f64> {
        self.epochs.iter().flat_map(|e| e.production.iter().copied()).collect()
    }

    /// Σ ψ over owned buses per step.
    pub fn curtailment(&self) -> Vec<f64> {
        let psi = self.psi();
        let steps = self.epochs.iter().map(|e| e.steps.len()).sum();
        (0..steps).map(|t| psi.iter().map(|r| r[t]).sum()).collect()
    }

    pub fn theta(&self, bus: usize) -> Vec<f64> {
        self.epochs
            .iter()
            .flat_map(|e| e.theta_of(bus).expect("bus in region view").iter().copied())
            .collect()
    }

    /// θ[shared][t] in the region's `shared` order.
    pub fn shared_theta(&self, region: &Region) -> Vec<Vec<f64>> {
        region.shared.iter().map(|s| self.theta(s.bus)).collect()
    }
}

/// Largest |ψ + Σ y − Σ out + Σ in − δ| over owned buses and steps.
pub fn balance_residual(p: &RegionProblem, sol: &RegionSolution) -> f64 {
    let (y, psi, fi, ft) = (sol.y(), sol.psi(), sol.internal_flows(), sol.tie_flows());
    let r = &p.region;
    let mut worst = 0.0f64;
    for (pos, &b) in r.owned.iter().enumerate() {
        for t in 0..p.grid.steps() {
            let mut v = psi[pos][t] - p.demand[pos][t];
            for (g, &gb) in p.generator_bus.iter().enumerate() {
                if gb == b {
                    v += y[g][t];
                }
            }
            for (i, &l) in r.internal_lines.iter().enumerate() {
                let (from, to, _, _) = p.lines[l].expect("incident line");
                if from == b {
                    v -= fi[i][t];
                } else if to == b {
                    v += fi[i][t];
                }
            }
            for (i, tie) in r.tie_lines.iter().enumerate() {
                if tie.local == b {
                    v -= ft[i][t];
                }
            }
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Solver knobs handed to every epoch solve.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings<'a> {
    pub tolerances: &'a Tolerances<f64>,
    pub limits: &'a Limits<f64>,
}

/// Build and solve the listed epochs concurrently on `pool`, warm-starting
/// each from its cached basis. Results come back in `epochs` order and do
/// not depend on the pool size.
pub fn solve_epochs(
    p: &RegionProblem,
    inp: &EpochInputs,
    solver: SolverSettings,
    pool: &ThreadPool,
    bases: &mut [Option<Basis>],
    epochs: &[usize],
) -> Result<Vec<EpochSolution>, RuntimeError> {
    let jobs: Vec<(usize, Option<Basis>)> = epochs.iter().map(|&m| (m, bases[m].take())).collect();
    let results: Vec<(usize, Result<(EpochSolution, Option<Basis>), SubproblemError>)> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(m, warm)| {
                let res = build_epoch_model(p, m, inp)
                    .and_then(|em| solve_epoch(p, &em, solver.tolerances, solver.limits, warm.as_ref()));
                (m, res)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(results.len());
    for (m, res) in results {
        match res {
            Ok((sol, basis)) => {
                bases[m] = basis;
                out.push(sol);
            }
            Err(SubproblemError::Infeasible { region, epoch, .. }) => {
                let class = diagnose_infeasibility(p, m, inp, solver.tolerances);
                return Err(RuntimeError::Infeasible { region, epoch, class });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// MTOpt: every epoch of the region, stitched over the horizon.
pub fn mt_opt(
    p: &RegionProblem,
    inp: &EpochInputs,
    solver: SolverSettings,
    pool: &ThreadPool,
    bases: &mut [Option<Basis>],
) -> Result<RegionSolution, RuntimeError> {
    let all: Vec<usize> = (0..p.grid.epochs).collect();
    Ok(RegionSolution::from_epochs(solve_epochs(
        p, inp, solver, pool, bases, &all,
    )?))
}

/// A sent record as seen on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Time since the run started.
    pub at: Duration,
    pub round: usize,
    pub phase: String,
    pub sender: usize,
    pub receiver: usize,
    pub kind: Kind,
    /// Framed size.
    pub bytes: usize,
    /// Record text when tracing is on, empty otherwise.
    pub record: String,
}

/// When an agent started round `round` and when it finished its local work
/// for it (just before announcing its convergence flag).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSpan {
    pub region: usize,
    pub round: usize,
    pub start: Duration,
    pub end: Duration,
}

/// One region's view of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRound {
    pub round: usize,
    pub mode: ModelMode,
    pub region: usize,
    pub primal: f64,
    pub dual: f64,
    pub local: bool,
    pub global: bool,
    pub gross: f64,
    pub exact: f64,
    pub inner_iterations: usize,
}

/// Aggregate of one round over all regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub mode: ModelMode,
    pub primal: f64,
    pub dual: f64,
    pub converged: bool,
    pub gross: f64,
    pub exact: f64,
    pub inner_iterations: usize,
    pub messages: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub mode: ModelMode,
    pub rounds: usize,
    pub converged: bool,
    pub wall: Duration,
    /// Sum of the regions' final cost parts in this phase.
    pub parts: CostParts,
    /// Sum of model objectives (PWL penalties).
    pub objective: f64,
}

/// Final schedule indexed by case generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub generator_ids: Vec<u32>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub regions: usize,
    pub grid: TimeGrid,
    pub phases: Vec<PhaseReport>,
    /// Σ of regional exact FMBC objectives.
    pub upper_bound: f64,
    /// Cost parts of the final schedule.
    pub totals: CostParts,
    /// The BMBC schedule cost more than FMBC and was discarded.
    pub reverted: bool,
    pub inner_cap_hits: usize,
    pub rounds: Vec<RoundMetrics>,
    pub messages: BTreeMap<Kind, (usize, usize)>,
    pub schedule: Schedule,
    /// Worst nodal balance residual in the final schedule.
    pub balance_residual: f64,
    /// Worst |f_r + f_r'| between the two ends of a tie line.
    pub tie_mismatch: f64,
    pub trace: Vec<TraceRecord>,
    pub spans: Vec<RoundSpan>,
    pub wall: Duration,
}

impl RunReport {
    pub fn phase(&self, mode: ModelMode) -> &PhaseReport {
        self.phases
            .iter()
            .find(|p| p.mode == mode)
            .expect("all phases reported")
    }

    pub fn gross(&self) -> f64 {
        self.totals.gross()
    }

    pub fn converged(&self) -> bool {
        self.phases.iter().all(|p| p.converged)
    }
}

/// State shared by the agents of one run: the clock, the abort flag and
/// the log sinks. Agents never read each other's data through it.
struct Hub {
    start: Instant,
    abort: AtomicBool,
    first_failure: Mutex<Option<usize>>,
    trace: bool,
    log: Mutex<Log>,
}

#[derive(Default)]
struct Log {
    trace: Vec<TraceRecord>,
    spans: Vec<RoundSpan>,
    rounds: Vec<RegionRound>,
    messages: BTreeMap<Kind, (usize, usize)>,
    per_round: BTreeMap<usize, (usize, usize)>,
}

impl Hub {
    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    /// Record the first failing agent and stop the others.
    fn fail(&self, region: usize) {
        let mut first = self.first_failure.lock().unwrap_or_else(|e| e.into_inner());
        first.get_or_insert(region);
        self.abort.store(true, Ordering::SeqCst);
    }

    fn aborted(&self) -> bool {
        self.abort.load(Ordering::SeqCst)
    }

    fn log(&self) -> std::sync::MutexGuard<'_, Log> {
        self.log.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// The three-phase decentralized run over the given partition.
pub fn run_algorithm(inputs: &RunInputs, settings: &RunSettings) -> Result<RunReport, RuntimeError> {
    let n = inputs.part.num_regions();
    let problems = inputs.problems();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads.max(1))
        .build()
        .map_err(|e| RuntimeError::Setup(e.to_string()))?;
    let endpoints: Vec<Box<dyn transport::Endpoint>> = match settings.transport {
        TransportKind::InProc => transport::in_proc(n)
            .into_iter()
            .map(|e| Box::new(e) as Box<dyn transport::Endpoint>)
            .collect(),
        TransportKind::Socket => transport::sockets(n)
            .map_err(|e| RuntimeError::Setup(e.to_string()))?
            .into_iter()
            .map(|e| Box::new(e) as Box<dyn transport::Endpoint>)
            .collect(),
    };
    let hub = Hub {
        start: Instant::now(),
        abort: AtomicBool::new(false),
        first_failure: Mutex::new(None),
        trace: settings.trace,
        log: Mutex::new(Log::default()),
    };
    let results: Vec<Result<agent::AgentResult, RuntimeError>> = thread::scope(|s| {
        let handles: Vec<_> = problems
            .iter()
            .cloned()
            .zip(endpoints)
            .map(|(p, ep)| {
                let (hub, pool) = (&hub, &pool);
                s.spawn(move || agent::Agent::new(p, settings, pool, ep, hub).run())
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(r, h)| {
                h.join().unwrap_or_else(|_| {
                    hub.fail(r);
                    Err(RuntimeError::Protocol {
                        region: r,
                        message: "agent thread panicked".into(),
                    })
                })
            })
            .collect()
    });
    let wall = hub.elapsed();

    let first = *hub.first_failure.lock().unwrap_or_else(|e| e.into_inner());
    let mut agents = Vec::with_capacity(n);
    let mut errors: Vec<Option<RuntimeError>> = Vec::with_capacity(n);
    for res in results {
        match res {
            Ok(a) => {
                agents.push(a);
                errors.push(None);
            }
            Err(e) => errors.push(Some(e)),
        }
    }
    if let Some(e) = first.and_then(|r| errors[r].take()) {
        return Err(e);
    }
    if let Some(e) = errors.into_iter().flatten().next() {
        return Err(e);
    }
    Ok(assemble(
        inputs,
        &problems,
        agents,
        hub.log.into_inner().unwrap_or_else(|e| e.into_inner()),
        wall,
    ))
}

/// The three-phase run with the whole network as one region.
pub fn centralized_benchmark(inputs: &RunInputs, settings: &RunSettings) -> Result<RunReport, RuntimeError> {
    run_algorithm(&inputs.centralized(), settings)
}

fn assemble(
    inputs: &RunInputs,
    problems: &[RegionProblem],
    agents: Vec<agent::AgentResult>,
    mut log: Log,
    wall: Duration,
) -> RunReport {
    let case = &inputs.part.case;
    let ng = case.generators.len();
    let phases = [ModelMode::Fmrc, ModelMode::Fmbc, ModelMode::Bmbc]
        .into_iter()
        .enumerate()
        .map(|(i, mode)| {
            let mut parts = CostParts::default();
            let mut objective = 0.0;
            for a in &agents {
                parts.add(&a.phases[i].solution.parts);
                objective += a.phases[i].solution.objective();
            }
            PhaseReport {
                mode,
                rounds: agents.iter().map(|a| a.phases[i].rounds).max().unwrap_or(0),
                converged: agents.iter().all(|a| a.phases[i].converged),
                wall: agents.iter().map(|a| a.phases[i].wall).max().unwrap_or_default(),
                parts,
                objective,
            }
        })
        .collect();

    let steps = inputs.grid.steps();
    let mut schedule = Schedule {
        generator_ids: case.generators.iter().map(|g| g.id).collect(),
        x: vec![vec![0.0; steps]; ng],
        y: vec![vec![0.0; steps]; ng],
        z: vec![vec![0.0; inputs.grid.epochs]; ng],
        alpha: vec![0.0; ng],
    };
    let mut totals = CostParts::default();
    let mut balance = 0.0f64;
    let mut flows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut tie_mismatch = 0.0f64;
    for (a, p) in agents.iter().zip(problems) {
        let sol = &a.final_solution;
        totals.add(&sol.parts);
        balance = balance.max(balance_residual(p, sol));
        let (x, y, z) = (sol.x(), sol.y(), sol.z());
        for (local, &g) in p.region.generators.iter().enumerate() {
            schedule.x[g] = x[local].clone();
            schedule.y[g] = y[local].clone();
            schedule.z[g] = z[local].clone();
            schedule.alpha[g] = a.alpha[local];
        }
        let ties = sol.tie_flows();
        for (tie, f) in p.region.tie_lines.iter().zip(ties) {
            match flows.remove(&tie.line) {
                Some(other) => {
                    for (a, b) in f.iter().zip(&other) {
                        tie_mismatch = tie_mismatch.max((a + b).abs());
                    }
                }
                None => {
                    flows.insert(tie.line, f);
                }
            }
        }
    }

    let mut rounds: BTreeMap<usize, RoundMetrics> = BTreeMap::new();
    log.rounds.sort_by_key(|r| (r.round, r.region));
    for r in &log.rounds {
        let (messages, bytes) = log.per_round.get(&r.round).copied().unwrap_or((0, 0));
        let e = rounds.entry(r.round).or_insert(RoundMetrics {
            round: r.round,
            mode: r.mode,
            primal: 0.0,
            dual: 0.0,
            converged: r.global,
            gross: 0.0,
            exact: 0.0,
            inner_iterations: 0,
            messages,
            bytes,
        });
        e.primal = e.primal.max(r.primal);
        e.dual = e.dual.max(r.dual);
        e.gross += r.gross;
        e.exact += r.exact;
        e.inner_iterations = e.inner_iterations.max(r.inner_iterations);
    }
    log.trace
        .sort_by(|a, b| (a.round, a.sender, a.receiver, a.kind).cmp(&(b.round, b.sender, b.receiver, b.kind)));
    log.spans.sort_by_key(|s| (s.round, s.region));

    RunReport {
        regions: problems.len(),
        grid: inputs.grid,
        phases,
        upper_bound: agents.first().map_or(0.0, |a| a.upper_bound),
        totals,
        reverted: agents.first().is_some_and(|a| a.reverted),
        inner_cap_hits: agents.iter().map(|a| a.cap_hits).sum(),
        rounds: rounds.into_values().collect(),
        messages: log.messages,
        schedule,
        balance_residual: balance,
        tie_mismatch,
        trace: log.trace,
        spans: log.spans,
        wall,
    }
}
