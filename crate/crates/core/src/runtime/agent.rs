//! One region agent: its private problem, consensus state and multipliers.

use std::time::{Duration, Instant};

use gridmaint_milp::Basis;
use rayon::ThreadPool;

use super::subgradient::{cardinality_satisfied, repair, subgradient_step, SubgradientState};
use super::transport::{Endpoint, RecvError};
use super::wire::{decode, encode, frame, Kind, Payload, RoundMessage};
use super::{
    solve_epochs, Hub, RegionRound, RegionSolution, RoundSpan, RunSettings, RuntimeError, SolverSettings, StepBound,
    TraceRecord,
};
use crate::consensus::{local_violation, share_for, update_state, ConsensusState, LocalValues, NeighborShare};
use crate::degradation::argmin_epoch;
use crate::subproblem::{EpochInputs, ModelMode, RegionProblem, Relax};

const POLL: Duration = Duration::from_millis(50);

pub(super) struct PhaseOutcome {
    pub rounds: usize,
    pub converged: bool,
    pub wall: Duration,
    pub solution: RegionSolution,
}

pub(super) struct AgentResult {
    pub phases: Vec<PhaseOutcome>,
    pub final_solution: RegionSolution,
    pub upper_bound: f64,
    pub reverted: bool,
    pub cap_hits: usize,
    pub alpha: Vec<f64>,
}

pub(super) struct Agent<'a> {
    problem: RegionProblem,
    settings: &'a RunSettings,
    pool: &'a ThreadPool,
    endpoint: Box<dyn Endpoint>,
    hub: &'a Hub,
    state: ConsensusState<f64>,
    sg: SubgradientState<f64>,
    bases: Vec<Option<Basis>>,
    fixing: Vec<usize>,
    gamma: Vec<f64>,
    round: usize,
    pending: Vec<RoundMessage>,
    span_start: Duration,
}

impl<'a> Agent<'a> {
    pub fn new(
        problem: RegionProblem,
        settings: &'a RunSettings,
        pool: &'a ThreadPool,
        endpoint: Box<dyn Endpoint>,
        hub: &'a Hub,
    ) -> Self {
        let state = ConsensusState::initial(
            &problem.region,
            problem.grid.steps(),
            problem.total_demand(),
            settings.model.penalties,
        );
        let gamma = problem
            .region
            .tie_lines
            .iter()
            .map(|t| problem.lines[t.line].expect("tie line").2)
            .collect();
        let fixing = problem.curves.iter().map(|c| argmin_epoch(c)).collect();
        Self {
            sg: SubgradientState::new(problem.generators.len(), settings.inner_cap),
            bases: vec![None; problem.grid.epochs],
            state,
            fixing,
            gamma,
            problem,
            settings,
            pool,
            endpoint,
            hub,
            round: 0,
            pending: Vec::new(),
            span_start: Duration::ZERO,
        }
    }

    fn me(&self) -> usize {
        self.problem.index
    }

    pub fn run(mut self) -> Result<AgentResult, RuntimeError> {
        let res = self.run_phases();
        if res.is_err() {
            self.hub.fail(self.me());
        }
        res
    }

    fn run_phases(&mut self) -> Result<AgentResult, RuntimeError> {
        let fmrc = self.fixed_phase(ModelMode::Fmrc)?;
        let fmbc = self.fixed_phase(ModelMode::Fmbc)?;

        let own_upper = fmbc.solution.parts.gross() + fmbc.solution.parts.penalty_exact;
        let shares = self.share_bound(ModelMode::Fmbc, own_upper, fmbc.solution.parts.gross())?;
        let upper_bound: f64 = shares.iter().map(|s| s.0).sum();
        let fmbc_gross: f64 = shares.iter().map(|s| s.1).sum();
        self.sg.upper = match self.settings.step_bound {
            StepBound::Regional => own_upper,
            StepBound::Global => upper_bound,
        };

        let bmbc = self.subgradient_phase()?;
        let p = &bmbc.solution.parts;
        let shares = self.share_bound(ModelMode::Bmbc, p.gross() + p.penalty_exact, p.gross())?;
        let bmbc_gross: f64 = shares.iter().map(|s| s.1).sum();
        // Keep the FMBC incumbent when releasing maintenance did not pay off.
        let reverted = bmbc_gross > fmbc_gross;
        let final_solution = if reverted {
            fmbc.solution.clone()
        } else {
            bmbc.solution.clone()
        };
        Ok(AgentResult {
            phases: vec![fmrc, fmbc, bmbc],
            final_solution,
            upper_bound,
            reverted,
            cap_hits: self.sg.cap_hits,
            alpha: self.sg.alpha.clone(),
        })
    }

    fn solve(
        &mut self,
        mode: ModelMode,
        fixing: Option<&[usize]>,
        epochs: &[usize],
    ) -> Result<Vec<crate::subproblem::EpochSolution>, RuntimeError> {
        let inp = EpochInputs {
            consensus: &self.state,
            alpha: &self.sg.alpha,
            mode,
            fixing,
            options: &self.settings.model,
            relax: Relax::default(),
        };
        let solver = SolverSettings {
            tolerances: &self.settings.tolerances,
            limits: &self.settings.limits,
        };
        solve_epochs(&self.problem, &inp, solver, self.pool, &mut self.bases, epochs)
    }

    fn mt_opt(&mut self, mode: ModelMode, fixing: Option<&[usize]>) -> Result<RegionSolution, RuntimeError> {
        let all: Vec<usize> = (0..self.problem.grid.epochs).collect();
        Ok(RegionSolution::from_epochs(self.solve(mode, fixing, &all)?))
    }

    fn begin_round(&mut self) {
        self.round += 1;
        self.span_start = self.hub.elapsed();
    }

    /// DecentFixedOpt with α ≡ 0 and z fixed at each cost curve's minimum.
    fn fixed_phase(&mut self, mode: ModelMode) -> Result<PhaseOutcome, RuntimeError> {
        let start = Instant::now();
        let cap = self.settings.caps.for_mode(mode);
        let fixing = self.fixing.clone();
        let zero = vec![0.0; self.sg.alpha.len()];
        let saved = std::mem::replace(&mut self.sg.alpha, zero);
        let mut last = None;
        let mut converged = false;
        let mut rounds = 0;
        for k in 1..=cap {
            self.begin_round();
            let sol = self.mt_opt(mode, Some(&fixing))?;
            let omega = self.communicate(mode, k, &sol, 0)?;
            last = Some(sol);
            rounds = k;
            if omega {
                converged = true;
                break;
            }
        }
        self.sg.alpha = saved;
        Ok(PhaseOutcome {
            rounds,
            converged,
            wall: start.elapsed(),
            solution: last.expect("round caps are at least one"),
        })
    }

    /// DecentSGOpt: an inner subgradient loop on α inside every round.
    fn subgradient_phase(&mut self) -> Result<PhaseOutcome, RuntimeError> {
        let start = Instant::now();
        let mode = ModelMode::Bmbc;
        let cap = self.settings.caps.bmbc;
        let mut last = None;
        let mut converged = false;
        let mut rounds = 0;
        for k in 1..=cap {
            self.begin_round();
            let mut inner = 0;
            let sol = loop {
                let sol = self.mt_opt(mode, None)?;
                let sums = sol.z_sums();
                if cardinality_satisfied(&sums) {
                    break sol;
                }
                let moved = subgradient_step(&mut self.sg, sol.lagrangian_value(), &sums);
                inner += 1;
                if !moved || inner >= self.sg.cap {
                    self.sg.cap_hits += 1;
                    break self.repair(sol)?;
                }
            };
            let omega = self.communicate(mode, k, &sol, inner)?;
            last = Some(sol);
            rounds = k;
            if omega {
                converged = true;
                break;
            }
        }
        Ok(PhaseOutcome {
            rounds,
            converged,
            wall: start.elapsed(),
            solution: last.expect("round caps are at least one"),
        })
    }

    /// Force one maintenance epoch per generator and re-solve the epochs
    /// whose indicators changed with z fixed.
    fn repair(&mut self, mut sol: RegionSolution) -> Result<RegionSolution, RuntimeError> {
        let (fixing, touched) = repair(&sol.z(), &self.problem.curves);
        if touched.is_empty() {
            return Ok(sol);
        }
        let fresh = self.solve(ModelMode::Fmbc, Some(&fixing), &touched)?;
        for e in fresh {
            let m = e.epoch;
            sol.epochs[m] = e;
        }
        Ok(RegionSolution::from_epochs(sol.epochs))
    }

    /// Communicate: share θ with neighbors and violations with everyone,
    /// update Δ, then agree on Ω.
    fn communicate(
        &mut self,
        mode: ModelMode,
        phase_round: usize,
        sol: &RegionSolution,
        inner: usize,
    ) -> Result<bool, RuntimeError> {
        let me = self.me();
        let n = self.problem.num_regions;
        let region = self.problem.region.clone();
        let theta = sol.shared_theta(&region);
        let local = LocalValues {
            theta,
            flow: sol.tie_flows(),
            production: sol.production(),
        };
        let demand = self.problem.total_demand();
        let curtailed = sol.curtailment();
        let viol: Vec<f64> = (0..demand.len())
            .map(|t| {
                local_violation(
                    demand[t],
                    curtailed[t],
                    local.production[t],
                    self.settings.violation_mode,
                )
            })
            .collect();
        let others: Vec<usize> = (0..n).filter(|&r| r != me).collect();

        for &nb in &region.neighbors {
            let share = share_for(&region, me, nb, &local.theta, self.round);
            self.send(mode, nb, Payload::Theta(share.theta))?;
        }
        for &o in &others {
            self.send(mode, o, Payload::Violation(viol.clone()))?;
        }
        let shares: Vec<NeighborShare<f64>> = self
            .collect(Kind::ThetaShare, &region.neighbors)?
            .into_iter()
            .map(|m| match m.payload {
                Payload::Theta(theta) => NeighborShare {
                    sender: m.sender,
                    round: m.round,
                    theta,
                },
                _ => unreachable!("filtered by kind"),
            })
            .collect();
        let mut violations = vec![Vec::new(); n];
        for m in self.collect(Kind::ViolationShare, &others)? {
            if let Payload::Violation(v) = m.payload {
                violations[m.sender] = v;
            }
        }
        violations[me] = viol;

        let res = update_state(&mut self.state, &region, &self.gamma, &local, &shares, &violations)
            .map_err(|source| RuntimeError::Consensus { region: me, source })?;
        let eps = self.settings.epsilon;
        let flag = phase_round >= 2 && res.primal < eps && res.dual < eps;
        let end = self.hub.elapsed();

        for &o in &others {
            self.send(mode, o, Payload::Flag(flag))?;
        }
        let mut omega = flag;
        for m in self.collect(Kind::ConvFlag, &others)? {
            if let Payload::Flag(f) = m.payload {
                omega &= f;
            }
        }

        let mut log = self.hub.log();
        log.spans.push(RoundSpan {
            region: me,
            round: self.round,
            start: self.span_start,
            end,
        });
        log.rounds.push(RegionRound {
            round: self.round,
            mode,
            region: me,
            primal: res.primal,
            dual: res.dual,
            local: flag,
            global: omega,
            gross: sol.parts.gross(),
            exact: sol.parts.gross() + sol.parts.penalty_exact + sol.parts.dual,
            inner_iterations: inner,
        });
        Ok(omega)
    }

    /// UBOUND_SHARE all-to-all; returns (upper, gross) per region.
    fn share_bound(&mut self, mode: ModelMode, upper: f64, gross: f64) -> Result<Vec<(f64, f64)>, RuntimeError> {
        let me = self.me();
        let others: Vec<usize> = (0..self.problem.num_regions).filter(|&r| r != me).collect();
        for &o in &others {
            self.send(mode, o, Payload::Bound { upper, gross })?;
        }
        let mut out = vec![(0.0, 0.0); self.problem.num_regions];
        out[me] = (upper, gross);
        for m in self.collect(Kind::UboundShare, &others)? {
            if let Payload::Bound { upper, gross } = m.payload {
                out[m.sender] = (upper, gross);
            }
        }
        Ok(out)
    }

    fn send(&mut self, mode: ModelMode, to: usize, payload: Payload) -> Result<(), RuntimeError> {
        let msg = RoundMessage {
            round: self.round,
            phase: mode.name().to_string(),
            sender: self.me(),
            receiver: to,
            payload,
        };
        let record = encode(&msg);
        let bytes = frame(&record).len();
        {
            let mut log = self.hub.log();
            let e = log.messages.entry(msg.kind()).or_default();
            e.0 += 1;
            e.1 += bytes;
            let e = log.per_round.entry(self.round).or_default();
            e.0 += 1;
            e.1 += bytes;
            log.trace.push(TraceRecord {
                at: self.hub.elapsed(),
                round: msg.round,
                phase: msg.phase.clone(),
                sender: msg.sender,
                receiver: to,
                kind: msg.kind(),
                bytes,
                record: if self.hub.trace { record.clone() } else { String::new() },
            });
        }
        let aborted = self.hub.aborted();
        self.endpoint.send(to, &record).map_err(|e| {
            if aborted || self.hub.aborted() {
                RuntimeError::Aborted { region: self.me() }
            } else {
                RuntimeError::Transport {
                    region: self.me(),
                    message: format!("send to region {to}: {e}"),
                }
            }
        })
    }

    /// Wait for one `kind` record of the current round from each of `from`.
    fn collect(&mut self, kind: Kind, from: &[usize]) -> Result<Vec<RoundMessage>, RuntimeError> {
        let me = self.me();
        let mut got: Vec<Option<RoundMessage>> = vec![None; from.len()];
        let protocol = |message: String| RuntimeError::Protocol { region: me, message };
        let place = |m: RoundMessage, got: &mut Vec<Option<RoundMessage>>| -> Result<(), RuntimeError> {
            let slot = from
                .iter()
                .position(|&r| r == m.sender)
                .ok_or_else(|| protocol(format!("unexpected {} from region {}", kind.as_str(), m.sender)))?;
            if got[slot].is_some() {
                return Err(protocol(format!(
                    "duplicate {} from region {}",
                    kind.as_str(),
                    m.sender
                )));
            }
            got[slot] = Some(m);
            Ok(())
        };
        let round = self.round;
        let (now, later): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|m| m.round == round && m.kind() == kind);
        self.pending = later;
        for m in now {
            place(m, &mut got)?;
        }
        let deadline = Instant::now() + self.settings.timeout;
        while got.iter().any(Option::is_none) {
            if self.hub.aborted() {
                return Err(RuntimeError::Aborted { region: me });
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(RuntimeError::Timeout {
                    region: me,
                    round,
                    kind: kind.as_str(),
                    missing: from
                        .iter()
                        .zip(&got)
                        .filter(|(_, g)| g.is_none())
                        .map(|(&r, _)| r)
                        .collect(),
                });
            }
            match self.endpoint.recv_timeout(left.min(POLL)) {
                Ok(text) => {
                    let m = decode(&text).map_err(|e| protocol(e.to_string()))?;
                    if m.receiver != me {
                        return Err(protocol(format!("record addressed to region {}", m.receiver)));
                    }
                    if m.round < round {
                        return Err(protocol(format!(
                            "stale round {} record from region {}",
                            m.round, m.sender
                        )));
                    }
                    if m.round == round && m.kind() == kind {
                        place(m, &mut got)?;
                    } else {
                        self.pending.push(m);
                    }
                }
                Err(RecvError::Timeout) => {}
                Err(RecvError::Closed) => {
                    if self.hub.aborted() {
                        return Err(RuntimeError::Aborted { region: me });
                    }
                    return Err(RuntimeError::Transport {
                        region: me,
                        message: "inbox closed".into(),
                    });
                }
            }
        }
        Ok(got.into_iter().map(|m| m.expect("filled")).collect())
    }
}
