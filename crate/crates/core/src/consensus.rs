//! Consensus algebra: intermediate angles and flows, multiplier updates,
//! production targets and the local convergence test.

use crate::case_model::Region;
use crate::Scalar;

/// θ̄ = (θ + Σ θ̃) / (|N| + 1).
pub fn intermediate_theta<S: Scalar>(local: S, neighbors: &[S]) -> S {
    let sum = neighbors.iter().fold(local, |a, &b| a + b);
    sum / S::lit((neighbors.len() + 1) as f64)
}

/// F̄ = [Γ(θ̃_u − θ̃_v) + Γ(θ_u − θ_v)] / 2.
pub fn intermediate_flow<S: Scalar>(gamma: S, local: (S, S), neighbor: (S, S)) -> S {
    (gamma * (neighbor.0 - neighbor.1) + gamma * (local.0 - local.1)) * S::lit(0.5)
}

/// Shared form of the λ and φ ascent steps: m + ρ (v − v̄).
pub fn update_multiplier<S: Scalar>(multiplier: S, value: S, consensus: S, rho: S) -> S {
    multiplier + rho * (value - consensus)
}

pub fn update_lambda<S: Scalar>(lambda: S, theta: S, theta_bar: S, rho_theta: S) -> S {
    update_multiplier(lambda, theta, theta_bar, rho_theta)
}

pub fn update_phi<S: Scalar>(phi: S, flow: S, flow_bar: S, rho_flow: S) -> S {
    update_multiplier(phi, flow, flow_bar, rho_flow)
}

/// η′ = η + ρ_p (p − p̄).
pub fn update_eta<S: Scalar>(eta: S, p: S, p_bar: S, rho_p: S) -> S {
    update_multiplier(eta, p, p_bar, rho_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ViolationMode {
    /// |Σ(δ − ψ) − Σ y|
    Absolute,
    /// Σ(δ − ψ) − Σ y, which sums to zero over regions once flows agree.
    #[default]
    Signed,
}

/// Regional demand violation for one step.
pub fn local_violation<S: Scalar>(demand: S, curtailment: S, production: S, mode: ViolationMode) -> S {
    let v = demand - curtailment - production;
    match mode {
        ViolationMode::Absolute => v.abs(),
        ViolationMode::Signed => v,
    }
}

/// p̄ = Σ y + (Σ_r φ_r) / |R|, with `violations` covering every region.
pub fn production_target<S: Scalar>(production: S, violations: &[S]) -> S {
    assert!(
        !violations.is_empty(),
        "violation shares from every region are required"
    );
    let sum = violations.iter().fold(S::zero(), |a, &b| a + b);
    production + sum / S::lit(violations.len() as f64)
}

/// Max-norm residuals (‖f − f̄‖, ‖f̄ − f̄_prev‖) over all entries.
pub fn flow_residuals<S: Scalar>(flow: &[S], flow_bar: &[S], flow_bar_prev: &[S]) -> (S, S) {
    assert_eq!(flow.len(), flow_bar.len());
    assert_eq!(flow.len(), flow_bar_prev.len());
    let primal = flow
        .iter()
        .zip(flow_bar)
        .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let dual = flow_bar
        .iter()
        .zip(flow_bar_prev)
        .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    (primal, dual)
}

pub fn check_local_convergence<S: Scalar>(flow: &[S], flow_bar: &[S], flow_bar_prev: &[S], eps: S) -> bool {
    let (p, d) = flow_residuals(flow, flow_bar, flow_bar_prev);
    p < eps && d < eps
}

/// Ω: true only when every local flag is set.
pub fn global_convergence(flags: &[bool]) -> bool {
    flags.iter().all(|&f| f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties<S> {
    pub rho_theta: S,
    pub rho_flow: S,
    pub rho_production: S,
}

impl<S: Scalar> Default for Penalties<S> {
    fn default() -> Self {
        Self {
            rho_theta: S::lit(200.0),
            rho_flow: S::one(),
            rho_production: S::one(),
        }
    }
}

/// Δ for one region over the full step grid. Rows follow the region's
/// `shared` and `tie_lines` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusState<S> {
    pub theta_bar: Vec<Vec<S>>,
    pub lambda: Vec<Vec<S>>,
    pub flow_bar: Vec<Vec<S>>,
    pub phi: Vec<Vec<S>>,
    pub production_target: Vec<S>,
    pub eta: Vec<S>,
    pub penalties: Penalties<S>,
    pub round: usize,
}

impl<S: Scalar> ConsensusState<S> {
    /// Zero angles, flows and multipliers; the production target starts at
    /// `production_target` (normally the region's own demand).
    pub fn initial(region: &Region, steps: usize, production_target: Vec<S>, penalties: Penalties<S>) -> Self {
        assert_eq!(production_target.len(), steps);
        let zeros = |n: usize| vec![vec![S::zero(); steps]; n];
        Self {
            theta_bar: zeros(region.shared.len()),
            lambda: zeros(region.shared.len()),
            flow_bar: zeros(region.tie_lines.len()),
            phi: zeros(region.tie_lines.len()),
            production_target,
            eta: vec![S::zero(); steps],
            penalties,
            round: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        let rows = self
            .theta_bar
            .iter()
            .chain(&self.lambda)
            .chain(&self.flow_bar)
            .chain(&self.phi);
        rows.flatten()
            .chain(&self.production_target)
            .chain(&self.eta)
            .all(|v| v.is_finite())
    }
}

/// The region's own round-k values that feed Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalValues<S> {
    /// θ for each shared bus, [shared][t].
    pub theta: Vec<Vec<S>>,
    /// Local tie-line flows oriented local → remote, [tie][t].
    pub flow: Vec<Vec<S>>,
    /// p = Σ y, [t].
    pub production: Vec<S>,
}

/// θ estimates received from one neighbor, keyed by bus index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborShare<S> {
    pub sender: usize,
    pub round: usize,
    pub theta: Vec<(usize, Vec<S>)>,
}

impl<S: Scalar> NeighborShare<S> {
    pub fn estimate(&self, bus: usize) -> Option<&[S]> {
        self.theta.iter().find(|(b, _)| *b == bus).map(|(_, v)| v.as_slice())
    }
}

/// θ values `sender` owes `receiver`: each shared bus whose N^b includes the receiver.
pub fn share_for<S: Scalar>(
    region: &Region,
    sender: usize,
    receiver: usize,
    theta: &[Vec<S>],
    round: usize,
) -> NeighborShare<S> {
    let theta = region
        .shared
        .iter()
        .zip(theta)
        .filter(|(s, _)| s.neighbors.contains(&receiver))
        .map(|(s, v)| (s.bus, v.clone()))
        .collect();
    NeighborShare { sender, round, theta }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundResiduals<S> {
    pub primal: S,
    pub dual: S,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConsensusError {
    #[error("missing θ estimate of bus {bus} from region {region}")]
    MissingEstimate { bus: usize, region: usize },
    #[error("expected violation shares from {expected} regions, got {got}")]
    MissingViolation { expected: usize, got: usize },
}

/// Recompute Δ from local values and neighbor shares, then step the
/// multipliers. `gamma[i]` is the susceptance of tie line `i`;
/// `violations[r][t]` holds every region's share. Returns the flow
/// residuals against the previous F̄.
pub fn update_state<S: Scalar>(
    state: &mut ConsensusState<S>,
    region: &Region,
    gamma: &[S],
    local: &LocalValues<S>,
    shares: &[NeighborShare<S>],
    violations: &[Vec<S>],
) -> Result<RoundResiduals<S>, ConsensusError> {
    let steps = local.production.len();
    let find = |bus: usize, from: usize| -> Result<&[S], ConsensusError> {
        shares
            .iter()
            .find(|s| s.sender == from)
            .and_then(|s| s.estimate(bus))
            .ok_or(ConsensusError::MissingEstimate { bus, region: from })
    };
    if violations.is_empty() {
        return Err(ConsensusError::MissingViolation { expected: 1, got: 0 });
    }

    let mut theta_bar = Vec::with_capacity(region.shared.len());
    for (i, sb) in region.shared.iter().enumerate() {
        let mut row = Vec::with_capacity(steps);
        let ests = sb
            .neighbors
            .iter()
            .map(|&r| find(sb.bus, r))
            .collect::<Result<Vec<_>, _>>()?;
        let mut buf = Vec::with_capacity(ests.len());
        for t in 0..steps {
            buf.clear();
            buf.extend(ests.iter().map(|e| e[t]));
            row.push(intermediate_theta(local.theta[i][t], &buf));
        }
        theta_bar.push(row);
    }

    let mut flow_bar = Vec::with_capacity(region.tie_lines.len());
    for (i, tie) in region.tie_lines.iter().enumerate() {
        let pu = region.shared_position(tie.local).expect("boundary bus is shared");
        let pv = region.shared_position(tie.remote).expect("foreign bus is shared");
        let nu = find(tie.local, tie.remote_region)?;
        let nv = find(tie.remote, tie.remote_region)?;
        flow_bar.push(
            (0..steps)
                .map(|t| intermediate_flow(gamma[i], (local.theta[pu][t], local.theta[pv][t]), (nu[t], nv[t])))
                .collect::<Vec<S>>(),
        );
    }

    let flat = |m: &Vec<Vec<S>>| m.iter().flatten().copied().collect::<Vec<S>>();
    let (primal, dual) = flow_residuals(&flat(&local.flow), &flat(&flow_bar), &flat(&state.flow_bar));

    let pen = state.penalties;
    let mut vbuf = Vec::with_capacity(violations.len());
    for t in 0..steps {
        vbuf.clear();
        vbuf.extend(violations.iter().map(|v| v[t]));
        state.production_target[t] = production_target(local.production[t], &vbuf);
        state.eta[t] = update_eta(
            state.eta[t],
            local.production[t],
            state.production_target[t],
            pen.rho_production,
        );
    }
    for (i, row) in theta_bar.iter().enumerate() {
        for t in 0..steps {
            state.lambda[i][t] = update_lambda(state.lambda[i][t], local.theta[i][t], row[t], pen.rho_theta);
        }
    }
    for (i, row) in flow_bar.iter().enumerate() {
        for t in 0..steps {
            state.phi[i][t] = update_phi(state.phi[i][t], local.flow[i][t], row[t], pen.rho_flow);
        }
    }
    state.theta_bar = theta_bar;
    state.flow_bar = flow_bar;
    state.round += 1;
    Ok(RoundResiduals { primal, dual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_means() {
        assert!((intermediate_theta(0.5f64, &[0.3]) - 0.4).abs() < 1e-15);
        assert!((intermediate_theta(0.2f64, &[0.2, 0.2]) - 0.2).abs() < 1e-15);
        assert!((intermediate_theta(1.0f64, &[0.0, 0.5, 0.1]) - 0.4).abs() < 1e-15);
        assert_eq!(intermediate_theta(0.7, &[]), 0.7);
    }

    #[test]
    fn flow_means() {
        assert!((intermediate_flow(10.0f64, (0.10, 0.0), (0.08, 0.0)) - 0.9).abs() < 1e-12);
        assert!((intermediate_flow(4.0f64, (0.3, 0.1), (0.3, 0.1)) - 0.8).abs() < 1e-15);
        assert_eq!(intermediate_flow(1.0, (1.0, 0.0), (0.0, 1.0)), 0.0);
    }

    #[test]
    fn multiplier_steps() {
        assert!((update_lambda(0.0f64, 0.4, 0.3, 2.0) - 0.2).abs() < 1e-15);
        assert_eq!(update_lambda(1.5, 0.3, 0.3, 2.0), 1.5);
        assert_eq!(update_phi(1.0, 2.0, 4.0, 0.5), 0.0);
        assert_eq!(update_eta(0.0, 13.0, 13.0, 1.0), 0.0);
        assert_eq!(update_eta(1.0, 5.0, 4.0, 2.0), 3.0);
        assert_eq!(update_eta(1.0, 5.0, 4.0, 0.0), 1.0);
    }

    #[test]
    fn violations_and_targets() {
        let a = ViolationMode::Absolute;
        assert_eq!(local_violation(10.0, 0.0, 10.0, a), 0.0);
        assert_eq!(local_violation(10.0, 2.0, 5.0, a), 3.0);
        assert_eq!(local_violation(0.0, 0.0, 4.0, a), 4.0);
        assert_eq!(local_violation(0.0, 0.0, 4.0, ViolationMode::Signed), -4.0);
        assert_eq!(production_target(10.0, &[4.0, 2.0]), 13.0);
        assert_eq!(production_target(10.0, &[0.0, 0.0]), 10.0);
        assert_eq!(production_target(10.0, &[6.0]), 16.0);
    }

    #[test]
    fn convergence_checks() {
        let f = [1.0, 2.0];
        assert!(check_local_convergence(&f, &f, &f, 1e-9));
        assert!(!check_local_convergence(&[1.1], &[1.0], &[1.0], 0.05));
        assert!(!check_local_convergence(&[1.0], &[1.0], &[0.8], 0.1));
        assert!(check_local_convergence::<f64>(&[], &[], &[], 1e-2));
        assert!(global_convergence(&[true, true]));
        assert!(!global_convergence(&[true, false]));
    }
}
