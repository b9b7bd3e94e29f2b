//! Dual multipliers of the cardinality constraint Σ_m z^g_m = 1.

use crate::Scalar;

/// α per local generator, the last step size, the upper bound and the
/// inner-loop counters.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientState<S> {
    pub alpha: Vec<S>,
    pub sigma: S,
    /// L_UB used in the step numerator.
    pub upper: S,
    pub iteration: usize,
    pub cap: usize,
    /// Inner loops that ended without cardinality and needed repair.
    pub cap_hits: usize,
}

impl<S: Scalar> SubgradientState<S> {
    pub fn new(generators: usize, cap: usize) -> Self {
        Self {
            alpha: vec![S::zero(); generators],
            sigma: S::zero(),
            upper: S::zero(),
            iteration: 0,
            cap,
            cap_hits: 0,
        }
    }
}

/// Σ_g (1 − Σ_m z^g_m)².
pub fn violation_norm<S: Scalar>(sums: &[S]) -> S {
    sums.iter().fold(S::zero(), |acc, &s| {
        let d = S::one() - s;
        acc + d * d
    })
}

pub fn cardinality_satisfied<S: Scalar>(sums: &[S]) -> bool {
    sums.iter().all(|&s| s == S::one())
}

/// σ = |L_UB − L^j| / Σ_g (1 − Σ_m z^g_m)². `None` when every generator
/// already satisfies its cardinality constraint.
pub fn step_size<S: Scalar>(upper: S, current: S, sums: &[S]) -> Option<S> {
    let denom = violation_norm(sums);
    if denom == S::zero() {
        None
    } else {
        Some((upper - current).abs() / denom)
    }
}

/// α_g ← α_g + σ (1 − Σ_m z^g_m). Returns whether any α moved.
pub fn subgradient_step<S: Scalar>(state: &mut SubgradientState<S>, current: S, sums: &[S]) -> bool {
    assert_eq!(sums.len(), state.alpha.len());
    let Some(sigma) = step_size(state.upper, current, sums) else {
        state.sigma = S::zero();
        return false;
    };
    state.sigma = sigma;
    state.iteration += 1;
    let mut moved = false;
    for (a, &s) in state.alpha.iter_mut().zip(sums) {
        let next = *a + sigma * (S::one() - s);
        moved |= next != *a;
        *a = next;
    }
    moved
}

/// Force exactly one maintenance epoch per generator. `z[g][m]` is the
/// current indicator matrix and `omega[g][m]` the cost curve. A generator
/// with no epoch gets its cheapest one, a generator with several keeps the
/// cheapest of those. Returns the chosen epoch per generator and the
/// epochs whose indicators changed.
pub fn repair<S: Scalar>(z: &[Vec<S>], omega: &[Vec<S>]) -> (Vec<usize>, Vec<usize>) {
    let mut fixing = Vec::with_capacity(z.len());
    let mut touched = Vec::new();
    for (row, cost) in z.iter().zip(omega) {
        let on: Vec<usize> = (0..row.len()).filter(|&m| row[m] > S::lit(0.5)).collect();
        let pool: Vec<usize> = if on.is_empty() { (0..row.len()).collect() } else { on };
        let mut best = pool[0];
        for &m in &pool[1..] {
            if cost[m] < cost[best] {
                best = m;
            }
        }
        for (m, &v) in row.iter().enumerate() {
            let want = if m == best { S::one() } else { S::zero() };
            if v != want && !touched.contains(&m) {
                touched.push(m);
            }
        }
        fixing.push(best);
    }
    touched.sort_unstable();
    (fixing, touched)
}
