//! Bounded revised primal simplex.
//!
//! Rows are turned into equalities `a·x - s = 0` with one logical column `s`
//! per row carrying the row bounds, so every model starts from the all-logical
//! basis `B = -I`. Phase 1 minimizes the sum of basic bound violations with
//! costs recomputed each iteration; phase 2 runs on the true costs. The basis
//! inverse is kept dense and explicit, updated by rank-one pivots and rebuilt
//! from scratch every `refactor_interval` pivots.

use crate::model::{LinearModel, ObjectiveSense, Sense};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column sitting at zero.
    Free,
}

/// Basis snapshot: `head[i]` is the column basic in row `i`; `status` covers
/// structural columns followed by one logical per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub head: Vec<usize>,
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<S> {
    pub feasibility: S,
    pub optimality: S,
    pub integrality: S,
    pub pivot: S,
    pub max_iterations: usize,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_threshold: usize,
}

impl<S: Scalar> Default for Tolerances<S> {
    fn default() -> Self {
        let single = S::epsilon() > S::lit(1e-10);
        let (feas, piv) = if single { (1e-4, 1e-5) } else { (1e-7, 1e-9) };
        Self {
            feasibility: S::lit(feas),
            optimality: S::lit(feas),
            integrality: S::lit(if single { 1e-4 } else { 1e-6 }),
            pivot: S::lit(piv),
            max_iterations: 200_000,
            refactor_interval: 64,
            degeneracy_threshold: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    pub status: SolveStatus,
    /// Objective in the model's own sense, offset included.
    pub objective: S,
    /// Structural column values.
    pub values: Vec<S>,
    pub nodes: usize,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

impl<S: Scalar> SolveResult<S> {
    pub(crate) fn without_solution(status: SolveStatus, iterations: usize) -> Self {
        Self {
            status,
            objective: S::nan(),
            values: Vec::new(),
            nodes: 0,
            iterations,
            basis: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve the LP relaxation of `model` (integrality marks are ignored).
pub fn solve_lp<S: Scalar>(model: &LinearModel<S>, tol: &Tolerances<S>) -> SolveResult<S> {
    let bounds: Vec<(S, S)> = model.columns.iter().map(|c| (c.lower, c.upper)).collect();
    solve_lp_warm(model, tol, &bounds, None)
}

/// Solve with overridden column bounds, optionally starting from `warm`.
pub fn solve_lp_warm<S: Scalar>(
    model: &LinearModel<S>,
    tol: &Tolerances<S>,
    bounds: &[(S, S)],
    warm: Option<&Basis>,
) -> SolveResult<S> {
    assert_eq!(bounds.len(), model.num_columns());
    if bounds.iter().any(|&(l, u)| l > u + tol.feasibility) {
        return SolveResult::without_solution(SolveStatus::Infeasible, 0);
    }
    let mut lp = Simplex::new(model, tol, bounds);
    if let Some(b) = warm {
        lp.load_basis(b);
    }
    let status = lp.run();
    if status != SolveStatus::Optimal {
        return SolveResult {
            basis: Some(lp.basis()),
            ..SolveResult::without_solution(status, lp.iterations)
        };
    }
    let values = lp.x[..lp.n].to_vec();
    let raw: S = model.columns.iter().zip(&values).map(|(c, &v)| c.cost * v).sum();
    SolveResult {
        status,
        objective: raw + model.objective_offset,
        values,
        nodes: 0,
        iterations: lp.iterations,
        basis: Some(lp.basis()),
    }
}

enum Step<S> {
    Flip(S),
    Pivot { row: usize, t: S, to_upper: bool },
    Unbounded,
}

struct Simplex<'a, S> {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<S>,
    lo: Vec<S>,
    up: Vec<S>,
    cost: Vec<S>,
    x: Vec<S>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    binv: Vec<S>,
    tol: &'a Tolerances<S>,
    iterations: usize,
    since_refactor: usize,
    // scratch
    y: Vec<S>,
    alpha: Vec<S>,
    phase_cost: Vec<S>,
}

impl<'a, S: Scalar> Simplex<'a, S> {
    fn new(model: &LinearModel<S>, tol: &'a Tolerances<S>, bounds: &[(S, S)]) -> Self {
        let n = model.num_columns();
        let m = model.num_rows();
        let mut counts = vec![0usize; n + 1];
        for row in &model.rows {
            for &(j, a) in &row.coeffs {
                if a != S::zero() {
                    counts[j + 1] += 1;
                }
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut row_idx = vec![0usize; nnz];
        let mut vals = vec![S::zero(); nnz];
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != S::zero() {
                    row_idx[fill[j]] = i;
                    vals[fill[j]] = a;
                    fill[j] += 1;
                }
            }
        }
        let flip = model.sense == ObjectiveSense::Maximize;
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for (c, &(l, u)) in model.columns.iter().zip(bounds) {
            lo.push(l);
            up.push(u.max(l));
            cost.push(if flip { -c.cost } else { c.cost });
        }
        for row in &model.rows {
            let (l, u) = match row.sense {
                Sense::Le => (S::neg_infinity(), row.rhs),
                Sense::Ge => (row.rhs, S::infinity()),
                Sense::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            up.push(u);
            cost.push(S::zero());
        }
        let mut status = Vec::with_capacity(n + m);
        let mut x = Vec::with_capacity(n + m);
        for j in 0..n {
            let (st, v) = Self::default_nonbasic(lo[j], up[j]);
            status.push(st);
            x.push(v);
        }
        for _ in 0..m {
            status.push(VarStatus::Basic);
            x.push(S::zero());
        }
        let head: Vec<usize> = (n..n + m).collect();
        let mut lp = Self {
            n,
            m,
            col_start,
            row_idx,
            vals,
            lo,
            up,
            cost,
            x,
            status,
            head,
            binv: Vec::new(),
            tol,
            iterations: 0,
            since_refactor: 0,
            y: vec![S::zero(); m],
            alpha: vec![S::zero(); m],
            phase_cost: vec![S::zero(); m],
        };
        lp.refactor();
        lp
    }

    fn default_nonbasic(lo: S, up: S) -> (VarStatus, S) {
        if lo.is_finite() {
            (VarStatus::AtLower, lo)
        } else if up.is_finite() {
            (VarStatus::AtUpper, up)
        } else {
            (VarStatus::Free, S::zero())
        }
    }

    fn nonbasic_value(&self, j: usize, st: VarStatus) -> (VarStatus, S) {
        match st {
            VarStatus::AtLower if self.lo[j].is_finite() => (st, self.lo[j]),
            VarStatus::AtUpper if self.up[j].is_finite() => (st, self.up[j]),
            _ => Self::default_nonbasic(self.lo[j], self.up[j]),
        }
    }

    fn load_basis(&mut self, b: &Basis) {
        if b.head.len() != self.m || b.status.len() != self.n + self.m {
            return;
        }
        self.head = b.head.clone();
        for j in 0..self.n + self.m {
            if b.status[j] == VarStatus::Basic {
                self.status[j] = VarStatus::Basic;
            } else {
                let (st, v) = self.nonbasic_value(j, b.status[j]);
                self.status[j] = st;
                self.x[j] = v;
            }
        }
        self.refactor();
    }

    fn basis(&self) -> Basis {
        Basis {
            head: self.head.clone(),
            status: self.status.clone(),
        }
    }

    /// Rebuild the explicit inverse from the current head; dependent columns
    /// are swapped out for logicals of uncovered rows.
    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            self.binv.clear();
            return;
        }
        loop {
            let mut work = vec![S::zero(); m * m];
            let mut inv = vec![S::zero(); m * m];
            for i in 0..m {
                inv[i * m + i] = S::one();
            }
            for (k, &j) in self.head.iter().enumerate() {
                if j < self.n {
                    for p in self.col_start[j]..self.col_start[j + 1] {
                        work[self.row_idx[p] * m + k] = self.vals[p];
                    }
                } else {
                    work[(j - self.n) * m + k] = -S::one();
                }
            }
            let mut row_used = vec![false; m];
            let mut pivot_row = vec![usize::MAX; m];
            // Logical columns first: they pivot without fill.
            let mut order: Vec<usize> = (0..m).filter(|&k| self.head[k] >= self.n).collect();
            order.extend((0..m).filter(|&k| self.head[k] < self.n));
            let eps = self.tol.pivot;
            for &k in &order {
                let mut best = usize::MAX;
                let mut best_abs = S::zero();
                for i in 0..m {
                    if !row_used[i] {
                        let a = work[i * m + k].abs();
                        if a > best_abs {
                            best_abs = a;
                            best = i;
                        }
                    }
                }
                if best == usize::MAX || best_abs <= eps {
                    continue;
                }
                row_used[best] = true;
                pivot_row[k] = best;
                let piv = work[best * m + k];
                let inv_piv = S::one() / piv;
                for c in 0..m {
                    work[best * m + c] *= inv_piv;
                    inv[best * m + c] *= inv_piv;
                }
                for i in 0..m {
                    if i == best {
                        continue;
                    }
                    let f = work[i * m + k];
                    if f == S::zero() {
                        continue;
                    }
                    let (wa, wb) = split_rows(&mut work, i, best, m);
                    for c in 0..m {
                        if wb[c] != S::zero() {
                            wa[c] -= f * wb[c];
                        }
                    }
                    let (ia, ib) = split_rows(&mut inv, i, best, m);
                    for c in 0..m {
                        if ib[c] != S::zero() {
                            ia[c] -= f * ib[c];
                        }
                    }
                }
            }
            let failed: Vec<usize> = (0..m).filter(|&k| pivot_row[k] == usize::MAX).collect();
            if failed.is_empty() {
                let mut binv = vec![S::zero(); m * m];
                for k in 0..m {
                    let r = pivot_row[k];
                    binv[k * m..(k + 1) * m].copy_from_slice(&inv[r * m..(r + 1) * m]);
                }
                self.binv = binv;
                break;
            }
            let free_rows: Vec<usize> = (0..m).filter(|&i| !row_used[i]).collect();
            for (&k, &r) in failed.iter().zip(&free_rows) {
                let old = self.head[k];
                let (st, v) = self.nonbasic_value(old, VarStatus::AtLower);
                self.status[old] = st;
                self.x[old] = v;
                let logical = self.n + r;
                self.status[logical] = VarStatus::Basic;
                self.head[k] = logical;
            }
        }
        self.recompute_basics();
    }

    /// x_B = -B^{-1} N x_N, from `[A -I] x = 0`.
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![S::zero(); m];
        for j in 0..self.n {
            if self.status[j] != VarStatus::Basic && self.x[j] != S::zero() {
                let v = self.x[j];
                for p in self.col_start[j]..self.col_start[j + 1] {
                    rhs[self.row_idx[p]] -= self.vals[p] * v;
                }
            }
        }
        for i in 0..m {
            let j = self.n + i;
            if self.status[j] != VarStatus::Basic {
                rhs[i] += self.x[j];
            }
        }
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            let v: S = row.iter().zip(&rhs).map(|(&a, &b)| a * b).sum();
            self.x[self.head[k]] = v;
        }
    }

    fn infeasibility(&self, j: usize) -> S {
        let v = self.x[j];
        if v < self.lo[j] - self.tol.feasibility {
            self.lo[j] - v
        } else if v > self.up[j] + self.tol.feasibility {
            v - self.up[j]
        } else {
            S::zero()
        }
    }

    /// Fill phase costs of basics; returns true when phase 1 is needed.
    fn set_phase_costs(&mut self) -> bool {
        let phase1 = self.head[..self.m].iter().any(|&j| {
            let v = self.x[j];
            v < self.lo[j] - self.tol.feasibility || v > self.up[j] + self.tol.feasibility
        });
        for k in 0..self.m {
            let j = self.head[k];
            self.phase_cost[k] = if phase1 {
                let v = self.x[j];
                if v < self.lo[j] - self.tol.feasibility {
                    -S::one()
                } else if v > self.up[j] + self.tol.feasibility {
                    S::one()
                } else {
                    S::zero()
                }
            } else {
                self.cost[j]
            };
        }
        phase1
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        for v in self.y.iter_mut() {
            *v = S::zero();
        }
        for k in 0..m {
            let c = self.phase_cost[k];
            if c == S::zero() {
                continue;
            }
            let row = &self.binv[k * m..(k + 1) * m];
            for (yi, &b) in self.y.iter_mut().zip(row) {
                *yi += c * b;
            }
        }
    }

    fn reduced_cost(&self, j: usize, phase1: bool) -> S {
        let c = if phase1 { S::zero() } else { self.cost[j] };
        if j < self.n {
            let mut d = c;
            for p in self.col_start[j]..self.col_start[j + 1] {
                d -= self.y[self.row_idx[p]] * self.vals[p];
            }
            d
        } else {
            c + self.y[j - self.n]
        }
    }

    /// Pick the entering column and its direction (+1 increase, -1 decrease).
    fn price(&self, phase1: bool, bland: bool) -> Option<(usize, S)> {
        let opt = self.tol.optimality;
        let mut best: Option<(usize, S)> = None;
        let mut best_score = S::zero();
        for j in 0..self.n + self.m {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.reduced_cost(j, phase1);
            let dir = match st {
                VarStatus::AtLower if d < -opt => S::one(),
                VarStatus::AtUpper if d > opt => -S::one(),
                VarStatus::Free if d.abs() > opt => {
                    if d < S::zero() {
                        S::one()
                    } else {
                        -S::one()
                    }
                }
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn compute_alpha(&mut self, q: usize) {
        let m = self.m;
        if q < self.n {
            let (s, e) = (self.col_start[q], self.col_start[q + 1]);
            for k in 0..m {
                let row = &self.binv[k * m..(k + 1) * m];
                let mut v = S::zero();
                for p in s..e {
                    v += row[self.row_idx[p]] * self.vals[p];
                }
                self.alpha[k] = v;
            }
        } else {
            let i = q - self.n;
            for k in 0..m {
                self.alpha[k] = -self.binv[k * m + i];
            }
        }
    }

    fn ratio_test(&self, q: usize, dir: S, phase1: bool, bland: bool) -> Step<S> {
        let tol = self.tol;
        let mut best_t = S::infinity();
        let mut best: Option<(usize, bool)> = None;
        let mut best_piv = S::zero();
        let span = self.up[q] - self.lo[q];
        for k in 0..self.m {
            let a = self.alpha[k];
            if a.abs() <= tol.pivot {
                continue;
            }
            let j = self.head[k];
            let rate = -dir * a;
            let v = self.x[j];
            let (lo, up) = (self.lo[j], self.up[j]);
            let below = v < lo - tol.feasibility;
            let above = v > up + tol.feasibility;
            let cand = if rate > S::zero() {
                if phase1 && below {
                    Some(((lo - v) / rate, false))
                } else if phase1 && above {
                    None
                } else if up.is_finite() {
                    Some((((up - v) / rate).max(S::zero()), true))
                } else {
                    None
                }
            } else if phase1 && above {
                Some(((up - v) / rate, true))
            } else if phase1 && below {
                None
            } else if lo.is_finite() {
                Some((((lo - v) / rate).max(S::zero()), false))
            } else {
                None
            };
            if let Some((t, to_upper)) = cand {
                let better = match best {
                    None => true,
                    Some((bk, _)) => {
                        let tie = S::lit(1e-12) * (S::one() + best_t.abs());
                        if t < best_t - tie {
                            true
                        } else if t <= best_t + tie {
                            if bland {
                                self.head[k] < self.head[bk]
                            } else {
                                a.abs() > best_piv
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best_t = t;
                    best = Some((k, to_upper));
                    best_piv = a.abs();
                }
            }
        }
        if span.is_finite() && (best.is_none() || span <= best_t) {
            return Step::Flip(span);
        }
        match best {
            Some((row, to_upper)) => Step::Pivot {
                row,
                t: best_t,
                to_upper,
            },
            None => Step::Unbounded,
        }
    }

    fn pivot(&mut self, r: usize) {
        let m = self.m;
        let piv = self.alpha[r];
        let inv = S::one() / piv;
        for c in 0..m {
            self.binv[r * m + c] *= inv;
        }
        for k in 0..m {
            if k == r {
                continue;
            }
            let f = self.alpha[k];
            if f == S::zero() {
                continue;
            }
            let (a, b) = split_rows(&mut self.binv, k, r, m);
            for c in 0..m {
                a[c] -= f * b[c];
            }
        }
    }

    fn run(&mut self) -> SolveStatus {
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut verify_passes = 0;
        loop {
            if self.iterations >= self.tol.max_iterations {
                return SolveStatus::IterationLimit;
            }
            if self.since_refactor >= self.tol.refactor_interval {
                self.refactor();
            }
            let phase1 = self.set_phase_costs();
            self.compute_duals();
            let Some((q, dir)) = self.price(phase1, bland) else {
                if self.since_refactor > 0 && verify_passes < 3 {
                    // Confirm on a fresh factorization before declaring a result.
                    verify_passes += 1;
                    self.refactor();
                    continue;
                }
                if phase1 {
                    let total: S = self.head.iter().map(|&j| self.infeasibility(j)).sum();
                    if total > self.tol.feasibility {
                        return SolveStatus::Infeasible;
                    }
                }
                return SolveStatus::Optimal;
            };
            self.compute_alpha(q);
            let step = self.ratio_test(q, dir, phase1, bland);
            self.iterations += 1;
            let t = match step {
                Step::Unbounded => {
                    if phase1 {
                        // Numerical trouble; refactor and retry.
                        self.refactor();
                        if verify_passes > 5 {
                            return SolveStatus::Infeasible;
                        }
                        verify_passes += 1;
                        continue;
                    }
                    return SolveStatus::Unbounded;
                }
                Step::Flip(span) => {
                    self.shift(q, dir, span);
                    self.status[q] = if dir > S::zero() {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[q] = if dir > S::zero() { self.up[q] } else { self.lo[q] };
                    span
                }
                Step::Pivot { row, t, to_upper } => {
                    self.shift(q, dir, t);
                    let leaving = self.head[row];
                    if to_upper {
                        self.status[leaving] = VarStatus::AtUpper;
                        self.x[leaving] = self.up[leaving];
                    } else {
                        self.status[leaving] = VarStatus::AtLower;
                        self.x[leaving] = self.lo[leaving];
                    }
                    self.status[q] = VarStatus::Basic;
                    self.head[row] = q;
                    self.pivot(row);
                    self.since_refactor += 1;
                    t
                }
            };
            if t <= self.tol.feasibility * S::lit(1e-3) {
                degenerate += 1;
                if degenerate > self.tol.degeneracy_threshold {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    fn shift(&mut self, q: usize, dir: S, t: S) {
        if t == S::zero() {
            return;
        }
        self.x[q] += dir * t;
        for k in 0..self.m {
            let a = self.alpha[k];
            if a != S::zero() {
                let j = self.head[k];
                self.x[j] -= dir * t * a;
            }
        }
    }
}

/// Mutable row `a` and shared row `b` (a != b) of a row-major m×m buffer.
fn split_rows<S>(buf: &mut [S], a: usize, b: usize, m: usize) -> (&mut [S], &[S]) {
    if a < b {
        let (lo, hi) = buf.split_at_mut(b * m);
        (&mut lo[a * m..(a + 1) * m], &hi[..m])
    } else {
        let (lo, hi) = buf.split_at_mut(a * m);
        (&mut hi[..m], &lo[b * m..(b + 1) * m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    #[test]
    fn single_bounded_column() {
        // min x s.t. x >= 1, x <= 10
        let mut m = LinearModel::<f64>::new();
        let x = m.add_column("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        m.add_row("lo", vec![(x, 1.0)], Sense::Ge, 1.0);
        m.add_row("hi", vec![(x, 1.0)], Sense::Le, 10.0);
        let r = solve_lp(&m, &tol());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_column_simplex_corner() {
        let mut m = LinearModel::<f64>::new();
        let x = m.add_column("x", 0.0, 1.0, -1.0);
        let y = m.add_column("y", 0.0, 1.0, -1.0);
        m.add_row("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let r = solve_lp(&m, &tol());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut m = LinearModel::<f64>::new();
        let x = m.add_column("x", 0.0, f64::INFINITY, 1.0);
        m.add_row("a", vec![(x, 1.0)], Sense::Le, -1.0);
        assert_eq!(solve_lp(&m, &tol()).status, SolveStatus::Infeasible);

        let mut m = LinearModel::<f64>::new();
        let x = m.add_column("x", 0.0, f64::INFINITY, -1.0);
        m.add_row("a", vec![(x, 1.0)], Sense::Ge, 1.0);
        assert_eq!(solve_lp(&m, &tol()).status, SolveStatus::Unbounded);
    }

    #[test]
    fn maximize_and_offset() {
        let mut m = LinearModel::<f64>::new();
        m.sense = ObjectiveSense::Maximize;
        m.objective_offset = 2.0;
        let x = m.add_column("x", 0.0, 3.0, 2.0);
        let y = m.add_column("y", 0.0, 3.0, 1.0);
        m.add_row("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        let r = solve_lp(&m, &tol());
        assert!((r.objective - 9.0).abs() < 1e-9);
    }

    #[test]
    fn equality_with_free_columns() {
        // min |a| style: a free, a = p - n, p,n >= 0, a == -2, min p + n
        let mut m = LinearModel::<f64>::new();
        let a = m.add_column("a", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let p = m.add_column("p", 0.0, f64::INFINITY, 1.0);
        let n = m.add_column("n", 0.0, f64::INFINITY, 1.0);
        m.add_row("split", vec![(a, 1.0), (p, -1.0), (n, 1.0)], Sense::Eq, 0.0);
        m.add_row("fix", vec![(a, 1.0)], Sense::Eq, -2.0);
        let r = solve_lp(&m, &tol());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-9);
        assert!((r.values[a] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let mut m = LinearModel::<f64>::new();
        let x = m.add_column("x", 0.0, 4.0, -3.0);
        let y = m.add_column("y", 0.0, 4.0, -2.0);
        m.add_row("c1", vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0);
        m.add_row("c2", vec![(x, 2.0), (y, 1.0)], Sense::Le, 8.0);
        let t = tol();
        let root = solve_lp(&m, &t);
        let bounds = vec![(0.0, 2.0), (0.0, 4.0)];
        let warm = solve_lp_warm(&m, &t, &bounds, root.basis.as_ref());
        let cold = solve_lp_warm(&m, &t, &bounds, None);
        assert!((warm.objective - cold.objective).abs() < 1e-9);
        assert!((warm.objective + 12.0).abs() < 1e-9);
    }

    #[test]
    fn singular_warm_basis_is_repaired() {
        let mut m = LinearModel::<f64>::new();
        let x = m.add_column("x", 0.0, 4.0, -1.0);
        let y = m.add_column("y", 0.0, 4.0, -1.0);
        m.add_row("c1", vec![(x, 1.0), (y, 1.0)], Sense::Le, 3.0);
        m.add_row("c2", vec![(x, 2.0), (y, 2.0)], Sense::Le, 7.0);
        let bad = Basis {
            head: vec![x, y],
            status: vec![
                VarStatus::Basic,
                VarStatus::Basic,
                VarStatus::AtLower,
                VarStatus::AtLower,
            ],
        };
        let bounds = vec![(0.0, 4.0), (0.0, 4.0)];
        let r = solve_lp_warm(&m, &tol(), &bounds, Some(&bad));
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn f32_solves_small_lp() {
        let mut m = LinearModel::<f32>::new();
        let x = m.add_column("x", 0.0, 1.0, -1.0);
        let y = m.add_column("y", 0.0, 1.0, -2.0);
        m.add_row("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.5);
        let r = solve_lp(&m, &Tolerances::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 2.5).abs() < 1e-4);
    }
}
