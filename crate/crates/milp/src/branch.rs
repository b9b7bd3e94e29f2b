//! Best-bound branch-and-bound over integer-marked columns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{LinearModel, ObjectiveSense};
use crate::simplex::{solve_lp_warm, Basis, SolveResult, SolveStatus, Tolerances};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits<S> {
    pub node_limit: usize,
    /// Relative optimality gap at which open nodes are pruned.
    pub relative_gap: S,
}

impl<S: Scalar> Default for Limits<S> {
    fn default() -> Self {
        Self {
            node_limit: 100_000,
            relative_gap: S::lit(1e-6),
        }
    }
}

struct Node<S> {
    /// LP bound in minimization form.
    bound: S,
    id: usize,
    bounds: Vec<(S, S)>,
    values: Vec<S>,
    basis: Option<Basis>,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Node<S> {}
impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Node<S> {
    // BinaryHeap is a max-heap: reverse so the smallest bound (then the
    // oldest node) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solve `model` honoring integrality marks.
///
/// Children are solved when created and queued by their LP bound; the node
/// with the smallest bound is expanded next, branching on the most fractional
/// integer column (lowest index on ties), down child before up child.
pub fn solve_milp<S: Scalar>(model: &LinearModel<S>, tol: &Tolerances<S>, limits: &Limits<S>) -> SolveResult<S> {
    let root_bounds: Vec<(S, S)> = model.columns.iter().map(|c| (c.lower, c.upper)).collect();
    solve_milp_from(model, tol, limits, root_bounds, None)
}

/// As [`solve_milp`], starting the root relaxation from `warm`.
pub fn solve_milp_warm<S: Scalar>(
    model: &LinearModel<S>,
    tol: &Tolerances<S>,
    limits: &Limits<S>,
    warm: Option<&Basis>,
) -> SolveResult<S> {
    let root_bounds: Vec<(S, S)> = model.columns.iter().map(|c| (c.lower, c.upper)).collect();
    solve_milp_from(model, tol, limits, root_bounds, warm)
}

fn solve_milp_from<S: Scalar>(
    model: &LinearModel<S>,
    tol: &Tolerances<S>,
    limits: &Limits<S>,
    root_bounds: Vec<(S, S)>,
    warm: Option<&Basis>,
) -> SolveResult<S> {
    let sign = match model.sense {
        ObjectiveSense::Minimize => S::one(),
        ObjectiveSense::Maximize => -S::one(),
    };
    let integer: Vec<usize> = (0..model.num_columns()).filter(|&j| model.columns[j].integer).collect();
    let mut iterations = 0usize;
    let mut nodes = 0usize;
    let mut next_id = 0usize;

    let root = solve_lp_warm(model, tol, &root_bounds, warm);
    iterations += root.iterations;
    nodes += 1;
    match root.status {
        SolveStatus::Optimal => {}
        other => {
            return SolveResult {
                nodes,
                ..SolveResult::without_solution(other, iterations)
            }
        }
    }

    let mut incumbent: Option<(S, Vec<S>)> = None;
    let mut heap = BinaryHeap::new();
    let root_basis_out = root.basis.clone();
    let mut root_basis = root.basis.clone();

    let accept = |values: &[S], incumbent: &mut Option<(S, Vec<S>)>, obj: S| {
        let better = incumbent.as_ref().map_or(true, |(best, _)| obj < *best);
        if better {
            *incumbent = Some((obj, values.to_vec()));
        }
    };

    if branch_column(&root.values, &integer, tol.integrality).is_none() {
        accept(&root.values, &mut incumbent, sign * root.objective);
    } else {
        heap.push(Node {
            bound: sign * root.objective,
            id: next_id,
            bounds: root_bounds,
            values: root.values,
            basis: root_basis.take(),
        });
        next_id += 1;
    }

    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            let gap = limits.relative_gap * best.abs().max(S::one());
            if node.bound >= *best - gap {
                break;
            }
        }
        if nodes >= limits.node_limit {
            hit_limit = true;
            break;
        }
        let Some(j) = branch_column(&node.values, &integer, tol.integrality) else {
            continue;
        };
        let v = node.values[j];
        let children = [(node.bounds[j].0, v.floor()), (v.ceil(), node.bounds[j].1)];
        for (lo, up) in children {
            if lo > up {
                continue;
            }
            let mut bounds = node.bounds.clone();
            bounds[j] = (lo, up);
            let r = solve_lp_warm(model, tol, &bounds, node.basis.as_ref());
            iterations += r.iterations;
            nodes += 1;
            if r.status != SolveStatus::Optimal {
                continue;
            }
            let obj = sign * r.objective;
            if let Some((best, _)) = &incumbent {
                if obj >= *best - limits.relative_gap * best.abs().max(S::one()) {
                    continue;
                }
            }
            if branch_column(&r.values, &integer, tol.integrality).is_none() {
                accept(&r.values, &mut incumbent, obj);
            } else {
                heap.push(Node {
                    bound: obj,
                    id: next_id,
                    bounds,
                    values: r.values,
                    basis: r.basis,
                });
                next_id += 1;
            }
        }
    }

    match incumbent {
        Some((obj, mut values)) => {
            for &j in &integer {
                values[j] = values[j].round();
            }
            SolveResult {
                status: if hit_limit {
                    SolveStatus::NodeLimit
                } else {
                    SolveStatus::Optimal
                },
                objective: sign * obj,
                values,
                nodes,
                iterations,
                basis: root_basis_out,
            }
        }
        None => SolveResult {
            nodes,
            ..SolveResult::without_solution(
                if hit_limit {
                    SolveStatus::NodeLimit
                } else {
                    SolveStatus::Infeasible
                },
                iterations,
            )
        },
    }
}

fn branch_column<S: Scalar>(values: &[S], integer: &[usize], tol: S) -> Option<usize> {
    let half = S::lit(0.5);
    let mut best: Option<usize> = None;
    let mut best_frac = S::zero();
    for &j in integer {
        let f = values[j] - values[j].floor();
        let dist = f.min(S::one() - f);
        if dist > tol && (best.is_none() || (dist - half).abs() < (best_frac - half).abs()) {
            best = Some(j);
            best_frac = dist;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    #[test]
    fn picks_better_binary() {
        // max 5a + 4b s.t. a + b <= 1, as min of the negation
        let mut m = LinearModel::<f64>::new();
        let a = m.add_binary("a", -5.0);
        let b = m.add_binary("b", -4.0);
        m.add_row("c", vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        let r = solve_milp(&m, &Tolerances::default(), &Limits::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 5.0).abs() < 1e-9);
        assert_eq!(r.values[a], 1.0);
        assert_eq!(r.values[b], 0.0);
    }

    #[test]
    fn knapsack_matches_enumeration() {
        // weights 2,3,4 values 3,4,5 capacity 5: only {a,b} fits with value 7.
        let mut m = LinearModel::<f64>::new();
        let cols: Vec<usize> = [3.0, 4.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, v)| m.add_binary(format!("k{i}"), -v))
            .collect();
        m.add_row(
            "cap",
            cols.iter().zip([2.0, 3.0, 4.0]).map(|(&j, w)| (j, w)).collect(),
            Sense::Le,
            5.0,
        );
        let mut best = 0.0f64;
        for mask in 0..8u32 {
            let pick = |i: u32| if mask & (1 << i) != 0 { 1.0 } else { 0.0 };
            let w = 2.0 * pick(0) + 3.0 * pick(1) + 4.0 * pick(2);
            let v = 3.0 * pick(0) + 4.0 * pick(1) + 5.0 * pick(2);
            if w <= 5.0 {
                best = best.max(v);
            }
        }
        assert_eq!(best, 7.0);
        let r = solve_milp(&m, &Tolerances::default(), &Limits::default());
        assert!((r.objective + best).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut m = LinearModel::<f64>::new();
        let a = m.add_binary("a", 1.0);
        let b = m.add_binary("b", 1.0);
        m.add_row("c", vec![(a, 2.0), (b, 2.0)], Sense::Eq, 1.0);
        let r = solve_milp(&m, &Tolerances::default(), &Limits::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn node_limit_reports_incumbent_status() {
        let mut m = LinearModel::<f64>::new();
        let cols: Vec<usize> = (0..10)
            .map(|i| m.add_binary(format!("b{i}"), -1.0 - i as f64 * 0.1))
            .collect();
        m.add_row("c", cols.iter().map(|&j| (j, 2.0)).collect(), Sense::Le, 9.0);
        let r = solve_milp(
            &m,
            &Tolerances::default(),
            &Limits {
                node_limit: 1,
                relative_gap: 1e-6,
            },
        );
        assert_eq!(r.status, SolveStatus::NodeLimit);
    }
}
