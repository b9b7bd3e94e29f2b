mod support;

use gridmaint_milp::{solve_lp, solve_lp_warm, solve_milp, Limits, SolveStatus, Tolerances};
use proptest::prelude::*;
use support::instances::{random_lp, random_milp, to_model};
use support::naive::{enumerate_binaries, naive_solve, Outcome};

#[test]
fn naive_oracle_sanity() {
    use support::naive::{DenseLp, Rel};
    // min -x - y, x + y <= 1, x,y in [0,1]
    let lp = DenseLp {
        cost: vec![-1.0, -1.0],
        rows: vec![(vec![1.0, 1.0], Rel::Le, 1.0)],
        lower: vec![0.0, 0.0],
        upper: vec![1.0, 1.0],
    };
    match naive_solve(&lp) {
        Outcome::Optimal(v, _) => assert!((v + 1.0).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fifty_random_lps_match_naive_simplex() {
    let tol = Tolerances::default();
    let mut checked = 0;
    for seed in 0..50u64 {
        let lp = random_lp(seed);
        let expected = naive_solve(&lp);
        let got = solve_lp(&to_model(&lp, &[]), &tol);
        match expected {
            Outcome::Optimal(v, _) => {
                assert_eq!(got.status, SolveStatus::Optimal, "seed {seed}");
                assert!(
                    (got.objective - v).abs() <= 1e-6 * (1.0 + v.abs()),
                    "seed {seed}: {} vs {v}",
                    got.objective
                );
                checked += 1;
            }
            Outcome::Infeasible => assert_eq!(got.status, SolveStatus::Infeasible, "seed {seed}"),
            Outcome::Unbounded => unreachable!("finite bounds"),
        }
    }
    assert_eq!(checked, 50);
}

#[test]
fn hundred_random_milps_match_enumeration() {
    let tol = Tolerances::default();
    let limits = Limits::default();
    for seed in 0..100u64 {
        let (lp, bins) = random_milp(seed);
        let expected = enumerate_binaries(&lp, &bins);
        let got = solve_milp(&to_model(&lp, &bins), &tol, &limits);
        match expected {
            Outcome::Optimal(v, _) => {
                assert_eq!(got.status, SolveStatus::Optimal, "seed {seed}");
                assert!(
                    (got.objective - v).abs() <= 1e-6 * (1.0 + v.abs()),
                    "seed {seed}: {} vs {v}",
                    got.objective
                );
            }
            Outcome::Infeasible => assert_eq!(got.status, SolveStatus::Infeasible, "seed {seed}"),
            Outcome::Unbounded => unreachable!(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relaxation_bounds_milp_and_fixing_reproduces(seed in 0u64..10_000) {
        let tol = Tolerances::default();
        let (lp, bins) = random_milp(seed);
        let model = to_model(&lp, &bins);
        let milp = solve_milp(&model, &tol, &Limits::default());
        prop_assume!(milp.status == SolveStatus::Optimal);
        let relaxed = solve_lp(&model, &tol);
        prop_assert!(relaxed.objective <= milp.objective + 1e-7);
        let bounds: Vec<(f64, f64)> = model
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| if c.integer { (milp.values[j], milp.values[j]) } else { (c.lower, c.upper) })
            .collect();
        let fixed = solve_lp_warm(&model, &tol, &bounds, None);
        prop_assert!((fixed.objective - milp.objective).abs() <= 1e-6 * (1.0 + milp.objective.abs()));
    }

    #[test]
    fn solves_are_deterministic(seed in 0u64..10_000) {
        let tol = Tolerances::default();
        let (lp, bins) = random_milp(seed);
        let model = to_model(&lp, &bins);
        let a = solve_milp(&model, &tol, &Limits::default());
        let b = solve_milp(&model, &tol, &Limits::default());
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        prop_assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.nodes, b.nodes);
    }

    #[test]
    fn optimal_points_are_feasible(seed in 0u64..10_000) {
        let tol = Tolerances::default();
        let lp = random_lp(seed);
        let model = to_model(&lp, &[]);
        let r = solve_lp(&model, &tol);
        prop_assume!(r.status == SolveStatus::Optimal);
        prop_assert!(model.max_violation(&r.values) <= 1e-6);
    }
}
