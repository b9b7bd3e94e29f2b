mod common;

use gridmaint_core::consensus::{ConsensusState, Penalties};
use gridmaint_core::subproblem::{
    build_epoch_model, encode_quadratic_penalty, run_solver, solve_epoch, EpochInputs, ModelMode, ModelOptions,
    PwlEncoding, PwlSpec, Relax,
};
use gridmaint_milp::{solve_lp, Limits, LinearModel, SolveStatus, Tolerances};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn interpolant_stays_within_its_bound(rho in 0.1f64..500.0, half in 0.01f64..50.0, k in 1usize..16, t in -1.0f64..1.0) {
        let s = PwlSpec::new(rho, -half, half, k).unwrap();
        let d = t * half;
        let gap = s.value(d) - s.exact(d);
        prop_assert!(gap >= -1e-9 * (1.0 + s.exact(d)));
        prop_assert!(gap <= s.max_error() * (1.0 + 1e-9) + 1e-12);
        prop_assert!(s.error_at(d) <= s.max_error() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn encodings_price_a_pinned_column_identically(
        rho in 0.1f64..100.0, half in 0.1f64..5.0, k in 1usize..10, at in -20.0f64..20.0, mult in -50.0f64..50.0,
    ) {
        let spec = PwlSpec::new(rho, -half, half, k).unwrap().with_reach(PwlSpec::guard_reach(rho, half, mult));
        let mut got = Vec::new();
        for enc in [PwlEncoding::Segments, PwlEncoding::Epigraph] {
            let mut m = LinearModel::new();
            let v = m.add_column("v", at, at, 0.0);
            encode_quadratic_penalty(&mut m, "p", v, 0.0, spec, enc);
            got.push(solve_lp(&m, &Tolerances::default()).objective);
        }
        prop_assert!((got[0] - got[1]).abs() <= 1e-7 * (1.0 + got[0].abs()));
        prop_assert!((got[0] - spec.value(at)).abs() <= 1e-7 * (1.0 + got[0].abs()));
    }

    #[test]
    fn guarded_penalty_bounds_any_linear_pull(rho in 0.1f64..100.0, half in 0.01f64..5.0, mult in -500.0f64..500.0) {
        let spec = PwlSpec::new(rho, -half, half, 8).unwrap().with_reach(PwlSpec::guard_reach(rho, half, mult));
        for enc in [PwlEncoding::Segments, PwlEncoding::Epigraph] {
            let mut m = LinearModel::new();
            let v = m.add_column("v", f64::NEG_INFINITY, f64::INFINITY, mult);
            encode_quadratic_penalty(&mut m, "p", v, 0.0, spec, enc);
            prop_assert_eq!(solve_lp(&m, &Tolerances::default()).status, SolveStatus::Optimal);
        }
    }
}

#[test]
fn decomposed_minimum_never_exceeds_the_joint_minimum() {
    let inputs = common::inputs("desk3");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in inputs.problems() {
        for _ in 0..4 {
            let st = common::random_state(&p, &mut rng);
            let alpha: Vec<f64> = p.generators.iter().map(|_| rng.gen_range(-150.0..150.0)).collect();
            for encoding in [PwlEncoding::Segments, PwlEncoding::Epigraph] {
                let opts = ModelOptions {
                    encoding,
                    ..ModelOptions::default()
                };
                let (split, whole) = common::decomposition_sides(&p, &st, &alpha, &opts);
                assert!(split <= whole + 1e-6 * whole.abs(), "{split} > {whole}");
            }
        }
    }
}

#[test]
fn single_generator_picks_its_cheapest_epoch() {
    // one bus, one generator, ω = [3, 5]: maintenance lands in the first epoch
    let case =
        gridmaint_core::case_model::parse_case("BUS\n1 0\nBRANCH\nGEN\n1 1 0 10 10 1 1\nCOST\n1 1 1 0 0\n").unwrap();
    let part = gridmaint_core::case_model::PartitionedCase::single_region(case);
    let grid = gridmaint_core::case_model::TimeGrid::new(2, 2, 1).unwrap();
    let p = gridmaint_core::subproblem::RegionProblem::new(&part, 0, grid, &[vec![0.0, 0.0]], &[vec![3.0, 5.0]]);
    let st = ConsensusState::initial(&p.region, 2, vec![0.0; 2], Penalties::default());
    let opts = ModelOptions::default();
    let (split, whole) = common::decomposition_sides(&p, &st, &[0.0], &opts);
    assert!((whole - 3.0).abs() < 1e-9, "{whole}");
    assert!(split <= whole + 1e-9);
    let inp = EpochInputs {
        consensus: &st,
        alpha: &[0.0],
        mode: ModelMode::Fmbc,
        fixing: Some(&[0]),
        options: &opts,
        relax: Relax::default(),
    };
    let em = build_epoch_model(&p, 0, &inp).unwrap();
    let (sol, _) = solve_epoch(&p, &em, &Tolerances::default(), &Limits::default(), None).unwrap();
    assert_eq!(sol.z[0], 1.0);
    assert_eq!(sol.x[0], vec![0.0]);
}

#[test]
fn epoch_models_are_deterministic_text() {
    let inputs = common::inputs("fig1");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in inputs.problems() {
        let st = common::random_state(&p, &mut rng);
        let opts = ModelOptions::default();
        let alpha = vec![1.5; p.generators.len()];
        let inp = EpochInputs {
            consensus: &st,
            alpha: &alpha,
            mode: ModelMode::Bmbc,
            fixing: None,
            options: &opts,
            relax: Relax::default(),
        };
        for m in 0..p.grid.epochs {
            let a = build_epoch_model(&p, m, &inp).unwrap();
            let b = build_epoch_model(&p, m, &inp).unwrap();
            assert_eq!(a.to_lp(), b.to_lp());
            let r = run_solver(&a.model, &Tolerances::default(), &Limits::default(), None);
            assert_eq!(r.status, SolveStatus::Optimal);
        }
    }
}
