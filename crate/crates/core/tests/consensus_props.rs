use gridmaint_core::consensus::{
    flow_residuals, global_convergence, intermediate_flow, intermediate_theta, local_violation, production_target,
    update_eta, update_lambda, update_multiplier, update_phi, ViolationMode,
};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

fn value() -> impl Strategy<Value = f64> {
    -100.0f64..100.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn averaged_angle_lies_between_its_inputs(local in value(), others in proptest::collection::vec(value(), 0..5)) {
        let bar = intermediate_theta(local, &others);
        let lo = others.iter().copied().fold(local, f64::min);
        let hi = others.iter().copied().fold(local, f64::max);
        prop_assert!(bar >= lo - TOL * (1.0 + lo.abs()) && bar <= hi + TOL * (1.0 + hi.abs()));
    }

    #[test]
    fn agreement_is_a_fixed_point(theta in value(), n in 0usize..5, lambda in value(), rho in 0.0f64..500.0) {
        prop_assert!(close(intermediate_theta(theta, &vec![theta; n]), theta));
        prop_assert_eq!(update_lambda(lambda, theta, theta, rho), lambda);
        prop_assert_eq!(update_phi(lambda, theta, theta, rho), lambda);
        prop_assert_eq!(update_eta(lambda, theta, theta, rho), lambda);
        let (p, d) = flow_residuals(&[theta], &[theta], &[theta]);
        prop_assert_eq!((p, d), (0.0, 0.0));
    }

    #[test]
    fn multiplier_update_is_linear(
        m1 in value(), m2 in value(), v1 in value(), v2 in value(), c1 in value(), c2 in value(),
        rho in 0.0f64..500.0, k in -3.0f64..3.0,
    ) {
        let sum = update_multiplier(m1 + m2, v1 + v2, c1 + c2, rho);
        let parts = update_multiplier(m1, v1, c1, rho) + update_multiplier(m2, v2, c2, rho);
        prop_assert!(close(sum, parts));
        let scaled = update_multiplier(k * m1, k * v1, k * c1, rho);
        prop_assert!(close(scaled, k * update_multiplier(m1, v1, c1, rho)));
    }

    #[test]
    fn both_ends_of_a_tie_agree_on_the_flow(gamma in 1.0f64..5000.0, a in value(), b in value(), c in value(), d in value()) {
        let (a, b, c, d) = (a / 100.0, b / 100.0, c / 100.0, d / 100.0);
        // one region sees (u, v) = (a, b) and the other's estimate (c, d);
        // the other orients the line v → u
        let here = intermediate_flow(gamma, (a, b), (c, d));
        let there = intermediate_flow(gamma, (d, c), (b, a));
        prop_assert!(close(here, -there));
    }

    #[test]
    fn production_target_shifts_by_the_mean_violation(p in value(), v in proptest::collection::vec(value(), 1..6)) {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!(close(production_target(p, &v), p + mean));
        prop_assert!(close(production_target(p, &vec![0.0; v.len()]), p));
    }

    #[test]
    fn violation_modes(demand in 0.0f64..100.0, cut in 0.0f64..10.0, prod in 0.0f64..100.0) {
        let s = local_violation(demand, cut, prod, ViolationMode::Signed);
        prop_assert_eq!(s, demand - cut - prod);
        prop_assert_eq!(local_violation(demand, cut, prod, ViolationMode::Absolute), s.abs());
    }
}

#[test]
fn omega_is_a_conjunction() {
    assert!(global_convergence(&[true, true, true]));
    assert!(!global_convergence(&[true, false, true]));
    assert!(global_convergence(&[]));
}
