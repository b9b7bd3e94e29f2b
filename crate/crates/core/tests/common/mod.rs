//! Fixture loading shared by the integration tests.

#![allow(dead_code)]

use gridmaint_core::case_model::{expand_demand, parse_case, parse_partition, NetworkCase, PartitionedCase, TimeGrid};
use gridmaint_core::degradation::{cost_curve, parse_rld_spec, CostParams};
use gridmaint_core::runtime::RunInputs;

pub fn read(path: &str) -> String {
    let full = format!("{}/../../data/{path}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&full).unwrap_or_else(|e| panic!("{full}: {e}"))
}

pub fn case(name: &str) -> NetworkCase {
    parse_case(&read(&format!("{name}/case.txt"))).unwrap()
}

pub fn partition(name: &str) -> PartitionedCase {
    parse_partition(&read(&format!("{name}/partition.txt")), &case(name)).unwrap()
}

/// Grid and daily profile used by each fixture's config file.
pub fn grid_of(name: &str) -> (TimeGrid, Vec<f64>) {
    match name {
        "ieee30" => (TimeGrid::new(12, 24, 4).unwrap(), vec![0.7, 0.9, 1.0, 0.8]),
        _ => (TimeGrid::new(3, 3, 2).unwrap(), vec![0.6, 1.0]),
    }
}

pub fn inputs(name: &str) -> RunInputs {
    let part = partition(name);
    let (grid, profile) = grid_of(name);
    let demand = expand_demand(&part.case, &grid, &profile).unwrap();
    let rld = parse_rld_spec::<f64>(&read(&format!("{name}/rld.txt")), &CostParams::default(), &|_| {
        Err(std::io::Error::other("no tables in fixtures"))
    })
    .unwrap();
    let curves = part
        .case
        .generators
        .iter()
        .map(|g| {
            let e = rld.iter().find(|e| e.generator == g.id).unwrap();
            cost_curve(g.id, &e.rld, &e.params, grid.epochs).unwrap().values
        })
        .collect();
    RunInputs {
        part,
        grid,
        demand,
        curves,
    }
}

use gridmaint_core::consensus::{ConsensusState, Penalties};
use gridmaint_core::subproblem::{
    build_epoch_model, build_region_model, run_solver, EpochInputs, ModelMode, ModelOptions, RegionProblem, Relax,
};
use gridmaint_milp::{Limits, SolveStatus, Tolerances};
use rand::Rng;

/// A seeded Δ for one region: averages, multipliers and production targets
/// anywhere in a plausible range.
pub fn random_state(p: &RegionProblem, rng: &mut impl Rng) -> ConsensusState<f64> {
    let steps = p.grid.steps();
    let load: Vec<f64> = (0..steps).map(|t| p.demand.iter().map(|d| d[t]).sum()).collect();
    let target = load.iter().map(|l| l + rng.gen_range(-5.0..5.0)).collect();
    let mut st = ConsensusState::initial(&p.region, steps, target, Penalties::default());
    let mut fill = |rows: &mut Vec<Vec<f64>>, span: f64| {
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-span..span);
            }
        }
    };
    fill(&mut st.theta_bar, 0.3);
    fill(&mut st.lambda, 50.0);
    fill(&mut st.flow_bar, 20.0);
    fill(&mut st.phi, 30.0);
    for e in st.eta.iter_mut() {
        *e = rng.gen_range(-20.0..20.0);
    }
    st
}

/// (Σ_m min L^m, min L with the cardinality rows) under fixed Δ and α.
pub fn decomposition_sides(
    p: &RegionProblem,
    st: &ConsensusState<f64>,
    alpha: &[f64],
    opts: &ModelOptions,
) -> (f64, f64) {
    let inp = EpochInputs {
        consensus: st,
        alpha,
        mode: ModelMode::Bmbc,
        fixing: None,
        options: opts,
        relax: Relax::default(),
    };
    let tol = Tolerances::default();
    let limits = Limits {
        relative_gap: 1e-10,
        ..Limits::default()
    };
    let mut split = 0.0;
    for m in 0..p.grid.epochs {
        let r = run_solver(&build_epoch_model(p, m, &inp).unwrap().model, &tol, &limits, None);
        assert_eq!(r.status, SolveStatus::Optimal, "epoch {m}");
        split += r.objective;
    }
    let (whole, _) = build_region_model(p, &inp).unwrap();
    let r = run_solver(&whole, &tol, &limits, None);
    assert_eq!(r.status, SolveStatus::Optimal, "monolithic model");
    (split, r.objective)
}
