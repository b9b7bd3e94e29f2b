mod common;

use gridmaint_core::runtime::transport::TransportKind;
use gridmaint_core::runtime::wire::{decode, Kind};
use gridmaint_core::runtime::{centralized_benchmark, run_algorithm, RunReport, RunSettings};
use gridmaint_core::subproblem::ModelMode;

fn run(name: &str, f: impl FnOnce(&mut RunSettings)) -> RunReport {
    let mut s = RunSettings::default();
    f(&mut s);
    run_algorithm(&common::inputs(name), &s).unwrap()
}

fn same_outcome(a: &RunReport, b: &RunReport) {
    assert_eq!(a.rounds, b.rounds);
    assert_eq!(a.schedule, b.schedule);
    assert_eq!(a.totals, b.totals);
    assert_eq!(a.upper_bound, b.upper_bound);
    assert_eq!(a.messages, b.messages);
}

#[test]
fn thread_count_does_not_change_the_outcome() {
    for name in ["desk3", "fig1"] {
        let one = run(name, |s| s.threads = 1);
        let two = run(name, |s| s.threads = 2);
        assert!(one.converged(), "{name}");
        same_outcome(&one, &two);
    }
}

#[test]
fn socket_transport_matches_in_process_delivery() {
    let inproc = run("fig1", |_| {});
    let socket = run("fig1", |s| s.transport = TransportKind::Socket);
    same_outcome(&inproc, &socket);
}

#[test]
fn no_region_starts_a_round_before_all_finished_the_previous_one() {
    let r = run("fig1", |_| {});
    let last = r.spans.iter().map(|s| s.round).max().unwrap();
    for k in 0..last {
        let latest_end = r.spans.iter().filter(|s| s.round == k).map(|s| s.end).max();
        let earliest_start = r.spans.iter().filter(|s| s.round == k + 1).map(|s| s.start).min();
        if let (Some(end), Some(start)) = (latest_end, earliest_start) {
            assert!(
                start >= end,
                "round {} started at {start:?} before round {k} ended at {end:?}",
                k + 1
            );
        }
    }
}

#[test]
fn wire_carries_only_the_four_record_kinds() {
    let r = run("fig1", |s| {
        s.transport = TransportKind::Socket;
        s.trace = true;
    });
    assert!(!r.trace.is_empty());
    for t in &r.trace {
        let msg = decode(&t.record).unwrap();
        assert_eq!(msg.kind(), t.kind);
        assert!(Kind::ALL.contains(&msg.kind()));
        let head = t.record.lines().next().unwrap();
        assert!(head.ends_with(t.kind.as_str()), "{head}");
        for line in t.record.lines().skip(1) {
            let key = line.split('=').next().unwrap();
            assert!(
                !["demand", "cost", "curve", "pmax", "pmin", "generator", "x", "y", "z"].contains(&key),
                "private field `{key}` on the wire"
            );
        }
    }
}

#[test]
fn every_round_exchanges_the_expected_messages() {
    // three mutually adjacent regions: six directed pairs
    let r = run("fig1", |_| {});
    let rounds: std::collections::BTreeSet<usize> = r.trace.iter().map(|t| t.round).collect();
    for k in rounds {
        let count = |kind: Kind| r.trace.iter().filter(|t| t.round == k && t.kind == kind).count();
        assert_eq!(count(Kind::ThetaShare), 6, "round {k}");
        assert_eq!(count(Kind::ViolationShare), 6, "round {k}");
        assert_eq!(count(Kind::ConvFlag), 6, "round {k}");
        assert_eq!(count(Kind::UboundShare) % 6, 0, "round {k}");
    }
    let total: usize = r.rounds.iter().map(|m| m.messages).sum();
    assert_eq!(total, r.trace.len());
}

#[test]
fn a_single_region_settles_the_fixed_phases_at_once() {
    for name in ["desk3", "fig1"] {
        let r = centralized_benchmark(&common::inputs(name), &RunSettings::default()).unwrap();
        assert_eq!(r.regions, 1);
        for mode in [ModelMode::Fmrc, ModelMode::Fmbc] {
            let p = r.phase(mode);
            assert!(p.converged && p.rounds <= 2, "{name} {mode:?}: {} rounds", p.rounds);
        }
        assert!(r.balance_residual <= 1e-6);
    }
}

#[test]
fn final_schedule_is_consistent() {
    for name in ["desk3", "fig1"] {
        let r = run(name, |_| {});
        let spe = r.grid.steps_per_epoch();
        for (g, z) in r.schedule.z.iter().enumerate() {
            assert!((z.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "{name} generator {g}");
            for (t, x) in r.schedule.x[g].iter().enumerate() {
                assert!(*x <= 1.0 - z[t / spe] + 1e-9);
            }
        }
        assert!(r.balance_residual <= 1e-6, "{name}: {}", r.balance_residual);
    }
}
