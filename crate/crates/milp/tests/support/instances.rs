//! Seeded random feasible LP/MILP instances, built in both the oracle's dense
//! form and the solver's model form.

#![allow(dead_code)]

use gridmaint_milp::{LinearModel, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::naive::{DenseLp, Rel};

pub fn to_model(lp: &DenseLp, binaries: &[usize]) -> LinearModel<f64> {
    let mut m = LinearModel::new();
    for j in 0..lp.cost.len() {
        let c = m.add_column(format!("x{j}"), lp.lower[j], lp.upper[j], lp.cost[j]);
        m.columns[c].integer = binaries.contains(&j);
    }
    for (i, (a, rel, b)) in lp.rows.iter().enumerate() {
        let coeffs = a
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let sense = match rel {
            Rel::Le => Sense::Le,
            Rel::Ge => Sense::Ge,
            Rel::Eq => Sense::Eq,
        };
        m.add_row(format!("r{i}"), coeffs, sense, *b);
    }
    m
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Dense random LP with finite bounds, feasible by construction around a
/// hidden interior point.
pub fn random_lp(seed: u64) -> DenseLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=9);
    let m = rng.gen_range(1..=7);
    let lower: Vec<f64> = (0..n).map(|_| round2(rng.gen_range(-3.0..1.0))).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + round2(rng.gen_range(0.5..6.0))).collect();
    let point: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| l + (u - l) * rng.gen_range(0.1..0.9))
        .collect();
    let cost = (0..n).map(|_| round2(rng.gen_range(-5.0..5.0))).collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        round2(rng.gen_range(-5.0..5.0))
                    } else {
                        0.0
                    }
                })
                .collect();
            let act: f64 = a.iter().zip(&point).map(|(x, y)| x * y).sum();
            match rng.gen_range(0..3) {
                0 => (a, Rel::Le, round2(act + rng.gen_range(0.0..3.0)) + 0.01),
                1 => (a, Rel::Ge, round2(act - rng.gen_range(0.0..3.0)) - 0.01),
                _ => (a, Rel::Eq, act),
            }
        })
        .collect();
    DenseLp {
        cost,
        rows,
        lower,
        upper,
    }
}

/// Random small MILP: the first `k` (≤ 12) columns are binary, the rest
/// continuous. Returns the instance and its binary columns.
pub fn random_milp(seed: u64) -> (DenseLp, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let k = rng.gen_range(1..=12);
    let c = rng.gen_range(0..=4);
    let n = k + c;
    let mut lower = vec![0.0; n];
    let mut upper = vec![1.0; n];
    for j in k..n {
        lower[j] = 0.0;
        upper[j] = round2(rng.gen_range(1.0..8.0));
    }
    let cost = (0..n).map(|_| round2(rng.gen_range(-6.0..4.0))).collect();
    let m = rng.gen_range(1..=6);
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        round2(rng.gen_range(-4.0..6.0))
                    } else {
                        0.0
                    }
                })
                .collect();
            // keep the all-zero point feasible so the instance is never empty
            if rng.gen_bool(0.8) {
                (a, Rel::Le, round2(rng.gen_range(0.5..10.0)))
            } else {
                (a, Rel::Ge, round2(-rng.gen_range(0.0..6.0)))
            }
        })
        .collect();
    (
        DenseLp {
            cost,
            rows,
            lower,
            upper,
        },
        (0..k).collect(),
    )
}
