//! Naive dense two-phase tableau simplex with Bland's rule and an exhaustive
//! binary-enumeration MILP oracle. Shares no code with the solver under test.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct DenseLp {
    pub cost: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Rel, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal(f64, Vec<f64>),
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f.abs() > 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimize the objective stored in the last row (reduced costs, with the
    /// negated objective value in the last column). `allowed` masks columns.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        let m = self.basis.len();
        loop {
            let obj = &self.t[m];
            let entering = (0..self.cols).find(|&j| allowed[j] && obj[j] < -EPS);
            let Some(c) = entering else { return true };
            let mut best: Option<(f64, usize)> = None;
            for i in 0..m {
                let a = self.t[i][c];
                if a > EPS {
                    let ratio = self.t[i][self.cols] / a;
                    match best {
                        None => best = Some((ratio, i)),
                        Some((br, bi)) => {
                            if ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi]) {
                                best = Some((ratio, i));
                            }
                        }
                    }
                }
            }
            let Some((_, r)) = best else { return false };
            self.pivot(r, c);
        }
    }
}

pub fn naive_solve(lp: &DenseLp) -> Outcome {
    let n = lp.cost.len();
    // shift x = l + x'
    let mut rows: Vec<(Vec<f64>, Rel, f64)> = Vec::new();
    for (a, rel, b) in &lp.rows {
        let shift: f64 = a.iter().zip(&lp.lower).map(|(x, l)| x * l).sum();
        rows.push((a.clone(), *rel, b - shift));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        rows.push((a, Rel::Le, lp.upper[j] - lp.lower[j]));
    }
    for r in rows.iter_mut() {
        if r.2 < 0.0 {
            for v in r.0.iter_mut() {
                *v = -*v;
            }
            r.2 = -r.2;
            r.1 = match r.1 {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Rel::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Rel::Le).count();
    let cols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    let mut basis = vec![0; m];
    let mut si = n;
    let mut ai = n + n_slack;
    let mut artificial = vec![false; cols];
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][cols] = *b;
        match rel {
            Rel::Le => {
                t[i][si] = 1.0;
                basis[i] = si;
                si += 1;
            }
            Rel::Ge => {
                t[i][si] = -1.0;
                si += 1;
                t[i][ai] = 1.0;
                basis[i] = ai;
                artificial[ai] = true;
                ai += 1;
            }
            Rel::Eq => {
                t[i][ai] = 1.0;
                basis[i] = ai;
                artificial[ai] = true;
                ai += 1;
            }
        }
    }
    let mut tab = Tableau { t, basis, cols };
    // phase 1: minimize sum of artificials
    for j in 0..=cols {
        tab.t[m][j] = 0.0;
    }
    for j in 0..cols {
        if artificial[j] {
            tab.t[m][j] = 1.0;
        }
    }
    for i in 0..m {
        if artificial[tab.basis[i]] {
            for j in 0..=cols {
                tab.t[m][j] -= tab.t[i][j];
            }
        }
    }
    let all = vec![true; cols];
    tab.optimize(&all);
    if -tab.t[m][cols] > 1e-7 {
        return Outcome::Infeasible;
    }
    // drive zero-level artificials out of the basis where possible
    for i in 0..m {
        if artificial[tab.basis[i]] {
            if let Some(c) = (0..cols).find(|&j| !artificial[j] && tab.t[i][j].abs() > 1e-9) {
                tab.pivot(i, c);
            }
        }
    }
    // phase 2
    for j in 0..=cols {
        tab.t[m][j] = 0.0;
    }
    tab.t[m][..n].copy_from_slice(&lp.cost);
    for i in 0..m {
        let b = tab.basis[i];
        let cb = if b < n { lp.cost[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=cols {
                tab.t[m][j] -= cb * tab.t[i][j];
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| !artificial[j]).collect();
    if !tab.optimize(&allowed) {
        return Outcome::Unbounded;
    }
    let mut x = lp.lower.clone();
    for i in 0..m {
        let b = tab.basis[i];
        if b < n {
            x[b] += tab.t[i][cols];
        }
    }
    let obj = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    Outcome::Optimal(obj, x)
}

/// Minimize over every 0/1 assignment of `binaries`, solving the remaining LP
/// for each pattern.
pub fn enumerate_binaries(lp: &DenseLp, binaries: &[usize]) -> Outcome {
    assert!(binaries.len() <= 16);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << binaries.len()) {
        let mut fixed = lp.clone();
        for (k, &j) in binaries.iter().enumerate() {
            let v = if mask & (1 << k) != 0 { 1.0 } else { 0.0 };
            fixed.lower[j] = v;
            fixed.upper[j] = v;
        }
        if let Outcome::Optimal(obj, x) = naive_solve(&fixed) {
            if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }
    }
    match best {
        Some((obj, x)) => Outcome::Optimal(obj, x),
        None => Outcome::Infeasible,
    }
}
