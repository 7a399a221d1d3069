//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Intended for small models; every row gets an artificial column and every
//! finite upper bound becomes an explicit row.

use super::model::{LpModel, Relation};
use super::RelaxOutcome;
use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; its last entry holds minus the objective value.
    costs: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

enum Stop {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        let f = self.costs[c];
        if f != 0.0 {
            for (x, &y) in self.costs.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
        }
        self.basis[r] = c;
    }

    fn price(&mut self, cost: &[f64]) {
        let rhs = self.width;
        self.costs = cost.to_vec();
        self.costs.push(0.0);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for j in 0..=rhs {
                    self.costs[j] -= cb * self.rows[r][j];
                }
            }
        }
    }

    fn run(&mut self, allowed: impl Fn(usize) -> bool, iterations: &mut usize, cap: usize) -> Stop {
        let rhs = self.width;
        loop {
            let Some(enter) = (0..self.width).find(|&j| allowed(j) && self.costs[j] < -EPS) else {
                return Stop::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > EPS {
                    let ratio = row[rhs] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - EPS
                                || (ratio <= best + EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Stop::Unbounded;
            };
            *iterations += 1;
            if *iterations > cap {
                return Stop::IterationLimit;
            }
            self.pivot(r, enter);
        }
    }
}

pub(crate) fn solve(model: &LpModel, bounds: &[(f64, f64)], cap: usize) -> Result<RelaxOutcome> {
    let nv = model.num_vars;
    if let Some(v) = bounds.iter().position(|b| !b.0.is_finite()) {
        return Err(Error::Parameter(format!(
            "dense simplex needs a finite lower bound on variable {v}"
        )));
    }
    if bounds.iter().any(|&(lo, hi)| hi < lo) {
        return Ok(RelaxOutcome::Infeasible);
    }
    let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();

    // x = y + lower, y >= 0
    struct Row {
        coefs: Vec<(usize, f64)>,
        slack: f64,
        rhs: f64,
    }
    let mut rows = Vec::new();
    for r in &model.constraints {
        let shift: f64 = r.terms.iter().map(|&(v, a)| a * lower[v]).sum();
        let slack = match r.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => 0.0,
        };
        rows.push(Row {
            coefs: r.terms.clone(),
            slack,
            rhs: r.rhs - shift,
        });
    }
    let upper: Vec<(usize, f64)> = bounds
        .iter()
        .enumerate()
        .filter(|(_, b)| b.1.is_finite())
        .map(|(v, b)| (v, b.1 - b.0))
        .collect();

    let n_slack = rows.iter().filter(|r| r.slack != 0.0).count();
    let m = rows.len() + upper.len();
    let art0 = nv + n_slack + upper.len();
    let width = art0 + m;
    let mut tab = Vec::with_capacity(m);
    let mut slack_col = nv;
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        for &(v, a) in &r.coefs {
            row[v] += a;
        }
        if r.slack != 0.0 {
            row[slack_col] = r.slack;
            slack_col += 1;
        }
        row[width] = r.rhs;
        if r.rhs < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        row[art0 + i] = 1.0;
        tab.push(row);
    }
    for (k, &(v, u)) in upper.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        row[v] = 1.0;
        row[nv + n_slack + k] = 1.0;
        row[width] = u;
        row[art0 + rows.len() + k] = 1.0;
        tab.push(row);
    }
    let mut t = Tableau {
        rows: tab,
        costs: Vec::new(),
        basis: (art0..art0 + m).collect(),
        width,
    };

    let mut iterations = 0;
    let mut phase1 = vec![0.0; width];
    phase1[art0..].iter_mut().for_each(|c| *c = 1.0);
    t.price(&phase1);
    match t.run(|_| true, &mut iterations, cap) {
        Stop::Optimal => {}
        Stop::IterationLimit => return Ok(RelaxOutcome::IterationLimit),
        Stop::Unbounded => return Err(Error::Solver {
            iteration: iterations,
            message: "phase one unbounded".into(),
        }),
    }
    if -t.costs[width] > 1e-7 {
        return Ok(RelaxOutcome::Infeasible);
    }
    // Pivot remaining artificials out where possible; rows that cannot be
    // cleared are redundant.
    for r in 0..m {
        if t.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&c| t.rows[r][c].abs() > EPS) {
                t.pivot(r, c);
            }
        }
    }

    let mut phase2 = vec![0.0; width];
    for &(v, c) in &model.objective {
        phase2[v] += c;
    }
    t.price(&phase2);
    match t.run(|j| j < art0, &mut iterations, cap) {
        Stop::Optimal => {}
        Stop::IterationLimit => return Ok(RelaxOutcome::IterationLimit),
        Stop::Unbounded => return Ok(RelaxOutcome::Unbounded),
    }

    let mut values = lower.clone();
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nv {
            values[b] += t.rows[r][width];
        }
    }
    let objective = model.objective_value(&values);
    Ok(RelaxOutcome::Optimal { values, objective })
}
