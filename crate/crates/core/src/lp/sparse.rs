//! Sparse relaxed-LP backend on top of `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use super::model::{LpModel, Relation};
use super::RelaxOutcome;
use crate::error::{Error, Result};

const EMPTY_ROW_TOL: f64 = 1e-9;

/// Sorts terms by variable and merges duplicates; the backend rejects
/// repeated indices within a row.
fn merged(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut t = terms.to_vec();
    t.sort_by_key(|&(v, _)| v);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (v, a) in t {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += a,
            _ => out.push((v, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

pub(crate) fn solve(model: &LpModel, bounds: &[(f64, f64)]) -> Result<RelaxOutcome> {
    if bounds.iter().any(|&(lo, hi)| hi < lo) {
        return Ok(RelaxOutcome::Infeasible);
    }
    let mut obj = vec![0.0; model.num_vars];
    for &(v, c) in &model.objective {
        obj[v] += c;
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = obj
        .iter()
        .zip(bounds)
        .map(|(&c, &b)| problem.add_var(c, b))
        .collect();
    for row in &model.constraints {
        let terms = merged(&row.terms);
        if terms.is_empty() {
            let ok = match row.relation {
                Relation::Ge => 0.0 >= row.rhs - EMPTY_ROW_TOL,
                Relation::Le => 0.0 <= row.rhs + EMPTY_ROW_TOL,
                Relation::Eq => row.rhs.abs() <= EMPTY_ROW_TOL,
            };
            if !ok {
                return Ok(RelaxOutcome::Infeasible);
            }
            continue;
        }
        let expr: Vec<_> = terms.iter().map(|&(v, a)| (vars[v], a)).collect();
        let op = match row.relation {
            Relation::Ge => ComparisonOp::Ge,
            Relation::Le => ComparisonOp::Le,
            Relation::Eq => ComparisonOp::Eq,
        };
        problem.add_constraint(expr.as_slice(), op, row.rhs);
    }
    match problem.solve() {
        Ok(SolveOutcome::Solution(sol)) => {
            let values: Vec<f64> = vars.iter().map(|&v| sol.var_value(v)).collect();
            let objective = model.objective_value(&values);
            Ok(RelaxOutcome::Optimal { values, objective })
        }
        Ok(SolveOutcome::Interrupted(_)) => Ok(RelaxOutcome::IterationLimit),
        Err(microlp::Error::Infeasible) => Ok(RelaxOutcome::Infeasible),
        Err(microlp::Error::Unbounded) => Ok(RelaxOutcome::Unbounded),
        Err(e) => Err(Error::Solver {
            iteration: 0,
            message: e.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_repeated_terms() {
        assert_eq!(merged(&[(3, 1.0), (1, 2.0), (3, -1.0), (1, 0.5)]), vec![(1, 2.5)]);
    }
}
