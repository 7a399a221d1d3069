//! Exact solve and the two rounding schemes for the relaxed program.

use std::cmp::Reverse;
use std::time::Instant;

use super::model::{build_model, vaccination_var, LinearRow, Relation};
use super::{solve, solve_with, LpSolution, LpStatus, SolveOptions};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::heuristics::{Algorithm, SolverResult};
use crate::spread::{ProblemInstance, VaccinationSet};

const SCORE_EPS: f64 = 1e-9;

/// Ranking key: score (quantized so solver noise does not reorder equal
/// values), then out-degree, both descending, then index ascending.
fn rank_key(instance: &ProblemInstance<'_>, score: f64, v: NodeId) -> (Reverse<i64>, Reverse<usize>, NodeId) {
    (
        Reverse((score * 1e9).round() as i64),
        Reverse(instance.graph.out_degree(v)),
        v,
    )
}

fn scores(instance: &ProblemInstance<'_>, values: &[f64]) -> Result<Vec<f64>> {
    let n = instance.n();
    let s = instance.topologies.len();
    if values.len() != n * s + n {
        return Err(Error::Parameter(format!(
            "solution has {} values, expected {}",
            values.len(),
            n * s + n
        )));
    }
    Ok((0..n).map(|j| values[vaccination_var(n, s, j)]).collect())
}

/// Top-`k` rounding of a relaxed solution. Nodes with a nonzero score come
/// first; remaining slots are filled from zero-score nodes in the same order.
pub fn round_tkr(solution: &LpSolution, instance: &ProblemInstance<'_>) -> Result<VaccinationSet> {
    if !solution.is_optimal() {
        return Err(Error::Contract("top-k rounding needs an optimal relaxation".into()));
    }
    let score = scores(instance, &solution.values)?;
    let mut order = instance.candidates();
    order.sort_by_key(|&v| {
        let x = score[v.index()];
        (x <= SCORE_EPS, rank_key(instance, x, v))
    });
    Ok(order.into_iter().take(instance.target_size()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrpResult {
    pub set: VaccinationSet,
    /// Relaxed objective of each iteration's solve, before its pin is added.
    pub objectives: Vec<f64>,
}

/// Iterative rounding: solve, pin the best unpinned node to 1, repeat.
pub fn round_irp(instance: &ProblemInstance<'_>) -> Result<IrpResult> {
    let mut model = build_model(instance, true)?;
    let n = instance.n();
    let s = instance.topologies.len();
    let candidates = instance.candidates();
    let mut pinned = VaccinationSet::new();
    let mut objectives = Vec::new();
    for iteration in 0..instance.target_size() {
        let fail = |message: String| Error::Solver { iteration, message };
        let solution = solve(&model).map_err(|e| fail(e.to_string()))?;
        if !solution.is_optimal() {
            return Err(fail(format!("relaxation ended with status {:?}", solution.status)));
        }
        let score = scores(instance, &solution.values)?;
        let c = candidates
            .iter()
            .copied()
            .filter(|&v| !pinned.contains(v))
            .min_by_key(|&v| rank_key(instance, score[v.index()], v))
            .expect("target size leaves an unpinned candidate");
        objectives.push(solution.objective);
        pinned.insert(c);
        model = model.with_constraint(LinearRow::new(
            vec![(vaccination_var(n, s, c.index()), 1.0)],
            Relation::Eq,
            1.0,
        ));
    }
    Ok(IrpResult {
        set: pinned,
        objectives,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlpResult {
    pub set: VaccinationSet,
    /// Weighted expected infections at the optimum.
    pub objective: f64,
    pub solution: LpSolution,
}

/// Exact sampled program by branch-and-bound.
pub fn solve_blp(instance: &ProblemInstance<'_>) -> Result<BlpResult> {
    let model = build_model(instance, false)?;
    let options = SolveOptions {
        // With integral vaccinations the infection variables settle at 0/1,
        // so the objective is a multiple of 1/s.
        objective_grid: (!instance.topologies.is_weighted())
            .then(|| 1.0 / instance.topologies.len() as f64),
        ..SolveOptions::default()
    };
    let solution = solve_with(&model, &options)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Capacity => {
            return Err(Error::Capacity(format!(
                "branch-and-bound stopped after {} nodes",
                solution.nodes
            )))
        }
        LpStatus::Infeasible => {
            return Err(Error::Solver {
                iteration: solution.nodes,
                message: "vaccination program reported infeasible".into(),
            })
        }
    }
    let score = scores(instance, &solution.values)?;
    let set = instance
        .candidates()
        .into_iter()
        .filter(|v| score[v.index()] > 0.5)
        .collect();
    Ok(BlpResult {
        set,
        objective: solution.objective,
        solution,
    })
}

pub fn blp(instance: &ProblemInstance<'_>) -> Result<SolverResult> {
    let started = Instant::now();
    let r = solve_blp(instance)?;
    SolverResult::finish(instance, r.set, Algorithm::Blp, r.solution.nodes, started)
}

pub fn lp_tkr(instance: &ProblemInstance<'_>) -> Result<SolverResult> {
    let started = Instant::now();
    let relaxed = solve(&build_model(instance, true)?)?;
    let set = round_tkr(&relaxed, instance)?;
    SolverResult::finish(instance, set, Algorithm::LpTkr, 1, started)
}

pub fn lp_irp(instance: &ProblemInstance<'_>) -> Result<SolverResult> {
    let started = Instant::now();
    let r = round_irp(instance)?;
    let iterations = r.objectives.len();
    SolverResult::finish(instance, r.set, Algorithm::LpIrp, iterations, started)
}
