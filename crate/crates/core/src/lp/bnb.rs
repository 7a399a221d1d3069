//! Best-bound branch-and-bound over the integral variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::model::LpModel;
use super::{solve_relaxation, LpSolution, LpStatus, RelaxOutcome, SolveOptions};
use crate::error::{Error, Result};

const INTEGRALITY_TOL: f64 = 1e-6;
const PRUNE_TOL: f64 = 1e-9;

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    /// Bound overrides `(var, lo, hi)` accumulated from the root.
    changes: Vec<(usize, f64, f64)>,
    values: Vec<f64>,
}

// BinaryHeap is a max-heap: "greater" means popped first, i.e. lower bound,
// then deeper, then older.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

/// Most fractional integral variable; lowest index on ties.
fn branch_var(model: &LpModel, values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &v in &model.integral {
        let x = values[v];
        let frac = (x - x.floor()).min(x.ceil() - x);
        if frac > INTEGRALITY_TOL && best.map_or(true, |(_, _, f)| frac > f) {
            best = Some((v, x, frac));
        }
    }
    best.map(|(v, x, _)| (v, x))
}

fn snapped(model: &LpModel, mut values: Vec<f64>) -> Vec<f64> {
    for &v in &model.integral {
        values[v] = values[v].round();
    }
    values
}

pub(crate) fn branch_and_bound(model: &LpModel, options: &SolveOptions) -> Result<LpSolution> {
    let effective = |bound: f64| match options.objective_grid {
        Some(g) if g > 0.0 => ((bound - 1e-7) / g).ceil() * g,
        _ => bound,
    };
    let relax = |changes: &[(usize, f64, f64)]| {
        let mut bounds = model.bounds.clone();
        for &(v, lo, hi) in changes {
            bounds[v] = (lo, hi);
        }
        solve_relaxation(model, &bounds, options.backend)
    };
    let unbounded = |nodes: usize| Error::Solver {
        iteration: nodes,
        message: "relaxation is unbounded".into(),
    };

    let mut nodes = 1;
    let mut seq = 0;
    let (values, objective) = match relax(&[])? {
        RelaxOutcome::Optimal { values, objective } => (values, objective),
        RelaxOutcome::Infeasible => return Ok(LpSolution::without_point(LpStatus::Infeasible, 1)),
        RelaxOutcome::IterationLimit => return Ok(LpSolution::without_point(LpStatus::Capacity, 1)),
        RelaxOutcome::Unbounded => return Err(unbounded(1)),
    };
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut offer = |values: Vec<f64>,
                     objective: f64,
                     depth: usize,
                     changes: Vec<(usize, f64, f64)>,
                     incumbent: &mut Option<(f64, Vec<f64>)>,
                     heap: &mut BinaryHeap<Node>| {
        if branch_var(model, &values).is_none() {
            if incumbent.as_ref().map_or(true, |(best, _)| objective < *best - PRUNE_TOL) {
                *incumbent = Some((objective, values));
            }
            return;
        }
        seq += 1;
        heap.push(Node {
            bound: objective,
            depth,
            seq,
            changes,
            values,
        });
    };
    offer(values, objective, 0, Vec::new(), &mut incumbent, &mut heap);

    let capacity = |incumbent: Option<(f64, Vec<f64>)>, nodes: usize| match incumbent {
        Some((objective, values)) => LpSolution {
            status: LpStatus::Capacity,
            values: snapped(model, values),
            objective,
            nodes,
        },
        None => LpSolution::without_point(LpStatus::Capacity, nodes),
    };

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if effective(node.bound) >= *best - PRUNE_TOL {
                continue;
            }
        }
        let (var, x) = branch_var(model, &node.values).expect("queued nodes are fractional");
        let (lo, hi) = node
            .changes
            .iter()
            .rev()
            .find(|c| c.0 == var)
            .map_or(model.bounds[var], |c| (c.1, c.2));
        // up branch first
        for (clo, chi) in [(x.ceil(), hi), (lo, x.floor())] {
            if nodes >= options.node_cap {
                return Ok(capacity(incumbent, nodes));
            }
            nodes += 1;
            let mut changes = node.changes.clone();
            changes.push((var, clo, chi));
            match relax(&changes)? {
                RelaxOutcome::Optimal { values, objective } => {
                    let dominated = incumbent
                        .as_ref()
                        .is_some_and(|(best, _)| effective(objective) >= *best - PRUNE_TOL);
                    if !dominated {
                        offer(values, objective, node.depth + 1, changes, &mut incumbent, &mut heap);
                    }
                }
                RelaxOutcome::Infeasible => {}
                RelaxOutcome::IterationLimit => return Ok(capacity(incumbent, nodes)),
                RelaxOutcome::Unbounded => return Err(unbounded(nodes)),
            }
        }
    }

    match incumbent {
        Some((_, values)) => {
            let values = snapped(model, values);
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: model.objective_value(&values),
                values,
                nodes,
            })
        }
        None => Ok(LpSolution::without_point(LpStatus::Infeasible, nodes)),
    }
}
