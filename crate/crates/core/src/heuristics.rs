//! Greedy construction and swap-based improvement.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::spread::{avg_saved, Evaluator, ProblemInstance, VaccinationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Greedy,
    Ls,
    Hc,
    Blp,
    LpTkr,
    LpIrp,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Greedy,
        Algorithm::Ls,
        Algorithm::Hc,
        Algorithm::Blp,
        Algorithm::LpTkr,
        Algorithm::LpIrp,
        Algorithm::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Ls => "ls",
            Algorithm::Hc => "hc",
            Algorithm::Blp => "blp",
            Algorithm::LpTkr => "lp_tkr",
            Algorithm::LpIrp => "lp_irp",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub set: VaccinationSet,
    pub avg_saved: f64,
    pub per_topology_saved: Vec<usize>,
    pub wall_time: Duration,
    pub iterations: usize,
    pub algorithm: Algorithm,
}

impl SolverResult {
    pub(crate) fn finish(
        instance: &ProblemInstance<'_>,
        set: VaccinationSet,
        algorithm: Algorithm,
        iterations: usize,
        started: Instant,
    ) -> Result<Self> {
        let wall_time = started.elapsed();
        let spread = avg_saved(instance, &set)?;
        Ok(SolverResult {
            set,
            avg_saved: spread.avg_saved,
            per_topology_saved: spread.per_topology_saved,
            wall_time,
            iterations,
            algorithm,
        })
    }
}

/// Adds, `min(k, n - |I|)` times, the node whose addition saves the most;
/// lowest index wins ties.
pub fn greedy(instance: &ProblemInstance<'_>) -> Result<SolverResult> {
    let started = Instant::now();
    let chosen = greedy_order(instance, instance.target_size())?;
    let iterations = chosen.len();
    SolverResult::finish(
        instance,
        chosen.into_iter().collect(),
        Algorithm::Greedy,
        iterations,
        started,
    )
}

/// Greedy picks in the order they are made, for `steps` steps (capped at
/// the number of candidates). The budget itself is not consulted, so the
/// first `k` entries are exactly the greedy set for budget `k`.
pub fn greedy_order(instance: &ProblemInstance<'_>, steps: usize) -> Result<Vec<NodeId>> {
    let candidates = instance.candidates();
    let steps = steps.min(candidates.len());
    let mut chosen: Vec<NodeId> = Vec::with_capacity(steps);
    let mut taken = vec![false; instance.n()];
    let mut eval = Evaluator::new(instance);
    for _ in 0..steps {
        let mut best: Option<(NodeId, f64)> = None;
        for &v in &candidates {
            if taken[v.index()] {
                continue;
            }
            let score = eval.score_with(&chosen, v);
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((v, score));
            }
        }
        let (v, _) = best.expect("steps leave a candidate");
        taken[v.index()] = true;
        chosen.push(v);
    }
    Ok(chosen)
}

fn check_start(instance: &ProblemInstance<'_>, start: &VaccinationSet) -> Result<()> {
    instance
        .check_feasible(start)
        .map_err(|e| Error::Contract(format!("infeasible starting set: {e}")))
}

/// Swaps a vaccinated node for one of its graph neighbors. Each pass keeps
/// the best strictly improving swap seen so far and applies it at the end of
/// the pass; stops after a pass without improvement.
pub fn local_search(instance: &ProblemInstance<'_>, start: &VaccinationSet) -> Result<SolverResult> {
    check_start(instance, start)?;
    let started = Instant::now();
    let infected = instance.infected_mask();
    let mut eval = Evaluator::new(instance);
    let mut current = start.clone();
    let mut passes = 0;
    loop {
        passes += 1;
        let members = current.to_vec();
        let mut temp = current.clone();
        let mut temp_score = eval.score(&members);
        let mut converged = true;
        for &v in &members {
            for u in instance.graph.undirected_neighbors(v) {
                if current.contains(u) || infected[u.index()] {
                    continue;
                }
                let score = eval.score_swap(&members, v, u);
                if temp_score < score {
                    converged = false;
                    temp = current.swapped(v, u);
                    temp_score = score;
                }
            }
        }
        current = temp;
        if converged {
            break;
        }
    }
    SolverResult::finish(instance, current, Algorithm::Ls, passes, started)
}

/// Applies the best strictly improving swap over all vaccinated/unvaccinated
/// pairs until none exists.
pub fn hill_climb(instance: &ProblemInstance<'_>, start: &VaccinationSet) -> Result<SolverResult> {
    check_start(instance, start)?;
    let started = Instant::now();
    let infected = instance.infected_mask();
    let mut eval = Evaluator::new(instance);
    let mut current = start.clone();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let members = current.to_vec();
        let base = eval.score(&members);
        let mut best: Option<(NodeId, NodeId, f64)> = None;
        for &v in &members {
            for u in (0..instance.n()).map(NodeId::from) {
                if current.contains(u) || infected[u.index()] {
                    continue;
                }
                let score = eval.score_swap(&members, v, u);
                if score > best.map_or(base, |b| b.2) {
                    best = Some((v, u, score));
                }
            }
        }
        match best {
            Some((v, u, _)) => current = current.swapped(v, u),
            None => break,
        }
    }
    SolverResult::finish(instance, current, Algorithm::Hc, rounds, started)
}
