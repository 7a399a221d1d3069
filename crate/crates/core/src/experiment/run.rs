use std::time::Duration;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::heuristics::{greedy, hill_climb, local_search, Algorithm, SolverResult};
use crate::lp;
use crate::rng::{derive_seed, substream, Stream};
use crate::spread::{avg_saved, draw_infected, exhaustive_optimal, ProblemInstance, VaccinationSet};
use crate::topology::{sample, TopologySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowStatus {
    Ok,
    Capacity,
}

impl RowStatus {
    pub fn name(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Capacity => "capacity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(RowStatus::Ok),
            "capacity" => Ok(RowStatus::Capacity),
            other => Err(Error::Format(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub seed: u64,
    pub rep: usize,
    /// Budget fraction the row was run with.
    pub budget: f64,
    /// `None` when the solver stopped at a capacity limit.
    pub saved_avg: Option<f64>,
    pub saved_pct: Option<f64>,
    pub wall_time_s: f64,
    pub status: RowStatus,
}

/// A row plus what it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub row: ResultRow,
    pub topology_digest: String,
    pub set: Option<VaccinationSet>,
}

/// Count for a fraction of `n`, rounding halves up.
pub fn count_for(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Graph, infected nodes and topology sample of one repetition.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub rep: usize,
    pub graph: Graph,
    pub infected: Vec<NodeId>,
    pub topologies: TopologySet,
}

impl Scenario {
    pub fn budget_for(&self, fraction: f64) -> usize {
        count_for(fraction, self.graph.n()).min(self.graph.n() - self.infected.len())
    }

    pub fn instance(&self, k: usize) -> Result<ProblemInstance<'_>> {
        ProblemInstance::new(&self.graph, &self.infected, k, &self.topologies)
    }
}

pub fn topology_seed(seed: u64, rep: usize) -> u64 {
    derive_seed(seed, Stream::Topologies, rep as u64)
}

pub fn build_graph(config: &ExperimentConfig, rep: usize) -> Result<Graph> {
    let mut rng = substream(config.seed, Stream::Graph, rep as u64);
    config.generator.generate(config.model, &mut rng)
}

pub fn draw_scenario_infected(config: &ExperimentConfig, n: usize, rep: usize) -> Vec<NodeId> {
    let mut rng = substream(config.seed, Stream::Infected, rep as u64);
    draw_infected(n, count_for(config.infected_fraction, n), &mut rng)
}

pub fn build_scenario(config: &ExperimentConfig, rep: usize) -> Result<Scenario> {
    let graph = build_graph(config, rep)?;
    let infected = draw_scenario_infected(config, graph.n(), rep);
    let topologies = sample(&graph, config.samples, topology_seed(config.seed, rep))?;
    Ok(Scenario {
        rep,
        graph,
        infected,
        topologies,
    })
}

fn oracle(instance: &ProblemInstance<'_>) -> Result<SolverResult> {
    let started = std::time::Instant::now();
    let (set, _) = exhaustive_optimal(instance)?;
    let wall_time = started.elapsed();
    let spread = avg_saved(instance, &set)?;
    Ok(SolverResult {
        set,
        avg_saved: spread.avg_saved,
        per_topology_saved: spread.per_topology_saved,
        wall_time,
        iterations: 1,
        algorithm: Algorithm::Oracle,
    })
}

/// Runs `algorithms` on one scenario at budget fraction `budget`. Local
/// search and hill climbing start from the greedy solution; greedy is run
/// once and shared. Capacity failures become rows instead of errors.
pub fn run_scenario(
    config: &ExperimentConfig,
    scenario: &Scenario,
    budget: f64,
    algorithms: &[Algorithm],
) -> Result<Vec<RunRecord>> {
    let k = scenario.budget_for(budget);
    let instance = scenario.instance(k)?;
    let n = instance.n();
    let digest = scenario.topologies.digest();
    let needs_greedy = algorithms
        .iter()
        .any(|a| matches!(a, Algorithm::Greedy | Algorithm::Ls | Algorithm::Hc));
    let greedy_result = if needs_greedy {
        Some(greedy(&instance)?)
    } else {
        None
    };
    let mut algorithms = algorithms.to_vec();
    algorithms.sort();
    algorithms.dedup();
    let mut out = Vec::with_capacity(algorithms.len());
    for alg in algorithms {
        let start_set = || &greedy_result.as_ref().expect("greedy ran").set;
        let result = match alg {
            Algorithm::Greedy => Ok(greedy_result.clone().expect("greedy ran")),
            Algorithm::Ls => local_search(&instance, start_set()),
            Algorithm::Hc => hill_climb(&instance, start_set()),
            Algorithm::Blp => lp::blp(&instance),
            Algorithm::LpTkr => lp::lp_tkr(&instance),
            Algorithm::LpIrp => lp::lp_irp(&instance),
            Algorithm::Oracle => oracle(&instance),
        };
        let row = |saved: Option<f64>, wall: Duration, status| ResultRow {
            algorithm: alg,
            n,
            k,
            s: scenario.topologies.len(),
            seed: config.seed,
            rep: scenario.rep,
            budget,
            saved_avg: saved,
            saved_pct: saved.map(|v| 100.0 * v / n as f64),
            wall_time_s: wall.as_secs_f64(),
            status,
        };
        out.push(match result {
            Ok(r) => RunRecord {
                row: row(Some(r.avg_saved), r.wall_time, RowStatus::Ok),
                topology_digest: digest.clone(),
                set: Some(r.set),
            },
            Err(Error::Capacity(_)) => RunRecord {
                row: row(None, Duration::ZERO, RowStatus::Capacity),
                topology_digest: digest.clone(),
                set: None,
            },
            Err(e) => return Err(e),
        });
    }
    Ok(out)
}

fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        let (a, b) = (&a.row, &b.row);
        a.rep
            .cmp(&b.rep)
            .then(a.budget.total_cmp(&b.budget))
            .then(a.algorithm.cmp(&b.algorithm))
    });
}

/// One scenario per repetition, every requested algorithm on it.
/// Repetitions run on the current rayon pool.
pub fn run_experiment_records(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let per_rep: Vec<Vec<RunRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let scenario = build_scenario(config, rep)?;
            run_scenario(config, &scenario, config.budget_fraction, &config.algorithms)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<RunRecord> = per_rep.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_records(config)?
        .into_iter()
        .map(|r| r.row)
        .collect())
}

/// Every budget fraction on the same scenario (graph, infected nodes and
/// topologies) within each repetition.
pub fn sweep_budget(config: &ExperimentConfig, budgets: &[f64]) -> Result<Vec<ResultRow>> {
    let mut c = config.clone();
    c.budgets = budgets.to_vec();
    c.validate()?;
    if budgets.is_empty() {
        return Err(Error::Config("no budgets to sweep".into()));
    }
    let per_rep: Vec<Vec<RunRecord>> = (0..c.repetitions)
        .into_par_iter()
        .map(|rep| {
            let scenario = build_scenario(&c, rep)?;
            let mut out = Vec::new();
            for &b in budgets {
                out.extend(run_scenario(&c, &scenario, b, &c.algorithms)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<RunRecord> = per_rep.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records.into_iter().map(|r| r.row).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispersion {
    pub algorithm: Algorithm,
    pub s: usize,
    pub executions: usize,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Dispersion {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7").
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Execution `rep` for sample count `s` draws its own topologies.
pub fn sweep_topology_seed(seed: u64, s: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(seed, Stream::Topologies, s as u64), Stream::Misc, rep as u64)
}

/// For each sample count, `repetitions` executions on one fixed graph and
/// infected set, each with freshly drawn topologies.
pub fn sweep_samples(
    config: &ExperimentConfig,
    sample_counts: &[usize],
) -> Result<(Vec<ResultRow>, Vec<Dispersion>)> {
    let mut c = config.clone();
    c.sample_counts = sample_counts.to_vec();
    c.validate()?;
    if sample_counts.is_empty() {
        return Err(Error::Config("no sample counts to sweep".into()));
    }
    let graph = build_graph(&c, 0)?;
    let infected = draw_scenario_infected(&c, graph.n(), 0);
    let jobs: Vec<(usize, usize)> = sample_counts
        .iter()
        .flat_map(|&s| (0..c.repetitions).map(move |rep| (s, rep)))
        .collect();
    let per_job: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(s, rep)| {
            let scenario = Scenario {
                rep,
                graph: graph.clone(),
                infected: infected.clone(),
                topologies: sample(&graph, s, sweep_topology_seed(c.seed, s, rep))?,
            };
            run_scenario(&c, &scenario, c.budget_fraction, &c.algorithms)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<RunRecord> = per_job.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.row.s, r.row.rep, r.row.algorithm));
    let rows: Vec<ResultRow> = records.into_iter().map(|r| r.row).collect();

    let mut stats = Vec::new();
    for &s in sample_counts {
        let mut algorithms = c.algorithms.clone();
        algorithms.sort();
        algorithms.dedup();
        for alg in algorithms {
            let mut saved: Vec<f64> = rows
                .iter()
                .filter(|r| r.s == s && r.algorithm == alg)
                .filter_map(|r| r.saved_avg)
                .collect();
            if saved.is_empty() {
                continue;
            }
            saved.sort_by(f64::total_cmp);
            stats.push(Dispersion {
                algorithm: alg,
                s,
                executions: saved.len(),
                mean: saved.iter().sum::<f64>() / saved.len() as f64,
                q1: quantile(&saved, 0.25),
                q3: quantile(&saved, 0.75),
            });
        }
    }
    Ok((rows, stats))
}
