//! Infection spread over live-edge topologies.
//!
//! On a fixed topology a node is infected exactly when it is reachable from an
//! initially infected node through non-vaccinated nodes. Everything here is
//! expressed in nodes *saved* (`n - infected`), which is what the solvers
//! maximize.

use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::topology::{Topology, TopologySet};

/// Largest number of candidate subsets `exhaustive_optimal` will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 2_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ProblemInstance<'a> {
    pub graph: &'a Graph,
    infected: &'a [NodeId],
    pub budget: usize,
    pub topologies: &'a TopologySet,
}

impl<'a> ProblemInstance<'a> {
    /// `infected` must be sorted, duplicate free, and within the graph.
    pub fn new(
        graph: &'a Graph,
        infected: &'a [NodeId],
        budget: usize,
        topologies: &'a TopologySet,
    ) -> Result<Self> {
        let n = graph.n();
        if topologies.n() != n {
            return Err(Error::Parameter(format!(
                "topologies over {} nodes for a graph of {n}",
                topologies.n()
            )));
        }
        if let Some(v) = infected.iter().find(|v| v.index() >= n) {
            return Err(Error::Range { node: v.index(), n });
        }
        if infected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "infected set must be sorted without duplicates".into(),
            ));
        }
        if budget > n - infected.len() {
            return Err(Error::Parameter(format!(
                "budget {budget} exceeds the {} non-infected nodes",
                n - infected.len()
            )));
        }
        Ok(ProblemInstance {
            graph,
            infected,
            budget,
            topologies,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn infected(&self) -> &'a [NodeId] {
        self.infected
    }

    pub fn infected_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for v in self.infected {
            mask[v.index()] = true;
        }
        mask
    }

    /// Non-infected nodes, ascending.
    pub fn candidates(&self) -> Vec<NodeId> {
        let mask = self.infected_mask();
        (0..self.n())
            .filter(|&v| !mask[v])
            .map(NodeId::from)
            .collect()
    }

    /// Size every solver must deliver: `min(k, n - |I|)`.
    pub fn target_size(&self) -> usize {
        self.budget.min(self.n() - self.infected.len())
    }

    /// Checks that `set` is disjoint from the infected nodes, in range, and
    /// within budget.
    pub fn check_feasible(&self, set: &VaccinationSet) -> Result<()> {
        let mask = self.infected_mask();
        for v in set.iter() {
            if v.index() >= self.n() {
                return Err(Error::Range {
                    node: v.index(),
                    n: self.n(),
                });
            }
            if mask[v.index()] {
                return Err(Error::Contract(format!("{v} is both infected and vaccinated")));
            }
        }
        if set.len() > self.budget {
            return Err(Error::Contract(format!(
                "{} vaccinations exceed budget {}",
                set.len(),
                self.budget
            )));
        }
        Ok(())
    }
}

/// Draws `count` infected nodes uniformly without replacement, sorted.
pub fn draw_infected<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = sample_indices(rng, n, count.min(n))
        .into_iter()
        .map(NodeId::from)
        .collect();
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VaccinationSet(BTreeSet<NodeId>);

impl VaccinationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: NodeId) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: NodeId) -> bool {
        self.0.remove(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.iter().collect()
    }

    /// `self - {out} + {inc}`.
    pub fn swapped(&self, out: NodeId, inc: NodeId) -> Self {
        let mut s = self.clone();
        s.remove(out);
        s.insert(inc);
        s
    }
}

impl FromIterator<NodeId> for VaccinationSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        VaccinationSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[u32; N]> for VaccinationSet {
    fn from(ids: [u32; N]) -> Self {
        ids.into_iter().map(NodeId).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadResult {
    /// Infected nodes summed over topologies.
    pub infected_count: usize,
    /// Saved nodes summed over topologies; `infected_count + saved_count = n * s`.
    pub saved_count: usize,
    pub per_topology_saved: Vec<usize>,
    /// Mean saved, weighted by topology probability when the set is enumerated.
    pub avg_saved: f64,
}

impl SpreadResult {
    pub fn avg_infected(&self, n: usize) -> f64 {
        n as f64 - self.avg_saved
    }
}

/// Breadth-first reachability with a reusable, epoch-stamped visitation buffer.
#[derive(Debug, Clone)]
pub struct Spreader {
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<u32>,
}

impl Spreader {
    pub fn new(n: usize) -> Self {
        Spreader {
            stamp: vec![0; n],
            epoch: 0,
            queue: Vec::with_capacity(n),
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Number of infected nodes. Vaccinated nodes are stamped up front so they
    /// are never entered; a seed that is also vaccinated is ignored.
    pub fn infected_count(
        &mut self,
        topology: &Topology,
        vaccinated: &[NodeId],
        seeds: &[NodeId],
    ) -> usize {
        if self.stamp.len() < topology.n() {
            self.stamp.resize(topology.n(), 0);
        }
        self.next_epoch();
        let epoch = self.epoch;
        for v in vaccinated {
            self.stamp[v.index()] = epoch;
        }
        self.queue.clear();
        for s in seeds {
            let s = s.index();
            if self.stamp[s] != epoch {
                self.stamp[s] = epoch;
                self.queue.push(s as u32);
            }
        }
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head] as usize;
            head += 1;
            for &w in topology.successors(u) {
                if self.stamp[w as usize] != epoch {
                    self.stamp[w as usize] = epoch;
                    self.queue.push(w);
                }
            }
        }
        self.queue.len()
    }

    pub fn saved_count(
        &mut self,
        topology: &Topology,
        vaccinated: &[NodeId],
        seeds: &[NodeId],
    ) -> usize {
        topology.n() - self.infected_count(topology, vaccinated, seeds)
    }

    /// Nodes infected by the last `infected_count` call, in visit order.
    pub fn last_infected(&self) -> &[u32] {
        &self.queue
    }
}

fn check_disjoint(vaccinated: &VaccinationSet, infected: &[NodeId]) -> Result<()> {
    match infected.iter().find(|v| vaccinated.contains(**v)) {
        Some(v) => Err(Error::Contract(format!("{v} is both infected and vaccinated"))),
        None => Ok(()),
    }
}

pub fn infected_on(
    topology: &Topology,
    vaccinated: &VaccinationSet,
    infected: &[NodeId],
) -> Result<BTreeSet<NodeId>> {
    check_disjoint(vaccinated, infected)?;
    let mut sp = Spreader::new(topology.n());
    sp.infected_count(topology, &vaccinated.to_vec(), infected);
    Ok(sp.last_infected().iter().map(|&v| NodeId(v)).collect())
}

pub fn saved_on(topology: &Topology, vaccinated: &VaccinationSet, infected: &[NodeId]) -> Result<usize> {
    Ok(topology.n() - infected_on(topology, vaccinated, infected)?.len())
}

/// Scores a candidate set across a topology set. Unweighted sets are summed
/// as integers so equal totals compare exactly.
pub struct Evaluator<'a> {
    instance: &'a ProblemInstance<'a>,
    weights: Option<Vec<f64>>,
    spreader: Spreader,
    scratch: Vec<NodeId>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a ProblemInstance<'a>) -> Self {
        let weights = instance
            .topologies
            .is_weighted()
            .then(|| instance.topologies.weights());
        Evaluator {
            instance,
            weights,
            spreader: Spreader::new(instance.n()),
            scratch: Vec::new(),
        }
    }

    /// Total saved (or probability-weighted saved) for `vaccinated`.
    pub fn score(&mut self, vaccinated: &[NodeId]) -> f64 {
        let seeds = self.instance.infected();
        let topologies = self.instance.topologies.topologies();
        match &self.weights {
            None => {
                let total: usize = topologies
                    .iter()
                    .map(|t| self.spreader.saved_count(t, vaccinated, seeds))
                    .sum();
                total as f64
            }
            Some(w) => topologies
                .iter()
                .zip(w)
                .map(|(t, &mu)| mu * self.spreader.saved_count(t, vaccinated, seeds) as f64)
                .sum(),
        }
    }

    pub fn score_set(&mut self, set: &VaccinationSet) -> f64 {
        self.scratch.clear();
        self.scratch.extend(set.iter());
        let v = std::mem::take(&mut self.scratch);
        let s = self.score(&v);
        self.scratch = v;
        s
    }

    /// Score of `set + {extra}`.
    pub fn score_with(&mut self, set: &[NodeId], extra: NodeId) -> f64 {
        let mut v = std::mem::take(&mut self.scratch);
        v.clear();
        v.extend_from_slice(set);
        v.push(extra);
        let s = self.score(&v);
        self.scratch = v;
        s
    }

    /// Score of `set - {out} + {inc}`.
    pub fn score_swap(&mut self, set: &[NodeId], out: NodeId, inc: NodeId) -> f64 {
        let mut v = std::mem::take(&mut self.scratch);
        v.clear();
        v.extend(set.iter().copied().filter(|&x| x != out));
        v.push(inc);
        let s = self.score(&v);
        self.scratch = v;
        s
    }
}

pub fn avg_saved(instance: &ProblemInstance<'_>, vaccinated: &VaccinationSet) -> Result<SpreadResult> {
    check_disjoint(vaccinated, instance.infected())?;
    if let Some(v) = vaccinated.iter().find(|v| v.index() >= instance.n()) {
        return Err(Error::Range {
            node: v.index(),
            n: instance.n(),
        });
    }
    let n = instance.n();
    let set = vaccinated.to_vec();
    let mut sp = Spreader::new(n);
    let per_topology_saved: Vec<usize> = instance
        .topologies
        .topologies()
        .iter()
        .map(|t| sp.saved_count(t, &set, instance.infected()))
        .collect();
    let s = per_topology_saved.len();
    let saved_count: usize = per_topology_saved.iter().sum();
    let avg_saved = if s == 0 {
        0.0
    } else if instance.topologies.is_weighted() {
        let w = instance.topologies.weights();
        let total: f64 = w.iter().sum();
        per_topology_saved
            .iter()
            .zip(&w)
            .map(|(&c, &mu)| mu * c as f64)
            .sum::<f64>()
            / total
    } else {
        saved_count as f64 / s as f64
    };
    Ok(SpreadResult {
        infected_count: n * s - saved_count,
        saved_count,
        per_topology_saved,
        avg_saved,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// Brute-force optimum over all subsets of size `min(k, n - |I|)`; the first
/// best subset in lexicographic order wins.
pub fn exhaustive_optimal(instance: &ProblemInstance<'_>) -> Result<(VaccinationSet, f64)> {
    let candidates = instance.candidates();
    let size = instance.target_size();
    let count = binomial(candidates.len(), size);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity(format!(
            "C({}, {size}) = {count} subsets exceed the exhaustive guard",
            candidates.len()
        )));
    }
    let mut eval = Evaluator::new(instance);
    let mut idx: Vec<usize> = (0..size).collect();
    let mut chosen = Vec::with_capacity(size);
    let mut best: Option<(Vec<NodeId>, f64)> = None;
    loop {
        chosen.clear();
        chosen.extend(idx.iter().map(|&i| candidates[i]));
        let score = eval.score(&chosen);
        if best.as_ref().map_or(true, |(_, b)| score > *b) {
            best = Some((chosen.clone(), score));
        }
        // next combination in lexicographic order
        let mut i = size;
        loop {
            if i == 0 {
                let (set, _) = best.expect("at least one subset");
                let set: VaccinationSet = set.into_iter().collect();
                let value = avg_saved(instance, &set)?.avg_saved;
                return Ok((set, value));
            }
            i -= 1;
            if idx[i] < candidates.len() - size + i {
                idx[i] += 1;
                for j in i + 1..size {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `A ⊂ B`, `v ∉ B ∪ I`, with the marginal gains of `v` on each.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub topology: Topology,
    pub infected: Vec<NodeId>,
    pub a: VaccinationSet,
    pub b: VaccinationSet,
    pub v: NodeId,
    pub gain_a: usize,
    pub gain_b: usize,
}

impl Witness {
    /// Recomputes both gains from scratch.
    pub fn verify(&self) -> Result<(usize, usize)> {
        let gain = |s: &VaccinationSet| -> Result<usize> {
            let mut with = s.clone();
            with.insert(self.v);
            Ok(saved_on(&self.topology, &with, &self.infected)? - saved_on(&self.topology, s, &self.infected)?)
        };
        Ok((gain(&self.a)?, gain(&self.b)?))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModularityWitnesses {
    /// `gain(A, v) > gain(B, v)`: rules out supermodularity.
    pub diminishing: Option<Witness>,
    /// `gain(A, v) < gain(B, v)`: rules out submodularity.
    pub increasing: Option<Witness>,
    pub trials_used: usize,
}

impl ModularityWitnesses {
    pub fn complete(&self) -> bool {
        self.diminishing.is_some() && self.increasing.is_some()
    }
}

/// Marginal saved gain of `v` on top of `base`.
pub fn marginal_gain(
    topology: &Topology,
    infected: &[NodeId],
    base: &VaccinationSet,
    v: NodeId,
) -> Result<usize> {
    let mut with = base.clone();
    with.insert(v);
    Ok(saved_on(topology, &with, infected)? - saved_on(topology, base, infected)?)
}

/// Randomized search over small directed topologies for set pairs whose
/// marginal gains violate submodularity and supermodularity.
pub fn find_modularity_witness<R: Rng + ?Sized>(
    max_n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ModularityWitnesses> {
    if max_n < 5 {
        return Err(Error::Parameter(format!("max_n {max_n} must be >= 5")));
    }
    let mut out = ModularityWitnesses::default();
    for trial in 0..trials {
        out.trials_used = trial + 1;
        let n = rng.gen_range(5..=max_n);
        let density = rng.gen_range(0.1..0.5);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen::<f64>() < density {
                    edges.push((NodeId::from(i), NodeId::from(j)));
                }
            }
        }
        let topology = Topology::new(n, edges, None)?;
        let seeds = rng.gen_range(1..=2);
        let infected = draw_infected(n, seeds, rng);
        let mut free: Vec<NodeId> = (0..n)
            .map(NodeId::from)
            .filter(|v| !infected.contains(v))
            .collect();
        // v, then B's members in random order; A is a prefix of B
        for i in (1..free.len()).rev() {
            free.swap(i, rng.gen_range(0..=i));
        }
        let v = free[0];
        let b_size = rng.gen_range(1..free.len());
        let a_size = rng.gen_range(0..b_size);
        let b: VaccinationSet = free[1..=b_size].iter().copied().collect();
        let a: VaccinationSet = free[1..=a_size].iter().copied().collect();
        let gain_a = marginal_gain(&topology, &infected, &a, v)?;
        let gain_b = marginal_gain(&topology, &infected, &b, v)?;
        let witness = || Witness {
            topology: topology.clone(),
            infected: infected.clone(),
            a: a.clone(),
            b: b.clone(),
            v,
            gain_a,
            gain_b,
        };
        if gain_a > gain_b && out.diminishing.is_none() {
            out.diminishing = Some(witness());
        } else if gain_a < gain_b && out.increasing.is_none() {
            out.increasing = Some(witness());
        }
        if out.complete() {
            break;
        }
    }
    Ok(out)
}
