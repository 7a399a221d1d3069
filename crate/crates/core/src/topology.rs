//! Live-edge topologies: unweighted realizations of the diffusion process.
//!
//! A linear-threshold realization keeps at most one incoming edge per node,
//! chosen with probability equal to its weight; an independent-cascade
//! realization keeps each edge independently with its probability. Topology
//! `i` of a sampled set is drawn from its own stream, so it does not depend on
//! how many topologies were requested.

use std::path::Path;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{fmt_real, parse_field, DiffusionModel, Graph, NodeId};
use crate::rng::{substream, Stream};

/// Upper limit on the number of topologies `enumerate_all` will produce.
pub const ENUMERATION_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    live_edges: Vec<(NodeId, NodeId)>,
    mu: Option<f64>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Topology {
    pub fn new(n: usize, mut live_edges: Vec<(NodeId, NodeId)>, mu: Option<f64>) -> Result<Self> {
        if let Some(m) = mu {
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::Parameter(format!("topology probability {m} outside (0,1]")));
            }
        }
        for &(s, d) in &live_edges {
            for v in [s, d] {
                if v.index() >= n {
                    return Err(Error::Range { node: v.index(), n });
                }
            }
        }
        live_edges.sort_unstable();
        live_edges.dedup();
        let mut offsets = vec![0u32; n + 1];
        for &(s, _) in &live_edges {
            offsets[s.index() + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let targets = live_edges.iter().map(|&(_, d)| d.0).collect();
        Ok(Topology {
            n,
            live_edges,
            mu,
            offsets,
            targets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn live_edges(&self) -> &[(NodeId, NodeId)] {
        &self.live_edges
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    /// Live out-neighbors of `v` as raw indices.
    #[inline]
    pub fn successors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn max_in_degree(&self) -> usize {
        let mut indeg = vec![0usize; self.n];
        for &(_, d) in &self.live_edges {
            indeg[d.index()] += 1;
        }
        indeg.into_iter().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologySet {
    n: usize,
    topologies: Vec<Topology>,
    source_graph_hash: String,
    seed: u64,
}

impl TopologySet {
    pub fn new(
        n: usize,
        topologies: Vec<Topology>,
        source_graph_hash: String,
        seed: u64,
    ) -> Result<Self> {
        if let Some(t) = topologies.iter().find(|t| t.n != n) {
            return Err(Error::Parameter(format!(
                "topology over {} nodes in a set over {n}",
                t.n
            )));
        }
        Ok(TopologySet {
            n,
            topologies,
            source_graph_hash,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.topologies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topologies.is_empty()
    }

    pub fn topologies(&self) -> &[Topology] {
        &self.topologies
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source_graph_hash(&self) -> &str {
        &self.source_graph_hash
    }

    /// True when every topology carries an exact probability.
    pub fn is_weighted(&self) -> bool {
        !self.topologies.is_empty() && self.topologies.iter().all(|t| t.mu.is_some())
    }

    /// Objective weight of each topology: its probability when enumerated,
    /// otherwise `1/s`.
    pub fn weights(&self) -> Vec<f64> {
        let s = self.topologies.len() as f64;
        if self.is_weighted() {
            self.topologies.iter().map(|t| t.mu.unwrap()).collect()
        } else {
            vec![1.0 / s; self.topologies.len()]
        }
    }

    /// The first `s` topologies; with per-index streams this equals sampling `s`.
    pub fn prefix(&self, s: usize) -> TopologySet {
        TopologySet {
            n: self.n,
            topologies: self.topologies[..s.min(self.len())].to_vec(),
            source_graph_hash: self.source_graph_hash.clone(),
            seed: self.seed,
        }
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "toposet {} {} {}", self.n, self.len(), self.seed).unwrap();
        if !self.source_graph_hash.is_empty() {
            writeln!(out, "source {}", self.source_graph_hash).unwrap();
        }
        for (i, t) in self.topologies.iter().enumerate() {
            match t.mu {
                Some(mu) => writeln!(out, "topo {i} {}", fmt_real(mu)).unwrap(),
                None => writeln!(out, "topo {i}").unwrap(),
            }
            for &(s, d) in &t.live_edges {
                writeln!(out, "e {} {}", s.0, d.0).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::Format("missing toposet header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "toposet" {
            return Err(Error::parse(hline, "expected `toposet <n> <s> <seed>`"));
        }
        let n: usize = parse_field(hline, h[1])?;
        let s: usize = parse_field(hline, h[2])?;
        let seed: u64 = parse_field(hline, h[3])?;
        let mut hash = String::new();
        if let Some((_, l)) = lines.peek() {
            if let Some(rest) = l.strip_prefix("source ") {
                hash = rest.trim().to_string();
                lines.next();
            }
        }

        let mut topologies = Vec::with_capacity(s);
        let mut current: Option<(usize, Option<f64>, Vec<(NodeId, NodeId)>)> = None;
        let finish = |cur: Option<(usize, Option<f64>, Vec<(NodeId, NodeId)>)>,
                          topologies: &mut Vec<Topology>|
         -> Result<()> {
            if let Some((line, mu, edges)) = cur {
                let t = Topology::new(n, edges, mu).map_err(|e| Error::parse(line, e.to_string()))?;
                topologies.push(t);
            }
            Ok(())
        };
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                ["topo", idx, rest @ ..] => {
                    finish(current.take(), &mut topologies)?;
                    let idx: usize = parse_field(line, idx)?;
                    if idx != topologies.len() {
                        return Err(Error::parse(
                            line,
                            format!("topology index {idx}, expected {}", topologies.len()),
                        ));
                    }
                    let mu = match rest {
                        [] => None,
                        [mu] => Some(parse_field(line, mu)?),
                        _ => return Err(Error::parse(line, "expected `topo <index> [mu]`")),
                    };
                    current = Some((line, mu, Vec::new()));
                }
                ["e", s, d] => {
                    let (s, d): (usize, usize) = (parse_field(line, s)?, parse_field(line, d)?);
                    if s >= n || d >= n {
                        return Err(Error::parse(line, format!("edge endpoint >= {n}")));
                    }
                    match current.as_mut() {
                        Some((_, _, edges)) => edges.push((s.into(), d.into())),
                        None => return Err(Error::parse(line, "edge before any `topo` line")),
                    }
                }
                _ => return Err(Error::parse(line, format!("unrecognized line {l:?}"))),
            }
        }
        finish(current.take(), &mut topologies)?;
        if topologies.len() != s {
            return Err(Error::Format(format!(
                "header declares {s} topologies, found {}",
                topologies.len()
            )));
        }
        TopologySet::new(n, topologies, hash, seed)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TopologySet::from_text(&text)
    }

    /// SHA-256 over the text serialization; identifies a sample set across programs.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn require(graph: &Graph, model: DiffusionModel) -> Result<()> {
    if graph.model() != model {
        return Err(Error::Model {
            expected: model,
            found: graph.model(),
        });
    }
    let report = graph.validate();
    if !report.ok() {
        return Err(Error::Contract(format!(
            "graph fails validation: {}",
            report.violations[0].detail
        )));
    }
    Ok(())
}

/// One linear-threshold realization: per node, a single uniform draw
/// inverse-CDF over incoming edges in ascending source order.
pub fn sample_lt_one<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Vec<(NodeId, NodeId)> {
    let mut live = Vec::new();
    for j in 0..graph.n() {
        let j = NodeId::from(j);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for e in graph.incoming_edges(j) {
            acc += e.value;
            if u < acc {
                live.push((e.src, j));
                break;
            }
        }
    }
    live
}

pub fn sample_ic_one<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Vec<(NodeId, NodeId)> {
    graph
        .edges()
        .iter()
        .filter(|e| rng.gen::<f64>() < e.value)
        .map(|e| (e.src, e.dst))
        .collect()
}

pub fn sample_lt(graph: &Graph, s: usize, seed: u64) -> Result<TopologySet> {
    require(graph, DiffusionModel::LinearThreshold)?;
    sample_with(graph, s, seed, |g, rng| sample_lt_one(g, rng))
}

pub fn sample_ic(graph: &Graph, s: usize, seed: u64) -> Result<TopologySet> {
    require(graph, DiffusionModel::IndependentCascade)?;
    sample_with(graph, s, seed, |g, rng| sample_ic_one(g, rng))
}

/// Samples with whichever rule matches the graph's model.
pub fn sample(graph: &Graph, s: usize, seed: u64) -> Result<TopologySet> {
    match graph.model() {
        DiffusionModel::LinearThreshold => sample_lt(graph, s, seed),
        DiffusionModel::IndependentCascade => sample_ic(graph, s, seed),
    }
}

fn sample_with(
    graph: &Graph,
    s: usize,
    seed: u64,
    draw: impl Fn(&Graph, &mut crate::rng::Rng) -> Vec<(NodeId, NodeId)>,
) -> Result<TopologySet> {
    let topologies = (0..s)
        .map(|i| {
            let mut rng = substream(seed, Stream::Topologies, i as u64);
            Topology::new(graph.n(), draw(graph, &mut rng), None)
        })
        .collect::<Result<Vec<_>>>()?;
    TopologySet::new(graph.n(), topologies, graph.digest(), seed)
}

/// Every achievable topology with its exact probability.
pub fn enumerate_all(graph: &Graph) -> Result<TopologySet> {
    let report = graph.validate();
    if !report.ok() {
        return Err(Error::Contract(format!(
            "graph fails validation: {}",
            report.violations[0].detail
        )));
    }
    // Each unit contributes one independent choice: a node's incoming live
    // edge (LT) or an edge's state (IC). Zero-probability choices are omitted.
    let units: Vec<Vec<(Option<(NodeId, NodeId)>, f64)>> = match graph.model() {
        DiffusionModel::LinearThreshold => (0..graph.n())
            .map(|j| {
                let j = NodeId::from(j);
                let mut choices = Vec::new();
                let mut total = 0.0;
                for e in graph.incoming_edges(j) {
                    total += e.value;
                    if e.value > 0.0 {
                        choices.push((Some((e.src, j)), e.value));
                    }
                }
                let none = 1.0 - total;
                if none > 0.0 {
                    choices.insert(0, (None, none));
                }
                choices
            })
            .collect(),
        DiffusionModel::IndependentCascade => {
            if graph.m() > 20 {
                return Err(Error::Capacity(format!(
                    "{} edges exceed the 20-edge enumeration guard",
                    graph.m()
                )));
            }
            graph
                .edges()
                .iter()
                .map(|e| {
                    let mut choices = Vec::new();
                    if e.value < 1.0 {
                        choices.push((None, 1.0 - e.value));
                    }
                    if e.value > 0.0 {
                        choices.push((Some((e.src, e.dst)), e.value));
                    }
                    choices
                })
                .collect()
        }
    };
    // The LT guard is stated over indeg + 1 choices per node, before pruning.
    let bound = match graph.model() {
        DiffusionModel::LinearThreshold => (0..graph.n()).fold(1u64, |acc, j| {
            acc.saturating_mul(graph.in_degree(NodeId::from(j)) as u64 + 1)
        }),
        DiffusionModel::IndependentCascade => 1u64 << graph.m(),
    };
    if bound > ENUMERATION_LIMIT {
        return Err(Error::Capacity(format!(
            "{bound} topologies exceed the enumeration guard of {ENUMERATION_LIMIT}"
        )));
    }
    let units: Vec<_> = units.into_iter().filter(|c| !c.is_empty()).collect();
    let mut topologies = Vec::new();
    let mut digits = vec![0usize; units.len()];
    loop {
        let mut mu = 1.0;
        let mut live = Vec::new();
        for (unit, &d) in units.iter().zip(&digits) {
            let (edge, p) = unit[d];
            mu *= p;
            if let Some(e) = edge {
                live.push(e);
            }
        }
        if mu > 0.0 {
            topologies.push(Topology::new(graph.n(), live, Some(mu.min(1.0)))?);
        }
        // mixed-radix increment, last unit fastest
        let mut pos = units.len();
        loop {
            if pos == 0 {
                return TopologySet::new(graph.n(), topologies, graph.digest(), 0);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < units[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph(model: DiffusionModel, n: usize, edges: &[(usize, usize, f64)]) -> Graph {
        let edges = edges.iter().map(|&(s, d, v)| Edge::new(s, d, v)).collect();
        Graph::new(n, model, edges, None).unwrap()
    }

    const LT: DiffusionModel = DiffusionModel::LinearThreshold;
    const IC: DiffusionModel = DiffusionModel::IndependentCascade;

    #[test]
    fn near_certain_lt_edge() {
        let g = graph(LT, 2, &[(0, 1, 1.0 - 1e-9)]);
        let set = sample_lt(&g, 1000, 4).unwrap();
        assert!(set.topologies().iter().all(|t| t.live_edges() == [(NodeId(0), NodeId(1))]));
    }

    #[test]
    fn edgeless_graphs_give_empty_topologies() {
        let set = sample_lt(&Graph::empty(5, LT), 10, 1).unwrap();
        assert!(set.topologies().iter().all(|t| t.live_edges().is_empty()));
        let set = sample_ic(&Graph::empty(5, IC), 10, 1).unwrap();
        assert!(set.topologies().iter().all(|t| t.live_edges().is_empty()));
    }

    #[test]
    fn ic_extremes() {
        let full = graph(IC, 3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]);
        let set = sample_ic(&full, 20, 2).unwrap();
        for t in set.topologies() {
            assert_eq!(t.live_edges().len(), 3);
        }
        let none = graph(IC, 3, &[(0, 1, 0.0), (1, 2, 0.0)]);
        let set = sample_ic(&none, 20, 2).unwrap();
        assert!(set.topologies().iter().all(|t| t.live_edges().is_empty()));
    }

    #[test]
    fn model_mismatch_rejected() {
        let g = graph(IC, 2, &[(0, 1, 0.5)]);
        assert!(matches!(sample_lt(&g, 1, 0), Err(Error::Model { .. })));
        let g = graph(LT, 2, &[(0, 1, 0.5)]);
        assert!(matches!(sample_ic(&g, 1, 0), Err(Error::Model { .. })));
    }

    #[test]
    fn lt_keeps_at_most_one_incoming_edge() {
        let mut rng = crate::rng::seeded(8);
        let g = crate::generators::generate_er(40, 0.3, LT, &mut rng).unwrap();
        let set = sample_lt(&g, 200, 8).unwrap();
        for t in set.topologies() {
            assert!(t.max_in_degree() <= 1);
            for &(s, d) in t.live_edges() {
                assert!(g.out_neighbors(s).unwrap().iter().any(|&(x, _)| x == d));
            }
        }
    }

    #[test]
    fn per_index_streams_are_stable() {
        let mut rng = crate::rng::seeded(1);
        let g = crate::generators::generate_er(20, 0.2, IC, &mut rng).unwrap();
        let small = sample_ic(&g, 3, 99).unwrap();
        let large = sample_ic(&g, 10, 99).unwrap();
        assert_eq!(small.topologies(), &large.topologies()[..3]);
        assert_eq!(large.prefix(3).topologies(), small.topologies());
        assert_eq!(sample_ic(&g, 10, 99).unwrap(), large);
    }

    #[test]
    fn enumerate_ic_uniform_pair() {
        let g = graph(IC, 3, &[(0, 1, 0.5), (1, 2, 0.5)]);
        let set = enumerate_all(&g).unwrap();
        assert_eq!(set.len(), 4);
        assert!(set.topologies().iter().all(|t| t.mu() == Some(0.25)));
    }

    #[test]
    fn enumerate_lt_single_node() {
        let g = graph(LT, 3, &[(0, 2, 0.3), (1, 2, 0.5)]);
        let set = enumerate_all(&g).unwrap();
        let mut mus: Vec<f64> = set.topologies().iter().map(|t| t.mu().unwrap()).collect();
        mus.sort_by(f64::total_cmp);
        assert_eq!(mus.len(), 3);
        for (got, want) in mus.iter().zip([0.2, 0.3, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn enumeration_normalizes() {
        let mut rng = crate::rng::seeded(3);
        for model in [LT, IC] {
            let g = crate::generators::generate_er(6, 0.4, model, &mut rng).unwrap();
            if let Ok(set) = enumerate_all(&g) {
                let total: f64 = set.topologies().iter().map(|t| t.mu().unwrap()).sum();
                assert!((total - 1.0).abs() < 1e-9, "{model}: {total}");
            }
        }
    }

    #[test]
    fn enumeration_guard() {
        let edges: Vec<(usize, usize, f64)> = (0..21).map(|i| (i, i + 1, 0.5)).collect();
        let g = graph(IC, 22, &edges);
        assert!(matches!(enumerate_all(&g), Err(Error::Capacity(_))));
    }

    #[test]
    fn text_round_trip() {
        let g = graph(IC, 3, &[(0, 1, 0.3), (1, 2, 0.7), (0, 2, 0.1)]);
        for set in [sample_ic(&g, 6, 17).unwrap(), enumerate_all(&g).unwrap()] {
            let text = set.to_text();
            let back = TopologySet::from_text(&text).unwrap();
            assert_eq!(back, set);
            assert_eq!(back.to_text(), text);
            assert_eq!(back.digest(), set.digest());
        }
    }

    #[test]
    fn malformed_topology_files() {
        assert!(TopologySet::from_text("toposet 2 1 0\ne 0 1\n").is_err());
        assert!(TopologySet::from_text("toposet 2 2 0\ntopo 0\n").is_err());
        assert!(TopologySet::from_text("toposet 2 1 0\ntopo 0\ne 0 5\n").is_err());
        assert!(TopologySet::from_text("toposet 2 1 0\ntopo 1\n").is_err());
        assert!(TopologySet::from_text("toposet 2 1 0\ntopo 0 1.5\n").is_err());
    }
}
