//! Directed weighted contact network.
//!
//! Every edge carries a single value whose meaning depends on the diffusion
//! model: a linear-threshold weight `w_ij` or an independent-cascade
//! transmission probability `p_ij`. Edges are indexed both by source and by
//! destination so that forward spread and per-node incoming scans are
//! `O(degree)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest admissible incoming weight sum for a linear-threshold node.
pub const LT_INCOMING_CAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DiffusionModel {
    #[serde(rename = "LT")]
    LinearThreshold,
    #[serde(rename = "IC")]
    IndependentCascade,
}

impl fmt::Display for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiffusionModel::LinearThreshold => "LT",
            DiffusionModel::IndependentCascade => "IC",
        })
    }
}

impl FromStr for DiffusionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LT" => Ok(DiffusionModel::LinearThreshold),
            "IC" => Ok(DiffusionModel::IndependentCascade),
            other => Err(Error::Format(format!("unknown model tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub value: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, value: f64) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            value,
        }
    }
}

/// Compressed adjacency: `offsets[v]..offsets[v + 1]` slices into `edges`,
/// which holds edge indices.
#[derive(Debug, Clone, PartialEq)]
struct Adjacency {
    offsets: Vec<usize>,
    edges: Vec<usize>,
}

impl Adjacency {
    fn build(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> usize) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for e in edges {
            offsets[key(e) + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![0usize; edges.len()];
        // Edges are sorted by (src, dst), so every bucket comes out in ascending
        // order of the opposite endpoint.
        for (idx, e) in edges.iter().enumerate() {
            let k = key(e);
            slots[cursor[k]] = idx;
            cursor[k] += 1;
        }
        Adjacency {
            offsets,
            edges: slots,
        }
    }

    #[inline]
    fn slice(&self, v: usize) -> &[usize] {
        &self.edges[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    model: DiffusionModel,
    edges: Vec<Edge>,
    coords: Option<Vec<(f64, f64)>>,
    outgoing: Adjacency,
    incoming: Adjacency,
}

impl Graph {
    /// Builds a graph. Edges are stored sorted by `(src, dst)`; structural
    /// problems other than out-of-range endpoints are left for [`Graph::validate`].
    pub fn new(
        n: usize,
        model: DiffusionModel,
        mut edges: Vec<Edge>,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if u32::try_from(n).is_err() {
            return Err(Error::Parameter(format!("node count {n} exceeds u32")));
        }
        for e in &edges {
            for node in [e.src.index(), e.dst.index()] {
                if node >= n {
                    return Err(Error::Range { node, n });
                }
            }
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(Error::Parameter(format!(
                    "{} coordinates supplied for {n} nodes",
                    c.len()
                )));
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        let outgoing = Adjacency::build(n, &edges, |e| e.src.index());
        let incoming = Adjacency::build(n, &edges, |e| e.dst.index());
        Ok(Graph {
            n,
            model,
            edges,
            coords,
            outgoing,
            incoming,
        })
    }

    pub fn empty(n: usize, model: DiffusionModel) -> Self {
        Graph::new(n, model, Vec::new(), None).expect("empty graph is always valid")
    }

    /// Same structure, new edge values (in stored edge order).
    pub fn with_values(&self, values: &[f64]) -> Graph {
        assert_eq!(values.len(), self.edges.len(), "one value per edge");
        let mut g = self.clone();
        for (e, &v) in g.edges.iter_mut().zip(values) {
            e.value = v;
        }
        g
    }

    pub fn with_model(&self, model: DiffusionModel) -> Graph {
        let mut g = self.clone();
        g.model = model;
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn model(&self) -> DiffusionModel {
        self.model
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node.index() >= self.n {
            Err(Error::Range {
                node: node.index(),
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Incoming edges of `j`, ascending by source.
    pub fn in_neighbors(&self, j: NodeId) -> Result<Vec<(NodeId, f64)>> {
        self.check(j)?;
        Ok(self.incoming_edges(j).map(|e| (e.src, e.value)).collect())
    }

    /// Outgoing edges of `i`, ascending by destination.
    pub fn out_neighbors(&self, i: NodeId) -> Result<Vec<(NodeId, f64)>> {
        self.check(i)?;
        Ok(self.outgoing_edges(i).map(|e| (e.dst, e.value)).collect())
    }

    /// Unchecked iterator over incoming edges; panics when `j` is out of range.
    pub fn incoming_edges(&self, j: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.incoming
            .slice(j.index())
            .iter()
            .map(move |&idx| &self.edges[idx])
    }

    pub fn outgoing_edges(&self, i: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing
            .slice(i.index())
            .iter()
            .map(move |&idx| &self.edges[idx])
    }

    pub fn in_degree(&self, j: NodeId) -> usize {
        self.incoming.slice(j.index()).len()
    }

    pub fn out_degree(&self, i: NodeId) -> usize {
        self.outgoing.slice(i.index()).len()
    }

    /// Nodes joined to `v` by an edge in either direction, ascending, no repeats.
    pub fn undirected_neighbors(&self, v: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .outgoing_edges(v)
            .map(|e| e.dst)
            .chain(self.incoming_edges(v).map(|e| e.src))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut prev: Option<(NodeId, NodeId)> = None;
        for e in &self.edges {
            let subject = Subject::Edge(e.src, e.dst);
            if e.src == e.dst {
                violations.push(Violation {
                    subject,
                    rule: Rule::SelfLoop,
                    detail: format!("self-loop at {}", e.src),
                });
            }
            if prev == Some((e.src, e.dst)) {
                violations.push(Violation {
                    subject,
                    rule: Rule::DuplicateEdge,
                    detail: format!("duplicate edge {} -> {}", e.src, e.dst),
                });
            }
            prev = Some((e.src, e.dst));
            if !(0.0..=1.0).contains(&e.value) {
                let rule = match self.model {
                    DiffusionModel::IndependentCascade => Rule::ProbabilityRange,
                    DiffusionModel::LinearThreshold => Rule::WeightRange,
                };
                let what = match rule {
                    Rule::ProbabilityRange => "probability",
                    _ => "weight",
                };
                violations.push(Violation {
                    subject,
                    rule,
                    detail: format!("{what} {} out of [0,1]", e.value),
                });
            }
        }
        if self.model == DiffusionModel::LinearThreshold {
            for j in 0..self.n {
                let j = NodeId::from(j);
                let sum: f64 = self.incoming_edges(j).map(|e| e.value).sum();
                if !(sum <= LT_INCOMING_CAP) {
                    violations.push(Violation {
                        subject: Subject::Node(j),
                        rule: Rule::IncomingSum,
                        detail: format!("incoming sum {sum} >= 1"),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Serializes to the line-oriented text format.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "graph {} {}", self.n, self.model).unwrap();
        if let Some(coords) = &self.coords {
            for (i, (x, y)) in coords.iter().enumerate() {
                writeln!(out, "coord {i} {} {}", fmt_real(*x), fmt_real(*y)).unwrap();
            }
        }
        for e in &self.edges {
            writeln!(out, "edge {} {} {}", e.src.0, e.dst.0, fmt_real(e.value)).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::Format("missing graph header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "graph" {
            return Err(Error::parse(hline, "expected `graph <n> <LT|IC>`"));
        }
        let n: usize = parse_field(hline, h[1])?;
        let model: DiffusionModel = h[2]
            .parse()
            .map_err(|_| Error::parse(hline, format!("unknown model {:?}", h[2])))?;

        let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
        let mut any_coord = false;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                ["coord", id, x, y] => {
                    let id: usize = parse_field(line, id)?;
                    if id >= n {
                        return Err(Error::parse(line, format!("coord id {id} >= {n}")));
                    }
                    if !any_coord {
                        coords = vec![None; n];
                        any_coord = true;
                    }
                    coords[id] = Some((parse_field(line, x)?, parse_field(line, y)?));
                }
                ["edge", s, d, v] => {
                    let s: usize = parse_field(line, s)?;
                    let d: usize = parse_field(line, d)?;
                    if s >= n || d >= n {
                        return Err(Error::parse(line, format!("edge endpoint >= {n}")));
                    }
                    edges.push(Edge::new(s, d, parse_field(line, v)?));
                }
                _ => return Err(Error::parse(line, format!("unrecognized line {l:?}"))),
            }
        }
        let coords = if any_coord {
            let full: Option<Vec<_>> = coords.into_iter().collect();
            Some(full.ok_or_else(|| Error::Format("coordinates given for only some nodes".into()))?)
        } else {
            None
        };
        Graph::new(n, model, edges, coords)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::from_text(&text)
    }

    /// SHA-256 of the canonical text serialization, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Decimal form with 17 significant digits; parses back to the same bits.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_field<T: FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {field:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Node(NodeId),
    Edge(NodeId, NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    SelfLoop,
    DuplicateEdge,
    ProbabilityRange,
    WeightRange,
    IncomingSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub subject: Subject,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lt(n: usize, edges: &[(usize, usize, f64)]) -> Graph {
        let edges = edges.iter().map(|&(s, d, v)| Edge::new(s, d, v)).collect();
        Graph::new(n, DiffusionModel::LinearThreshold, edges, None).unwrap()
    }

    #[test]
    fn empty_graph_is_valid() {
        assert!(Graph::empty(0, DiffusionModel::LinearThreshold).validate().ok());
        assert!(Graph::empty(0, DiffusionModel::IndependentCascade).validate().ok());
    }

    #[test]
    fn lt_incoming_sum_over_one() {
        let g = lt(3, &[(0, 2, 0.6), (1, 2, 0.5)]);
        let report = g.validate();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.rule, Rule::IncomingSum);
        assert_eq!(v.subject, Subject::Node(NodeId(2)));
        assert!(v.detail.contains("1.1"), "{}", v.detail);
    }

    #[test]
    fn lt_cap_has_tolerance() {
        assert!(lt(3, &[(0, 2, 0.5), (1, 2, 0.5 - 1e-9)]).validate().ok());
        assert!(!lt(3, &[(0, 2, 0.5), (1, 2, 0.5 - 1e-10)]).validate().ok());
    }

    #[test]
    fn ic_probability_range() {
        let g = Graph::new(
            2,
            DiffusionModel::IndependentCascade,
            vec![Edge::new(0, 1, 1.2)],
            None,
        )
        .unwrap();
        let report = g.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::ProbabilityRange);
        assert!(report.violations[0].detail.contains("out of [0,1]"));
    }

    #[test]
    fn self_loops_and_duplicates_reported() {
        let g = Graph::new(
            2,
            DiffusionModel::IndependentCascade,
            vec![Edge::new(0, 0, 0.1), Edge::new(0, 1, 0.2), Edge::new(0, 1, 0.3)],
            None,
        )
        .unwrap();
        let rules: Vec<Rule> = g.validate().violations.iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![Rule::SelfLoop, Rule::DuplicateEdge]);
    }

    #[test]
    fn validate_is_pure() {
        let g = lt(3, &[(0, 2, 0.6), (1, 2, 0.5), (2, 2, 0.1)]);
        let before = g.clone();
        assert_eq!(g.validate(), g.validate());
        assert_eq!(g, before);
    }

    #[test]
    fn in_neighbors_lookup() {
        let g = lt(3, &[(1, 2, 0.5), (0, 2, 0.3)]);
        assert_eq!(
            g.in_neighbors(NodeId(2)).unwrap(),
            vec![(NodeId(0), 0.3), (NodeId(1), 0.5)]
        );
        assert!(g.in_neighbors(NodeId(0)).unwrap().is_empty());
        assert!(matches!(
            g.in_neighbors(NodeId(3)),
            Err(Error::Range { node: 3, n: 3 })
        ));
    }

    #[test]
    fn out_of_range_edge_rejected() {
        let err = Graph::new(
            2,
            DiffusionModel::IndependentCascade,
            vec![Edge::new(0, 2, 0.5)],
            None,
        );
        assert!(matches!(err, Err(Error::Range { node: 2, n: 2 })));
    }

    #[test]
    fn undirected_neighbors_merge_both_directions() {
        let g = lt(4, &[(0, 1, 0.1), (1, 0, 0.1), (2, 1, 0.2), (1, 3, 0.3)]);
        assert_eq!(
            g.undirected_neighbors(NodeId(1)),
            vec![NodeId(0), NodeId(2), NodeId(3)]
        );
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let g = Graph::new(
            3,
            DiffusionModel::IndependentCascade,
            vec![
                Edge::new(0, 1, 0.1 + 0.2),
                Edge::new(2, 1, 1.0 / 3.0),
                Edge::new(1, 2, 5e-324),
            ],
            Some(vec![(0.0, 1.5), (std::f64::consts::PI, -2.25), (1e300, 7.0)]),
        )
        .unwrap();
        let text = g.to_text();
        let back = Graph::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        for (a, b) in g.edges().iter().zip(back.edges()) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Graph::from_text("graph 2 LT\nedge 0 1 abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Graph::from_text("graph 2 XX\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(Graph::from_text("graph 2 LT\ncoord 0 1 1\n").is_err());
    }
}
