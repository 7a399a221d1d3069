//! Contact-network generators: Erdős–Rényi, Gaussian-clustered Waxman, and
//! Waxman graphs seeded from a city population table, plus the edge-value
//! assignment used for both diffusion models.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{DiffusionModel, Edge, Graph, NodeId, LT_INCOMING_CAP};

/// Slack left under the unit cap when incoming LT weights are rescaled.
pub const LT_RESCALE_EPSILON: f64 = 0.01;

/// Default uniform range for synthetic per-center variances, in box units squared.
pub const DEFAULT_VARIANCE_RANGE: (f64, f64) = (0.5, 2.0);

/// Largest city sigma as a fraction of the box side when no constant is given.
pub const CITY_SIGMA_BOX_FRACTION: f64 = 1.0 / 8.0;

pub fn generate_er<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    model: DiffusionModel,
    rng: &mut R,
) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("edge probability {p} outside [0,1]")));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < p {
                edges.push(Edge::new(i, j, 0.0));
            }
        }
    }
    let g = Graph::new(n, model, edges, None)?;
    Ok(assign_values(&g, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaxmanParams {
    pub alpha: f64,
    pub beta: f64,
    pub box_side: f64,
}

impl WaxmanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!("alpha {} outside (0,1]", self.alpha)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Parameter(format!("beta {} must be > 0", self.beta)));
        }
        if !(self.box_side > 0.0) {
            return Err(Error::Parameter(format!(
                "box side {} must be > 0",
                self.box_side
            )));
        }
        Ok(())
    }
}

/// Waxman link probability `alpha * exp(-d / (beta * max_dist))`.
pub fn waxman_edge_prob(d: f64, params: &WaxmanParams, max_dist: f64) -> Result<f64> {
    if !(max_dist > 0.0) {
        return Err(Error::Parameter(format!(
            "maximum distance {max_dist} must be > 0"
        )));
    }
    if !(d >= 0.0) {
        return Err(Error::Parameter(format!("distance {d} must be >= 0")));
    }
    Ok(params.alpha * (-d / (params.beta * max_dist)).exp())
}

/// Nodes drawn around uniformly placed centers, linked by Waxman's rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWaxman {
    pub n: usize,
    pub n_centers: usize,
    pub params: WaxmanParams,
    pub variance_range: (f64, f64),
}

impl GaussianWaxman {
    pub fn new(n: usize, n_centers: usize, params: WaxmanParams) -> Self {
        GaussianWaxman {
            n,
            n_centers,
            params,
            variance_range: DEFAULT_VARIANCE_RANGE,
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, model: DiffusionModel, rng: &mut R) -> Result<Graph> {
        self.params.validate()?;
        if self.n_centers == 0 || self.n < self.n_centers {
            return Err(Error::Parameter(format!(
                "need n >= centers >= 1, got n={} centers={}",
                self.n, self.n_centers
            )));
        }
        let (lo, hi) = self.variance_range;
        if !(lo >= 0.0 && hi >= lo && hi > 0.0) {
            return Err(Error::Parameter(format!(
                "variance range ({lo}, {hi}) is not a positive interval"
            )));
        }
        let side = self.params.box_side;
        let mut centers = Vec::with_capacity(self.n_centers);
        let mut variances = Vec::with_capacity(self.n_centers);
        for _ in 0..self.n_centers {
            let x = rng.gen::<f64>() * side;
            let y = rng.gen::<f64>() * side;
            centers.push((x, y));
            variances.push(if hi > lo { rng.gen_range(lo..hi) } else { lo });
        }
        let counts = proportional_counts(self.n, &variances);
        let clusters: Vec<Cluster> = centers
            .iter()
            .zip(&variances)
            .zip(&counts)
            .map(|((&(x, y), &var), &count)| Cluster {
                x,
                y,
                count,
                sigma: var.sqrt(),
            })
            .collect();
        let positions = place_clustered_nodes(&clusters, side, rng)?;
        waxman_graph(positions, &self.params, model, rng)
    }
}

pub fn generate_gaussian_waxman<R: Rng + ?Sized>(
    n: usize,
    n_centers: usize,
    params: &WaxmanParams,
    model: DiffusionModel,
    rng: &mut R,
) -> Result<Graph> {
    GaussianWaxman::new(n, n_centers, *params).generate(model, rng)
}

/// Splits `n` proportionally to `weights`; the rounding remainder goes to the
/// largest weight (first one on ties).
pub fn proportional_counts(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    let mut counts: Vec<usize> = if total > 0.0 {
        weights
            .iter()
            .map(|w| ((n as f64) * w / total).floor() as usize)
            .collect()
    } else {
        vec![0; weights.len()]
    };
    let assigned: usize = counts.iter().sum();
    let largest = weights
        .iter()
        .enumerate()
        .fold(0, |best, (i, &w)| if w > weights[best] { i } else { best });
    counts[largest] += n - assigned.min(n);
    counts
}

struct Cluster {
    x: f64,
    y: f64,
    count: usize,
    sigma: f64,
}

/// Isotropic Gaussian positions per cluster, clamped into the box.
fn place_clustered_nodes<R: Rng + ?Sized>(
    clusters: &[Cluster],
    side: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let mut positions = Vec::new();
    for c in clusters {
        let normal = Normal::new(0.0, c.sigma)
            .map_err(|e| Error::Parameter(format!("cluster sigma {}: {e}", c.sigma)))?;
        for _ in 0..c.count {
            let x = (c.x + normal.sample(rng)).clamp(0.0, side);
            let y = (c.y + normal.sample(rng)).clamp(0.0, side);
            positions.push((x, y));
        }
    }
    Ok(positions)
}

/// Waxman links over fixed positions: one draw per unordered pair in ascending
/// `(i, j)` order, each link realized in both directions.
fn waxman_graph<R: Rng + ?Sized>(
    positions: Vec<(f64, f64)>,
    params: &WaxmanParams,
    model: DiffusionModel,
    rng: &mut R,
) -> Result<Graph> {
    let n = positions.len();
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let mut max_dist = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_dist = max_dist.max(dist(positions[i], positions[j]));
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            // All nodes coincide: every pair sits at distance zero.
            let prob = if max_dist > 0.0 {
                waxman_edge_prob(dist(positions[i], positions[j]), params, max_dist)?
            } else {
                params.alpha
            };
            if rng.gen::<f64>() < prob {
                edges.push(Edge::new(i, j, 0.0));
                edges.push(Edge::new(j, i, 0.0));
            }
        }
    }
    let g = Graph::new(n, model, edges, Some(positions))?;
    Ok(assign_values(&g, rng))
}

fn assign_values<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Graph {
    match g.model() {
        DiffusionModel::LinearThreshold => assign_lt_weights(g, rng),
        DiffusionModel::IndependentCascade => assign_ic_probs(g, rng),
    }
}

/// Uniform(0,1) weights, then per-node rescaling so incoming sums stay under 1.
pub fn assign_lt_weights<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Graph {
    let values: Vec<f64> = (0..graph.m()).map(|_| rng.gen::<f64>()).collect();
    normalize_lt_weights(&graph.with_values(&values))
}

/// Scales every node whose incoming sum reaches the cap so the sum becomes
/// `1 - LT_RESCALE_EPSILON`; other nodes are untouched.
pub fn normalize_lt_weights(graph: &Graph) -> Graph {
    let mut values: Vec<f64> = graph.edges().iter().map(|e| e.value).collect();
    let mut sums = vec![0.0f64; graph.n()];
    for e in graph.edges() {
        sums[e.dst.index()] += e.value;
    }
    for (value, e) in values.iter_mut().zip(graph.edges()) {
        let s = sums[e.dst.index()];
        if s > LT_INCOMING_CAP {
            *value *= (1.0 - LT_RESCALE_EPSILON) / s;
        }
    }
    graph
        .with_values(&values)
        .with_model(DiffusionModel::LinearThreshold)
}

pub fn assign_ic_probs<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Graph {
    let values: Vec<f64> = (0..graph.m()).map(|_| rng.gen::<f64>()).collect();
    graph
        .with_values(&values)
        .with_model(DiffusionModel::IndependentCascade)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityRecord {
    pub name: String,
    pub lat: f64,
    pub lng: f64,
    pub population: u64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityCenter {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub node_count: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityModel {
    pub centers: Vec<CityCenter>,
    pub total_nodes: usize,
    pub scale_factor: u64,
    pub box_side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CityOptions {
    /// People represented by one node.
    pub scale_factor: u64,
    pub box_side: f64,
    /// Centers with fewer nodes than this are dropped.
    pub min_nodes: usize,
    /// `sigma = c * sqrt(population / density)`. `None` picks `c` so the
    /// largest retained sigma is `box_side / 8`.
    pub sigma_constant: Option<f64>,
}

/// Reads `city,lat,lng,population,density` rows (extra columns ignored).
pub fn read_city_csv<Rd: std::io::Read>(reader: Rd) -> Result<Vec<CityRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("city csv header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Format(format!("city csv is missing column {name:?}")))
    };
    let (c_city, c_lat, c_lng, c_pop, c_den) = (
        col("city")?,
        col("lat")?,
        col("lng")?,
        col("population")?,
        col("density")?,
    );
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let num = |i: usize, what: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("{what} {:?} is not numeric", field(i)),
            })
        };
        let population = num(c_pop, "population")?;
        if !(population >= 0.0) || population.fract() != 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("population {:?} is not a non-negative integer", field(c_pop)),
            });
        }
        let record = CityRecord {
            name: field(c_city).to_string(),
            lat: num(c_lat, "lat")?,
            lng: num(c_lng, "lng")?,
            population: population as u64,
            density: num(c_den, "density")?,
        };
        if record.population > 0 && !(record.density > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("density must be > 0 for populated city {:?}", record.name),
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_city_dataset(csv_path: impl AsRef<Path>, options: &CityOptions) -> Result<CityModel> {
    let path = csv_path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    build_city_model(&read_city_csv(file)?, options)
}

/// Maps coordinates into the box (equirectangular, aspect preserved) and
/// turns populations into node counts and cluster spreads.
pub fn build_city_model(records: &[CityRecord], options: &CityOptions) -> Result<CityModel> {
    if options.scale_factor == 0 {
        return Err(Error::Parameter("scale factor must be >= 1".into()));
    }
    if !(options.box_side > 0.0) {
        return Err(Error::Parameter("box side must be > 0".into()));
    }
    if let Some(c) = options.sigma_constant {
        if !(c > 0.0) {
            return Err(Error::Parameter(format!("sigma constant {c} must be > 0")));
        }
    }
    let side = options.box_side;
    let (mut min_lat, mut max_lat) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_lng, mut max_lng) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in records {
        min_lat = min_lat.min(r.lat);
        max_lat = max_lat.max(r.lat);
        min_lng = min_lng.min(r.lng);
        max_lng = max_lng.max(r.lng);
    }
    let span = (max_lat - min_lat).max(max_lng - min_lng);
    let project = |r: &CityRecord| {
        if span > 0.0 {
            let scale = side / span;
            ((r.lng - min_lng) * scale, (r.lat - min_lat) * scale)
        } else {
            (side / 2.0, side / 2.0)
        }
    };

    let mut centers = Vec::new();
    let mut spreads = Vec::new();
    for r in records {
        let node_count = (r.population as f64 / options.scale_factor as f64).round() as usize;
        if node_count == 0 || node_count < options.min_nodes {
            continue;
        }
        let (x, y) = project(r);
        spreads.push((r.population as f64 / r.density).sqrt());
        centers.push(CityCenter {
            name: r.name.clone(),
            x,
            y,
            node_count,
            sigma: 0.0,
        });
    }
    let c = match options.sigma_constant {
        Some(c) => c,
        None => {
            let largest = spreads.iter().cloned().fold(0.0f64, f64::max);
            if largest > 0.0 {
                side * CITY_SIGMA_BOX_FRACTION / largest
            } else {
                1.0
            }
        }
    };
    for (center, spread) in centers.iter_mut().zip(&spreads) {
        center.sigma = c * spread;
    }
    let total_nodes = centers.iter().map(|c| c.node_count).sum();
    Ok(CityModel {
        centers,
        total_nodes,
        scale_factor: options.scale_factor,
        box_side: side,
    })
}

/// Per-node city membership, kept beside the graph so hot paths stay integer-only.
#[derive(Debug, Clone, PartialEq)]
pub struct CityMetadata {
    pub names: Vec<String>,
    pub node_center: Vec<usize>,
}

impl CityMetadata {
    pub fn city_of(&self, v: NodeId) -> &str {
        &self.names[self.node_center[v.index()]]
    }
}

pub fn generate_city_graph<R: Rng + ?Sized>(
    city: &CityModel,
    alpha: f64,
    beta: f64,
    model: DiffusionModel,
    rng: &mut R,
) -> Result<(Graph, CityMetadata)> {
    let params = WaxmanParams {
        alpha,
        beta,
        box_side: city.box_side,
    };
    params.validate()?;
    let clusters: Vec<Cluster> = city
        .centers
        .iter()
        .map(|c| Cluster {
            x: c.x,
            y: c.y,
            count: c.node_count,
            sigma: c.sigma,
        })
        .collect();
    let positions = place_clustered_nodes(&clusters, city.box_side, rng)?;
    let node_center = city
        .centers
        .iter()
        .enumerate()
        .flat_map(|(i, c)| std::iter::repeat(i).take(c.node_count))
        .collect();
    let graph = waxman_graph(positions, &params, model, rng)?;
    let meta = CityMetadata {
        names: city.centers.iter().map(|c| c.name.clone()).collect(),
        node_center,
    };
    Ok((graph, meta))
}
