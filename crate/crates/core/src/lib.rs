//! Choosing which nodes of a contact network to vaccinate when an outbreak
//! spreads under the linear threshold or independent cascade model.

pub mod error;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod heuristics;
pub mod lp;
pub mod rng;
pub mod spread;
pub mod topology;

pub use error::{Error, Result};
pub use graph::{DiffusionModel, Edge, Graph, NodeId};
pub use heuristics::{greedy, greedy_order, hill_climb, local_search, Algorithm, SolverResult};
pub use spread::{avg_saved, exhaustive_optimal, ProblemInstance, SpreadResult, VaccinationSet};
pub use topology::{Topology, TopologySet};
