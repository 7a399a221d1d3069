//! Vaccination programs: model construction, relaxed solves, exact
//! branch-and-bound, and rounding.

mod bnb;
mod dense;
pub mod model;
pub mod rounding;
mod sparse;

pub use model::{
    build_model, infection_var, vaccination_var, LinearRow, LpModel, Relation, Residuals, VarRole,
};
pub use rounding::{lp_irp, lp_tkr, blp, round_irp, round_tkr, solve_blp, BlpResult, IrpResult};

use crate::error::{Error, Result};

/// Default branch-and-bound node limit.
pub const NODE_CAP: usize = 1_000_000;
/// Pivot limit for the dense backend.
pub const DENSE_ITERATION_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Capacity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless a feasible point is known.
    pub values: Vec<f64>,
    /// `NaN` when `values` is empty.
    pub objective: f64,
    /// Relaxations solved, including the root.
    pub nodes: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, nodes: usize) -> Self {
        LpSolution {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            nodes,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Sparse bounded simplex from the `microlp` crate.
    Sparse,
    /// Dense tableau simplex with Bland's rule; small models only.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    pub node_cap: usize,
    /// When every integral solution has an objective on the grid `g * z`,
    /// bounds are rounded up to the grid before pruning.
    pub objective_grid: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            backend: Backend::Sparse,
            node_cap: NODE_CAP,
            objective_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RelaxOutcome {
    Optimal { values: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
}

pub(crate) fn solve_relaxation(
    model: &LpModel,
    bounds: &[(f64, f64)],
    backend: Backend,
) -> Result<RelaxOutcome> {
    match backend {
        Backend::Sparse => sparse::solve(model, bounds),
        Backend::Dense => dense::solve(model, bounds, DENSE_ITERATION_CAP),
    }
}

pub fn solve(model: &LpModel) -> Result<LpSolution> {
    solve_with(model, &SolveOptions::default())
}

/// Solves the relaxation, or runs branch-and-bound when `integral` is
/// nonempty.
pub fn solve_with(model: &LpModel, options: &SolveOptions) -> Result<LpSolution> {
    model.validate()?;
    if !model.integral.is_empty() {
        return bnb::branch_and_bound(model, options);
    }
    match solve_relaxation(model, &model.bounds, options.backend)? {
        RelaxOutcome::Optimal { values, objective } => Ok(LpSolution {
            status: LpStatus::Optimal,
            values,
            objective,
            nodes: 1,
        }),
        RelaxOutcome::Infeasible => Ok(LpSolution::without_point(LpStatus::Infeasible, 1)),
        RelaxOutcome::IterationLimit => Ok(LpSolution::without_point(LpStatus::Capacity, 1)),
        RelaxOutcome::Unbounded => Err(Error::Solver {
            iteration: 0,
            message: "objective is unbounded".into(),
        }),
    }
}
