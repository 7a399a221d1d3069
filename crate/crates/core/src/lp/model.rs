use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spread::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        LinearRow {
            terms,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// `x(i, G)`: node `i` ends up infected in topology `G`.
    Infection { node: usize, topology: usize },
    /// `I(j)`: node `j` is vaccinated.
    Vaccination { node: usize },
}

/// A minimization LP with optional integrality marks.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub num_vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<LinearRow>,
    pub bounds: Vec<(f64, f64)>,
    /// Sorted, duplicate free.
    pub integral: Vec<usize>,
    pub var_meta: Vec<VarRole>,
}

impl LpModel {
    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.num_vars || self.var_meta.len() != self.num_vars {
            return Err(Error::Parameter("bounds/meta length differs from variable count".into()));
        }
        let in_range = |v: usize| -> Result<()> {
            if v < self.num_vars {
                Ok(())
            } else {
                Err(Error::Range {
                    node: v,
                    n: self.num_vars,
                })
            }
        };
        for &(v, _) in &self.objective {
            in_range(v)?;
        }
        for row in &self.constraints {
            for &(v, _) in &row.terms {
                in_range(v)?;
            }
        }
        for &v in &self.integral {
            in_range(v)?;
        }
        if let Some((i, b)) = self.bounds.iter().enumerate().find(|(_, b)| !(b.0 <= b.1)) {
            return Err(Error::Parameter(format!("variable {i} has bounds {b:?}")));
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Independent feasibility pass over rows and bounds.
    pub fn residuals(&self, values: &[f64]) -> Residuals {
        let row = self
            .constraints
            .iter()
            .map(|r| r.violation(values))
            .fold(0.0, f64::max);
        let bound = self
            .bounds
            .iter()
            .zip(values)
            .map(|(&(lo, hi), &x)| (lo - x).max(x - hi).max(0.0))
            .fold(0.0, f64::max);
        Residuals {
            max_row_violation: row,
            max_bound_violation: bound,
        }
    }

    /// Successor model with one more constraint.
    pub fn with_constraint(&self, row: LinearRow) -> LpModel {
        let mut m = self.clone();
        m.constraints.push(row);
        m
    }

    pub fn vaccination_vars(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.var_meta.iter().enumerate().filter_map(|(var, role)| match role {
            VarRole::Vaccination { node } => Some((*node, var)),
            VarRole::Infection { .. } => None,
        })
    }

    fn var_name(&self, v: usize) -> String {
        match self.var_meta[v] {
            VarRole::Infection { node, topology } => format!("x_{node}_{topology}"),
            VarRole::Vaccination { node } => format!("I_{node}"),
        }
    }

    /// Writes the model in the CPLEX-style LP text layout.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::from("\\ vaccination model\nMinimize\n obj:");
        self.push_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for (i, row) in self.constraints.iter().enumerate() {
            write!(out, " c{i}:").unwrap();
            self.push_terms(&mut out, &row.terms);
            writeln!(out, " {} {}", row.relation.symbol(), fmt_coef(row.rhs)).unwrap();
        }
        out.push_str("Bounds\n");
        for (v, &(lo, hi)) in self.bounds.iter().enumerate() {
            let name = self.var_name(v);
            if lo == hi {
                writeln!(out, " {name} = {}", fmt_coef(lo)).unwrap();
            } else {
                writeln!(out, " {} <= {name} <= {}", fmt_coef(lo), fmt_bound(hi)).unwrap();
            }
        }
        let binary: Vec<usize> = self
            .integral
            .iter()
            .copied()
            .filter(|&v| self.bounds[v].0 >= 0.0 && self.bounds[v].1 <= 1.0)
            .collect();
        let general: Vec<usize> = self
            .integral
            .iter()
            .copied()
            .filter(|v| !binary.contains(v))
            .collect();
        for (section, vars) in [("Binary", binary), ("General", general)] {
            if vars.is_empty() {
                continue;
            }
            writeln!(out, "{section}").unwrap();
            for chunk in vars.chunks(10) {
                let names: Vec<String> = chunk.iter().map(|&v| self.var_name(v)).collect();
                writeln!(out, " {}", names.join(" ")).unwrap();
            }
        }
        out.push_str("End\n");
        out
    }

    fn push_terms(&self, out: &mut String, terms: &[(usize, f64)]) {
        if terms.is_empty() {
            out.push_str(" 0");
        }
        for (i, &(v, c)) in terms.iter().enumerate() {
            if i > 0 && i % 8 == 0 {
                out.push_str("\n   ");
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if i == 0 && c >= 0.0 {
                write!(out, " {} {}", fmt_coef(c), self.var_name(v)).unwrap();
            } else {
                write!(out, " {sign} {} {}", fmt_coef(c.abs()), self.var_name(v)).unwrap();
            }
        }
    }

    pub fn write_lp_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_lp_format()).map_err(|e| Error::io(path, e))
    }
}

fn fmt_coef(c: f64) -> String {
    format!("{c}")
}

fn fmt_bound(c: f64) -> String {
    if c == f64::INFINITY {
        "+inf".into()
    } else {
        fmt_coef(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub max_row_violation: f64,
    pub max_bound_violation: f64,
}

impl Residuals {
    pub fn within(&self, row_tol: f64, bound_tol: f64) -> bool {
        self.max_row_violation <= row_tol && self.max_bound_violation <= bound_tol
    }
}

/// Variable index of `x(i, G)`.
pub fn infection_var(n: usize, topology: usize, node: usize) -> usize {
    topology * n + node
}

/// Variable index of `I(j)` in a model over `s` topologies.
pub fn vaccination_var(n: usize, s: usize, node: usize) -> usize {
    n * s + node
}

/// Sampled vaccination program: minimize weighted infections subject to
/// `x(i,G) >= x(j,G) - I(i)` for every live edge `j -> i`, seeds pinned
/// infected and unvaccinable, and at most `k` vaccinations.
pub fn build_model(instance: &ProblemInstance<'_>, relaxed: bool) -> Result<LpModel> {
    let topologies = instance.topologies;
    if topologies.is_empty() {
        return Err(Error::Parameter("cannot build a model without topologies".into()));
    }
    let n = instance.n();
    let s = topologies.len();
    let weights = topologies.weights();
    let num_vars = n * s + n;

    let mut objective = Vec::with_capacity(n * s);
    let mut var_meta = Vec::with_capacity(num_vars);
    for (g, &mu) in weights.iter().enumerate() {
        for i in 0..n {
            objective.push((infection_var(n, g, i), mu));
            var_meta.push(VarRole::Infection {
                node: i,
                topology: g,
            });
        }
    }
    for j in 0..n {
        var_meta.push(VarRole::Vaccination { node: j });
    }

    let mut constraints = Vec::new();
    for (g, t) in topologies.topologies().iter().enumerate() {
        for &(j, i) in t.live_edges() {
            let (i, j) = (i.index(), j.index());
            constraints.push(LinearRow::new(
                vec![
                    (infection_var(n, g, j), -1.0),
                    (infection_var(n, g, i), 1.0),
                    (vaccination_var(n, s, i), 1.0),
                ],
                Relation::Ge,
                0.0,
            ));
        }
    }
    for g in 0..s {
        for v in instance.infected() {
            constraints.push(LinearRow::new(
                vec![(infection_var(n, g, v.index()), 1.0)],
                Relation::Eq,
                1.0,
            ));
        }
    }
    for v in instance.infected() {
        constraints.push(LinearRow::new(
            vec![(vaccination_var(n, s, v.index()), 1.0)],
            Relation::Eq,
            0.0,
        ));
    }
    let infected = instance.infected_mask();
    let budget_terms = (0..n)
        .filter(|&j| !infected[j])
        .map(|j| (vaccination_var(n, s, j), 1.0))
        .collect();
    constraints.push(LinearRow::new(budget_terms, Relation::Le, instance.budget as f64));

    let integral = if relaxed {
        Vec::new()
    } else {
        (0..n).map(|j| vaccination_var(n, s, j)).collect()
    };
    Ok(LpModel {
        num_vars,
        objective,
        constraints,
        bounds: vec![(0.0, 1.0); num_vars],
        integral,
        var_meta,
    })
}
