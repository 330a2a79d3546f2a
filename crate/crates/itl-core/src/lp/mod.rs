//! Minimal solver-agnostic linear programs: variables with bounds, equality
//! constraints, and a linear objective. The embedded simplex backend returns
//! optimal solutions with duals, or a proven Infeasible/Unbounded verdict.

mod simplex;

use std::collections::HashMap;
use std::io::Write;

use crate::error::{ItlError, Result};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(VarId, f64)>,
    pub rhs: f64,
}

/// An equality-constrained LP with variable bounds.
///
/// General inequalities are not supported; the ITL formulation needs only
/// bounds (line ratings, injection signs) and equality rows (PTDF coupling,
/// power balance).
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    variables: Vec<Variable>,
    name_index: HashMap<String, VarId>,
    objective: Vec<(VarId, f64)>,
    constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            variables: Vec::new(),
            name_index: HashMap::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable; bounds may be infinite but must satisfy lower <= upper.
    pub fn add_var(&mut self, name: &str, lower: f64, upper: f64) -> Result<VarId> {
        if lower > upper {
            return Err(ItlError::Config(format!(
                "variable {name}: lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        if self.name_index.contains_key(name) {
            return Err(ItlError::Config(format!("duplicate variable name {name}")));
        }
        let id = self.variables.len();
        self.variables.push(Variable {
            name: name.to_string(),
            lower,
            upper,
        });
        self.name_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn set_objective(&mut self, coeffs: Vec<(VarId, f64)>) {
        self.objective = coeffs;
    }

    pub fn add_eq(&mut self, coeffs: Vec<(VarId, f64)>, rhs: f64) {
        self.constraints.push(Constraint { coeffs, rhs });
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.name_index.get(name).copied()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn check_refs(&self) -> Result<()> {
        let n = self.variables.len();
        let bad = self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.coeffs.iter()))
            .find(|(id, _)| *id >= n);
        match bad {
            Some((id, _)) => Err(ItlError::Config(format!(
                "coefficient references unknown variable index {id}"
            ))),
            None => Ok(()),
        }
    }

    /// Writes the problem in CPLEX LP text format for cross-checking with
    /// external solvers.
    pub fn write_lp_format(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "{}",
            match self.sense {
                Sense::Maximize => "Maximize",
                Sense::Minimize => "Minimize",
            }
        )?;
        write!(w, " obj:")?;
        for (id, c) in &self.objective {
            write!(w, " {:+} {}", c, sanitize(&self.variables[*id].name))?;
        }
        writeln!(w, "\nSubject To")?;
        for (i, con) in self.constraints.iter().enumerate() {
            write!(w, " c{}:", i)?;
            for (id, a) in &con.coeffs {
                write!(w, " {:+} {}", a, sanitize(&self.variables[*id].name))?;
            }
            writeln!(w, " = {}", con.rhs)?;
        }
        writeln!(w, "Bounds")?;
        for v in &self.variables {
            let name = sanitize(&v.name);
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => writeln!(w, " {} <= {} <= {}", v.lower, name, v.upper)?,
                (true, false) => writeln!(w, " {} >= {}", name, v.lower)?,
                (false, true) => writeln!(w, " -inf <= {} <= {}", name, v.upper)?,
                (false, false) => writeln!(w, " {} free", name)?,
            }
        }
        writeln!(w, "End")
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solution of an [`LpProblem`].
///
/// `row_duals` and `reduced_costs` follow the problem's stated sense: each is
/// the derivative of the optimal objective with respect to the constraint rhs
/// or the variable's active bound.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub values: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    pub fn value(&self, id: VarId) -> f64 {
        self.values[id]
    }
}

/// Solves an LP to proven optimality (or Infeasible/Unbounded) with the
/// embedded bounded-variable simplex. Deterministic for identical input;
/// numerical failures surface as `ItlError::Solver`, never as a bogus status.
pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.check_refs()?;
    simplex::solve_simplex(problem)
}
