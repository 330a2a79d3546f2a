//! Bounded-variable revised simplex with explicit basis inverse.
//!
//! Two-phase method over the equality system A x = b with variable bounds.
//! Structural variables are crashed into the basis where their column is a
//! near-unit singleton; remaining rows get artificial variables. Pricing is
//! Dantzig with fixed tie-breaks, falling back to Bland's rule after a long
//! degenerate stall so termination is guaranteed. All selection rules are
//! deterministic, so identical problems produce identical solutions.

// Index-based loops are the clearer idiom for the dense matrix kernels here.
#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;

use super::{LpProblem, LpSolution, LpStatus, Sense};
use crate::error::{ItlError, Result};

const DUAL_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-9;
const INFEAS_TOL: f64 = 1e-7;
const DEGENERATE_STEP: f64 = 1e-12;
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    FreeZero,
}

struct Simplex {
    m: usize,
    total: usize, // structural + artificial
    n_struct: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    bland: bool,
    degenerate_run: usize,
    pivots_since_refactor: usize,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

pub(crate) fn solve_simplex(problem: &LpProblem) -> Result<LpSolution> {
    let n_struct = problem.num_vars();
    let m = problem.num_constraints();
    let total = n_struct + m;

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    let mut rhs = vec![0.0; m];
    for (r, con) in problem.constraints().iter().enumerate() {
        rhs[r] = con.rhs;
        for &(j, a) in &con.coeffs {
            if a != 0.0 {
                cols[j].push((r, a));
            }
        }
    }
    for col in cols.iter_mut().take(n_struct) {
        col.sort_by_key(|&(r, _)| r);
    }

    let mut lower = vec![0.0; total];
    let mut upper = vec![0.0; total];
    let mut x = vec![0.0; total];
    let mut state = vec![VarState::AtLower; total];
    for (j, v) in problem.variables().iter().enumerate() {
        lower[j] = v.lower;
        upper[j] = v.upper;
        if v.lower.is_finite() && (!v.upper.is_finite() || v.lower.abs() <= v.upper.abs()) {
            state[j] = VarState::AtLower;
            x[j] = v.lower;
        } else if v.upper.is_finite() {
            state[j] = VarState::AtUpper;
            x[j] = v.upper;
        } else {
            state[j] = VarState::FreeZero;
            x[j] = 0.0;
        }
    }

    // Crash: give each row a basic structural variable whose column is a
    // near-unit singleton in that row, when the implied value fits its bounds.
    let mut basis: Vec<Option<usize>> = vec![None; m];
    let mut in_basis = vec![false; total];
    for j in 0..n_struct {
        if cols[j].len() != 1 {
            continue;
        }
        let (r, a) = cols[j][0];
        if basis[r].is_some() || a.abs() < 0.5 || a.abs() > 2.0 {
            continue;
        }
        basis[r] = Some(j);
        in_basis[j] = true;
    }
    // Residual rhs given nonbasic values.
    let mut resid = rhs.clone();
    for j in 0..n_struct {
        if in_basis[j] || x[j] == 0.0 {
            continue;
        }
        for &(r, a) in &cols[j] {
            resid[r] -= a * x[j];
        }
    }
    // Crash-basic values; revert rows whose implied value violates bounds.
    for r in 0..m {
        if let Some(j) = basis[r] {
            let a = cols[j][0].1;
            let v = resid[r] / a;
            if v < lower[j] - INFEAS_TOL || v > upper[j] + INFEAS_TOL {
                basis[r] = None;
                in_basis[j] = false;
                // j returns to its nonbasic resting point; x[j] unchanged (it
                // never moved), so resid is still correct.
            } else {
                x[j] = v;
                state[j] = VarState::Basic(r);
                resid[r] = 0.0;
            }
        }
    }
    // Artificials for the remaining rows, signed so their value is >= 0.
    let mut needs_phase1 = false;
    for r in 0..m {
        let j = n_struct + r;
        let sign = if resid[r] < 0.0 { -1.0 } else { 1.0 };
        cols[j] = vec![(r, sign)];
        if basis[r].is_none() {
            basis[r] = Some(j);
            in_basis[j] = true;
            x[j] = resid[r] * sign;
            state[j] = VarState::Basic(r);
            lower[j] = 0.0;
            upper[j] = f64::INFINITY;
            if x[j] > INFEAS_TOL {
                needs_phase1 = true;
            }
        } else {
            lower[j] = 0.0;
            upper[j] = 0.0;
            state[j] = VarState::AtLower;
            x[j] = 0.0;
        }
    }

    let basis: Vec<usize> = basis.into_iter().map(|b| b.unwrap()).collect();
    let mut s = Simplex {
        m,
        total,
        n_struct,
        cols,
        lower,
        upper,
        rhs,
        x,
        state,
        basis,
        binv: DMatrix::identity(m, m),
        bland: false,
        degenerate_run: 0,
        pivots_since_refactor: 0,
    };
    s.refactorize()?;

    // Internal objective is always maximization.
    let mut costs = vec![0.0; total];
    for &(j, c) in problem.objective() {
        costs[j] += match problem.sense {
            Sense::Maximize => c,
            Sense::Minimize => -c,
        };
    }

    if needs_phase1 {
        let mut phase1 = vec![0.0; total];
        for j in s.n_struct..s.total {
            phase1[j] = -1.0;
        }
        match s.optimize(&phase1)? {
            LoopEnd::Unbounded => {
                return Err(ItlError::Solver(
                    "phase 1 reported unbounded; artificial costs are bounded".to_string(),
                ))
            }
            LoopEnd::Optimal => {}
        }
        let infeasibility: f64 = (s.n_struct..s.total).map(|j| s.x[j]).sum();
        let scale = 1.0 + s.rhs.iter().map(|b| b.abs()).fold(0.0, f64::max);
        if infeasibility > INFEAS_TOL * scale {
            return Ok(infeasible_solution(problem));
        }
    }
    // Fix all artificials at zero for phase 2.
    for j in s.n_struct..s.total {
        s.lower[j] = 0.0;
        s.upper[j] = 0.0;
        s.x[j] = 0.0;
    }

    let end = s.optimize(&costs)?;
    if matches!(end, LoopEnd::Unbounded) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective_value: match problem.sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            },
            values: s.x[..s.n_struct].to_vec(),
            row_duals: vec![0.0; s.m],
            reduced_costs: vec![0.0; s.n_struct],
        });
    }

    // Final clean solve of the basis for accuracy.
    s.refactorize()?;
    let y = s.duals(&costs);
    let mut reduced = vec![0.0; s.n_struct];
    for j in 0..s.n_struct {
        if !matches!(s.state[j], VarState::Basic(_)) {
            reduced[j] = costs[j] - sparse_dot(&s.cols[j], &y);
        }
    }
    let flip = match problem.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let objective_value = problem
        .objective()
        .iter()
        .map(|&(j, c)| c * s.x[j])
        .sum::<f64>();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value,
        values: s.x[..s.n_struct].to_vec(),
        row_duals: y.iter().map(|v| v * flip).collect(),
        reduced_costs: reduced.iter().map(|v| v * flip).collect(),
    })
}

fn infeasible_solution(problem: &LpProblem) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        objective_value: f64::NAN,
        values: vec![0.0; problem.num_vars()],
        row_duals: vec![0.0; problem.num_constraints()],
        reduced_costs: vec![0.0; problem.num_vars()],
    }
}

fn sparse_dot(col: &[(usize, f64)], y: &[f64]) -> f64 {
    col.iter().map(|&(r, a)| a * y[r]).sum()
}

impl Simplex {
    fn refactorize(&mut self) -> Result<()> {
        if self.m == 0 {
            return Ok(());
        }
        let mut b = DMatrix::zeros(self.m, self.m);
        for (i, &j) in self.basis.iter().enumerate() {
            for &(r, a) in &self.cols[j] {
                b[(r, i)] = a;
            }
        }
        self.binv = b
            .try_inverse()
            .ok_or_else(|| ItlError::Solver("singular basis matrix".to_string()))?;
        // Recompute basic values from the factorized basis.
        let mut resid = self.rhs.clone();
        for j in 0..self.total {
            if matches!(self.state[j], VarState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            for &(r, a) in &self.cols[j] {
                resid[r] -= a * self.x[j];
            }
        }
        for i in 0..self.m {
            let mut v = 0.0;
            for r in 0..self.m {
                v += self.binv[(i, r)] * resid[r];
            }
            self.x[self.basis[i]] = v;
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = costs[j];
            if c != 0.0 {
                for r in 0..self.m {
                    y[r] += c * self.binv[(i, r)];
                }
            }
        }
        y
    }

    /// Runs primal iterations for the given costs until optimal or unbounded.
    fn optimize(&mut self, costs: &[f64]) -> Result<LoopEnd> {
        let iter_cap = 200_000 + 200 * (self.total + self.m);
        let stall_cap = 1_000 + 2 * (self.total + self.m);
        for _ in 0..iter_cap {
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactorize()?;
            }
            let y = self.duals(costs);

            // Entering variable.
            let mut entering: Option<(usize, f64, f64)> = None; // (var, |d|, direction)
            for j in 0..self.total {
                let eligible = match self.state[j] {
                    VarState::Basic(_) => None,
                    _ if self.lower[j] == self.upper[j] => None,
                    VarState::AtLower => Some(1.0),
                    VarState::AtUpper => Some(-1.0),
                    VarState::FreeZero => Some(0.0),
                };
                let Some(kind) = eligible else { continue };
                let d = costs[j] - sparse_dot(&self.cols[j], &y);
                let dir = if kind == 0.0 {
                    if d > DUAL_TOL {
                        1.0
                    } else if d < -DUAL_TOL {
                        -1.0
                    } else {
                        continue;
                    }
                } else if kind > 0.0 && d > DUAL_TOL {
                    1.0
                } else if kind < 0.0 && d < -DUAL_TOL {
                    -1.0
                } else {
                    continue;
                };
                if self.bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), dir)),
                }
            }
            let Some((j_in, _, dir)) = entering else {
                return Ok(LoopEnd::Optimal);
            };

            // Column in the current basis frame.
            let mut alpha = vec![0.0; self.m];
            for &(r, a) in &self.cols[j_in] {
                for i in 0..self.m {
                    alpha[i] += self.binv[(i, r)] * a;
                }
            }

            // Ratio test.
            let span = self.upper[j_in] - self.lower[j_in]; // may be inf
            let mut theta = span;
            let mut leaving: Option<usize> = None; // basis position
            for i in 0..self.m {
                let rate = dir * alpha[i];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let v = self.basis[i];
                let limit = if rate > 0.0 {
                    if self.lower[v].is_finite() {
                        (self.x[v] - self.lower[v]) / rate
                    } else {
                        continue;
                    }
                } else if self.upper[v].is_finite() {
                    (self.x[v] - self.upper[v]) / rate
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                if limit < theta - RATIO_TIE_TOL {
                    theta = limit;
                    leaving = Some(i);
                } else if limit < theta + RATIO_TIE_TOL {
                    let better = match leaving {
                        None => theta > limit,
                        Some(p) => {
                            if self.bland {
                                v < self.basis[p]
                            } else {
                                alpha[i].abs() > alpha[p].abs() + 1e-12
                                    || (alpha[i].abs() >= alpha[p].abs() - 1e-12
                                        && v < self.basis[p])
                            }
                        }
                    };
                    if better {
                        theta = theta.min(limit);
                        leaving = Some(i);
                    }
                }
            }

            if theta.is_infinite() {
                return Ok(LoopEnd::Unbounded);
            }
            if theta <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run > stall_cap {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }

            // Apply the step.
            self.x[j_in] += dir * theta;
            for i in 0..self.m {
                if alpha[i] != 0.0 {
                    let v = self.basis[i];
                    self.x[v] -= dir * theta * alpha[i];
                }
            }

            match leaving {
                None => {
                    // Bound flip, no basis change.
                    self.state[j_in] = match self.state[j_in] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        other => other,
                    };
                    let target = if dir > 0.0 {
                        self.upper[j_in]
                    } else {
                        self.lower[j_in]
                    };
                    self.x[j_in] = target;
                }
                Some(p) => {
                    let j_out = self.basis[p];
                    let rate = dir * alpha[p];
                    self.state[j_out] = if rate > 0.0 {
                        self.x[j_out] = self.lower[j_out];
                        VarState::AtLower
                    } else {
                        self.x[j_out] = self.upper[j_out];
                        VarState::AtUpper
                    };
                    self.basis[p] = j_in;
                    self.state[j_in] = VarState::Basic(p);
                    self.update_binv(p, &alpha)?;
                    self.pivots_since_refactor += 1;
                }
            }
        }
        Err(ItlError::Solver("simplex iteration limit reached".to_string()))
    }

    /// Product-form update of the explicit basis inverse after replacing the
    /// column at basis position `p`.
    fn update_binv(&mut self, p: usize, alpha: &[f64]) -> Result<()> {
        let pivot = alpha[p];
        if pivot.abs() <= PIVOT_TOL {
            return Err(ItlError::Solver("vanishing pivot element".to_string()));
        }
        let inv_pivot = 1.0 / pivot;
        for c in 0..self.m {
            self.binv[(p, c)] *= inv_pivot;
        }
        for i in 0..self.m {
            if i == p {
                continue;
            }
            let factor = alpha[i];
            if factor != 0.0 {
                for c in 0..self.m {
                    self.binv[(i, c)] -= factor * self.binv[(p, c)];
                }
            }
        }
        Ok(())
    }
}
