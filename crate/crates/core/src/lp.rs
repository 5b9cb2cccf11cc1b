//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems have the form `max c·x` subject to linear rows and `x >= 0`.

use std::fmt;

use crate::error::{KeychainError, Result};

/// Ratio-test and reduced-cost tolerance.
pub const PIVOT_TOL: f64 = 1e-9;
/// Phase-one objective above which the problem is reported infeasible.
const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Sparse coefficients as `(variable, coefficient)`.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(KeychainError::InvalidInput(
                "non-finite objective coefficient".into(),
            ));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() || r.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(KeychainError::InvalidInput(format!("row {i} is malformed")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or sign constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            match r.sense {
                Sense::Le => (lhs - r.rhs).max(0.0),
                Sense::Ge => (r.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - r.rhs).abs(),
            }
        });
        let signs = x.iter().map(|v| (-v).max(0.0));
        rows.chain(signs).fold(0.0, f64::max)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn terms(f: &mut fmt::Formatter<'_>, coeffs: &[(usize, f64)]) -> fmt::Result {
            if coeffs.is_empty() {
                return write!(f, " 0");
            }
            for (i, &(j, a)) in coeffs.iter().enumerate() {
                let sign = if a < 0.0 { '-' } else { '+' };
                if i == 0 && a >= 0.0 {
                    write!(f, " {} x{j}", a.abs())?;
                } else {
                    write!(f, " {sign} {} x{j}", a.abs())?;
                }
            }
            Ok(())
        }
        writeln!(f, "maximize")?;
        write!(f, "  obj:")?;
        let obj: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c))
            .collect();
        terms(f, &obj)?;
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for (i, r) in self.rows.iter().enumerate() {
            write!(f, "  r{i}:")?;
            terms(f, &r.coeffs)?;
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(f, " {op} {}", r.rhs)?;
        }
        writeln!(f, "bounds")?;
        for j in 0..self.num_vars() {
            writeln!(f, "  x{j} >= 0")?;
        }
        writeln!(f, "end")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Row duals; nonnegative on `Le` rows and nonpositive on `Ge` rows.
    pub duals: Vec<f64>,
    /// Largest primal row or sign violation of `x`.
    pub primal_violation: f64,
    /// Largest complementary-slackness product over rows and columns.
    pub slackness_residual: f64,
    pub pivots: usize,
}

/// Anything that solves [`LinearProgram`]s to optimality.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex;

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        Tableau::build(lp).run(lp)
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    DenseSimplex.solve(lp)
}

struct Tableau {
    m: usize,
    width: usize,
    // (m + 1) x (width + 1); last row is the objective, last column the rhs
    t: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
    // column holding +e_i for row i (slack or artificial)
    unit_col: Vec<usize>,
    flipped: Vec<bool>,
    art_start: usize,
    pivots: usize,
    cap: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut flipped = vec![false; m];
        let mut senses = Vec::with_capacity(m);
        for (i, r) in lp.rows.iter().enumerate() {
            let s = if r.rhs < 0.0 {
                flipped[i] = true;
                match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                }
            } else {
                r.sense
            };
            senses.push(s);
        }
        let slacks = senses.iter().filter(|s| **s != Sense::Eq).count();
        let arts = senses.iter().filter(|s| **s != Sense::Le).count();
        let art_start = n + slacks;
        let width = art_start + arts;
        let stride = width + 1;
        let mut t = vec![0.0; (m + 1) * stride];
        let mut basis = vec![0; m];
        let mut unit_col = vec![0; m];
        let (mut next_slack, mut next_art) = (n, art_start);
        for (i, r) in lp.rows.iter().enumerate() {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            for &(j, a) in &r.coeffs {
                t[i * stride + j] += sign * a;
            }
            t[i * stride + width] = sign * r.rhs;
            match senses[i] {
                Sense::Le => {
                    t[i * stride + next_slack] = 1.0;
                    basis[i] = next_slack;
                    unit_col[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Ge => {
                    t[i * stride + next_slack] = -1.0;
                    next_slack += 1;
                    t[i * stride + next_art] = 1.0;
                    basis[i] = next_art;
                    unit_col[i] = next_art;
                    next_art += 1;
                }
                Sense::Eq => {
                    t[i * stride + next_art] = 1.0;
                    basis[i] = next_art;
                    unit_col[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let dims = m + n;
        Tableau {
            m,
            width,
            t,
            basis,
            n,
            unit_col,
            flipped,
            art_start,
            pivots: 0,
            cap: 10 * dims * dims + 100,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.width + 1) + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.width + 1;
        let p = self.at(r, c);
        for j in 0..stride {
            self.t[r * stride + j] /= p;
        }
        self.t[r * stride + c] = 1.0;
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * stride + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..stride {
                let v = self.t[i * stride + j] - f * self.t[r * stride + j];
                self.t[i * stride + j] = if v.abs() < 1e-13 { 0.0 } else { v };
            }
            self.t[i * stride + c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Optimizes the current objective row with Bland's rule over columns `< limit`.
    fn optimize(&mut self, limit: usize) -> Result<()> {
        loop {
            let Some(c) = (0..limit).find(|&j| self.at(self.m, j) < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.at(i, self.width) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - PIVOT_TOL
                                || (ratio <= best + PIVOT_TOL && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(KeychainError::Unbounded);
            };
            if self.pivots >= self.cap {
                return Err(KeychainError::SolverStall(self.pivots));
            }
            self.pivot(r, c);
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let stride = self.width + 1;
        let base = self.m * stride;
        for j in 0..stride {
            self.t[base + j] = 0.0;
        }
        for (j, &c) in costs.iter().enumerate() {
            self.t[base + j] = -c;
        }
        for i in 0..self.m {
            let cb = costs.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..stride {
                    self.t[base + j] += cb * self.t[i * stride + j];
                }
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        if self.width > self.art_start {
            let mut costs = vec![0.0; self.width];
            costs[self.art_start..].iter_mut().for_each(|c| *c = -1.0);
            self.set_objective(&costs);
            self.optimize(self.width)?;
            if self.at(self.m, self.width) < -FEASIBILITY_TOL {
                return Err(KeychainError::Infeasible);
            }
            // drive zero-level artificials out where possible
            for i in 0..self.m {
                if self.basis[i] >= self.art_start {
                    if let Some(c) = (0..self.art_start).find(|&j| self.at(i, j).abs() > PIVOT_TOL)
                    {
                        self.pivot(i, c);
                    }
                }
            }
        }
        let costs = lp.objective.clone();
        self.set_objective(&costs);
        self.optimize(self.art_start)?;

        let mut x = vec![0.0; self.n];
        for i in 0..self.m {
            if self.basis[i] < self.n {
                x[self.basis[i]] = self.at(i, self.width);
            }
        }
        let duals: Vec<f64> = (0..self.m)
            .map(|i| {
                let y = self.at(self.m, self.unit_col[i]);
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let mut residual = 0.0f64;
        for (i, r) in lp.rows.iter().enumerate() {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            residual = residual.max((duals[i] * (r.rhs - lhs)).abs());
        }
        for j in 0..self.n {
            residual = residual.max((x[j] * self.at(self.m, j)).abs());
        }
        Ok(LpSolution {
            value: lp.evaluate(&x),
            primal_violation: lp.max_violation(&x),
            slackness_residual: residual,
            x,
            duals,
            pivots: self.pivots,
        })
    }
}
