//! Solver-agnostic description of a conic program and a Clarabel backend.
//!
//! A program minimizes `c^T x` subject to blocks of affine rows lying in
//! zero, non-negative or second-order cones. Second-order blocks are ordered
//! `(head, tail...)` and mean `|tail| <= head`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// Affine expression `sum coef * x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(v: usize) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: usize, coef: f64) -> Self {
        Self {
            terms: vec![(v, coef)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn add(mut self, v: usize, coef: f64) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn plus(mut self, other: &LinExpr, factor: f64) -> Self {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * factor)));
        self.constant += other.constant * factor;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        LinExpr::default().plus(self, factor)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(self) -> usize {
        match self {
            Cone::Zero(n) | Cone::Nonneg(n) | Cone::SecondOrder(n) => n,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub num_vars: usize,
    /// Sparse objective, minimized.
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LinExpr>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn new_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn new_vars(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.new_var()).collect()
    }

    pub fn minimize(&mut self, var: usize, coef: f64) {
        self.objective.push((var, coef));
    }

    fn push_block(&mut self, cone: Cone, rows: impl IntoIterator<Item = LinExpr>) {
        self.rows.extend(rows);
        match (self.cones.last_mut(), cone) {
            (Some(Cone::Nonneg(n)), Cone::Nonneg(k)) => *n += k,
            (Some(Cone::Zero(n)), Cone::Zero(k)) => *n += k,
            _ => self.cones.push(cone),
        }
    }

    /// `e >= 0`.
    pub fn add_nonneg(&mut self, e: LinExpr) {
        self.push_block(Cone::Nonneg(1), [e]);
    }

    /// `e == 0`.
    pub fn add_eq(&mut self, e: LinExpr) {
        self.push_block(Cone::Zero(1), [e]);
    }

    /// `|tail| <= head`.
    pub fn add_soc(&mut self, head: LinExpr, tail: Vec<LinExpr>) {
        let dim = tail.len() + 1;
        self.push_block(Cone::SecondOrder(dim), std::iter::once(head).chain(tail));
    }

    /// `|xs|^2 <= u v` with `u, v >= 0`, as `|(2 xs, u - v)| <= u + v`.
    pub fn add_rotated(&mut self, u: LinExpr, v: LinExpr, xs: Vec<LinExpr>) {
        let head = u.clone().plus(&v, 1.0);
        let diff = u.plus(&v, -1.0);
        let tail = xs.iter().map(|x| x.scaled(2.0)).chain([diff]).collect();
        self.add_soc(head, tail);
    }

    /// `|xs|^2 <= rhs`.
    pub fn add_sum_squares_le(&mut self, xs: Vec<LinExpr>, rhs: LinExpr) {
        self.add_rotated(rhs, LinExpr::constant(1.0), xs);
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Largest violation of any cone at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0f64;
        let mut r = 0;
        for cone in &self.cones {
            let vals: Vec<f64> = self.rows[r..r + cone.dim()]
                .iter()
                .map(|e| e.eval(x))
                .collect();
            r += cone.dim();
            let v = match cone {
                Cone::Zero(_) => vals.iter().fold(0f64, |a, v| a.max(v.abs())),
                Cone::Nonneg(_) => vals.iter().fold(0f64, |a, v| a.max(-v)),
                Cone::SecondOrder(_) => {
                    let tail = vals[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                    (tail - vals[0]).max(0.0)
                }
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
}

pub trait ConicSolver {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution>;
}

/// Interior-point backend.
#[derive(Debug, Clone)]
pub struct ClarabelSolver {
    pub tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution> {
        let n = program.num_vars;
        let m = program.rows.len();
        let mut q = vec![0.0; n];
        for &(v, c) in &program.objective {
            q[v] += c;
        }
        // s = e(x) = a x + c  <=>  (-a) x + s = c
        let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::with_capacity(m);
        for (r, e) in program.rows.iter().enumerate() {
            for &(v, c) in &e.terms {
                if c != 0.0 {
                    ii.push(r);
                    jj.push(v);
                    vv.push(-c);
                }
            }
            b.push(e.constant);
        }
        let a = CscMatrix::new_from_triplets(m, n, ii, jj, vv);
        let p = CscMatrix::zeros((n, n));
        let cones: Vec<SupportedConeT<f64>> = program
            .cones
            .iter()
            .map(|c| match *c {
                Cone::Zero(d) => SupportedConeT::ZeroConeT(d),
                Cone::Nonneg(d) => SupportedConeT::NonnegativeConeT(d),
                Cone::SecondOrder(d) => SupportedConeT::SecondOrderConeT(d),
            })
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .max_iter(self.max_iter)
            .tol_feas(self.tol)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .presolve_enable(false)
            .build()
            .map_err(|e| Error::Solver(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(e.to_string()))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => ConicStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicStatus::Infeasible
            }
            other => ConicStatus::Failed(format!("{other:?}")),
        };
        Ok(ConicSolution {
            status,
            x: sol.x.clone(),
            objective: sol.obj_val,
            iterations: sol.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(p: &ConicProgram) -> ConicSolution {
        ClarabelSolver::default().solve(p).unwrap()
    }

    #[test]
    fn linear_program() {
        // max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
        let mut p = ConicProgram::default();
        let (x, y) = (p.new_var(), p.new_var());
        p.minimize(x, -1.0);
        p.minimize(y, -1.0);
        p.add_nonneg(LinExpr::constant(4.0).add(x, -1.0).add(y, -2.0));
        p.add_nonneg(LinExpr::constant(6.0).add(x, -3.0).add(y, -1.0));
        p.add_nonneg(LinExpr::var(x));
        p.add_nonneg(LinExpr::var(y));
        let s = solve(&p);
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.x[x] - 1.6).abs() < 1e-6 && (s.x[y] - 1.2).abs() < 1e-6);
    }

    #[test]
    fn geometric_mean_of_two() {
        // max t s.t. t^2 <= x y, x + y <= 2  ->  t = 1
        let mut p = ConicProgram::default();
        let (x, y, t) = (p.new_var(), p.new_var(), p.new_var());
        p.minimize(t, -1.0);
        p.add_rotated(LinExpr::var(x), LinExpr::var(y), vec![LinExpr::var(t)]);
        p.add_nonneg(LinExpr::constant(2.0).add(x, -1.0).add(y, -1.0));
        let s = solve(&p);
        assert!((s.x[t] - 1.0).abs() < 1e-6);
        assert!(p.max_violation(&s.x) < 1e-7);
    }

    #[test]
    fn sum_of_squares_ball() {
        // min x + y s.t. x^2 + y^2 <= 2  ->  (-1, -1)
        let mut p = ConicProgram::default();
        let (x, y) = (p.new_var(), p.new_var());
        p.minimize(x, 1.0);
        p.minimize(y, 1.0);
        p.add_sum_squares_le(
            vec![LinExpr::var(x), LinExpr::var(y)],
            LinExpr::constant(2.0),
        );
        let s = solve(&p);
        assert!((s.x[x] + 1.0).abs() < 1e-6 && (s.x[y] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasibility_is_reported() {
        let mut p = ConicProgram::default();
        let x = p.new_var();
        p.minimize(x, 1.0);
        p.add_nonneg(LinExpr::var(x).add_const(-2.0));
        p.add_nonneg(LinExpr::constant(1.0).add(x, -1.0));
        assert_eq!(solve(&p).status, ConicStatus::Infeasible);
    }

    #[test]
    fn nonneg_blocks_merge() {
        let mut p = ConicProgram::default();
        let x = p.new_var();
        p.add_nonneg(LinExpr::var(x));
        p.add_nonneg(LinExpr::var(x));
        p.add_eq(LinExpr::var(x));
        p.add_nonneg(LinExpr::var(x));
        assert_eq!(
            p.cones,
            vec![Cone::Nonneg(2), Cone::Zero(1), Cone::Nonneg(1)]
        );
        assert_eq!(p.num_rows(), 4);
    }
}
