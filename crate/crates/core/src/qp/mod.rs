//! Sparse convex quadratic programming.

mod ipm;
mod ldl;
mod sparse;

pub use sparse::{SparseMatrix, SymmetricMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("non-finite problem data in {0}")]
    NonFinite(&'static str),
}

/// `minimize 1/2 x^T H x + g^T x  s.t.  E x = d,  G x <= h`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QpProblem {
    pub hessian: SymmetricMatrix,
    pub gradient: Vec<f64>,
    pub eq_matrix: SparseMatrix,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: SparseMatrix,
    pub ineq_rhs: Vec<f64>,
}

impl QpProblem {
    pub fn new(n: usize) -> Self {
        Self {
            hessian: SymmetricMatrix::new(n),
            gradient: vec![0.0; n],
            eq_matrix: SparseMatrix::new(n),
            eq_rhs: Vec::new(),
            ineq_matrix: SparseMatrix::new(n),
            ineq_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.gradient.len()
    }

    pub fn add_eq(&mut self, row: impl IntoIterator<Item = (usize, f64)>, rhs: f64) -> usize {
        self.eq_rhs.push(rhs);
        self.eq_matrix.push_row(row)
    }

    /// Adds `row . x <= rhs`.
    pub fn add_le(&mut self, row: impl IntoIterator<Item = (usize, f64)>, rhs: f64) -> usize {
        self.ineq_rhs.push(rhs);
        self.ineq_matrix.push_row(row)
    }

    /// Adds `row . x >= rhs`.
    pub fn add_ge(&mut self, row: impl IntoIterator<Item = (usize, f64)>, rhs: f64) -> usize {
        self.add_le(row.into_iter().map(|(j, v)| (j, -v)), -rhs)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.hessian.quad_form(x) + x.iter().zip(&self.gradient).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.num_vars();
        if self.hessian.dim() != n || self.eq_matrix.ncols() != n || self.ineq_matrix.ncols() != n {
            return Err(QpError::Dimensions(format!("{n} variables")));
        }
        if self.eq_matrix.nrows() != self.eq_rhs.len() {
            return Err(QpError::Dimensions("equality rows and right-hand side".into()));
        }
        if self.ineq_matrix.nrows() != self.ineq_rhs.len() {
            return Err(QpError::Dimensions("inequality rows and right-hand side".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.gradient) {
            return Err(QpError::NonFinite("gradient"));
        }
        if !finite(&self.eq_rhs) || !finite(&self.ineq_rhs) {
            return Err(QpError::NonFinite("right-hand side"));
        }
        let entries_finite = self.hessian.entries().iter().all(|e| e.2.is_finite())
            && self
                .eq_matrix
                .rows()
                .chain(self.ineq_matrix.rows())
                .all(|r| r.iter().all(|e| e.1.is_finite()));
        if !entries_finite {
            return Err(QpError::NonFinite("matrix entries"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    PrimalInfeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub status: QpStatus,
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Inequality multipliers, nonnegative.
    pub z: Vec<f64>,
    pub iterations: usize,
    /// Constraint violation reached by the feasibility phase when the
    /// problem was declared infeasible.
    pub infeasibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 80,
        }
    }
}

/// Infinity-norm KKT residuals of a candidate primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.dual)
            .max(self.complementarity)
    }
}

pub fn kkt_residuals(p: &QpProblem, x: &[f64], y: &[f64], z: &[f64]) -> KktResiduals {
    let hx = p.hessian.mul_vec(x);
    let ety = p.eq_matrix.tmul_vec(y);
    let gtz = p.ineq_matrix.tmul_vec(z);
    let stationarity = (0..p.num_vars())
        .map(|i| (hx[i] + p.gradient[i] + ety[i] + gtz[i]).abs())
        .fold(0.0, f64::max);
    let primal_eq = p
        .eq_matrix
        .mul_vec(x)
        .iter()
        .zip(&p.eq_rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let slack: Vec<f64> = p
        .ineq_matrix
        .mul_vec(x)
        .iter()
        .zip(&p.ineq_rhs)
        .map(|(a, b)| b - a)
        .collect();
    let primal_ineq = slack.iter().map(|s| (-s).max(0.0)).fold(0.0, f64::max);
    let dual = z.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    let complementarity = slack.iter().zip(z).map(|(s, v)| (s * v).abs()).fold(0.0, f64::max);
    KktResiduals {
        stationarity,
        primal_eq,
        primal_ineq,
        dual,
        complementarity,
    }
}

/// Smallest uniform relaxation `t` of the inequalities that admits a
/// solution of the equalities, or infinity when the equalities alone fail.
fn feasibility_gap(p: &QpProblem, settings: &QpSettings) -> f64 {
    let n = p.num_vars();
    let t = n;
    let mut phase = QpProblem::new(n + 1);
    for i in 0..n {
        phase.hessian.add(i, i, 1e-8);
    }
    phase.gradient[t] = 1.0;
    for (row, &rhs) in p.eq_matrix.rows().zip(&p.eq_rhs) {
        phase.add_eq(row.iter().copied(), rhs);
    }
    for (row, &rhs) in p.ineq_matrix.rows().zip(&p.ineq_rhs) {
        phase.add_le(row.iter().copied().chain([(t, -1.0)]), rhs);
    }
    phase.add_ge([(t, 1.0)], 0.0);
    let out = ipm::solve(&phase, settings.tol, 2 * settings.max_iter);
    if !out.converged {
        return f64::INFINITY;
    }
    let residual = phase
        .eq_matrix
        .mul_vec(&out.x)
        .iter()
        .zip(&phase.eq_rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-6 {
        return f64::INFINITY;
    }
    out.x[t]
}

/// Re-solves the equality-constrained problem on the active set guessed
/// from an interior solution. Interior iterates leave inactive bounds a
/// distance of order `sqrt(mu)` away from their optimal value; the polished
/// point is kept only when its KKT residuals are no worse.
fn polish(p: &QpProblem, out: &ipm::IpmOutcome) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = p.num_vars();
    let me = p.eq_matrix.nrows();
    let gx = p.ineq_matrix.mul_vec(&out.x);
    let active: Vec<usize> = (0..p.ineq_matrix.nrows())
        .filter(|&i| out.z[i] > p.ineq_rhs[i] - gx[i])
        .collect();
    let na = active.len();
    let mut pattern: Vec<(usize, usize)> = p.hessian.entries().iter().map(|&(i, j, _)| (i, j)).collect();
    for (r, row) in p.eq_matrix.rows().enumerate() {
        pattern.extend(row.iter().map(|&(j, _)| (n + r, j)));
    }
    for (a, &i) in active.iter().enumerate() {
        pattern.extend(p.ineq_matrix.row(i).iter().map(|&(j, _)| (n + me + a, j)));
    }
    let mut signs = vec![1.0; n];
    signs.extend(std::iter::repeat_n(-1.0, me + na));
    let mut ldl = ldl::EnvelopeLdl::new(n + me + na, pattern, signs);
    for &(i, j, v) in p.hessian.entries() {
        ldl.add(i, j, v);
    }
    for (r, row) in p.eq_matrix.rows().enumerate() {
        for &(j, v) in row {
            ldl.add(n + r, j, v);
        }
    }
    for (a, &i) in active.iter().enumerate() {
        for &(j, v) in p.ineq_matrix.row(i) {
            ldl.add(n + me + a, j, v);
        }
    }
    ldl.factor(1e-9, 1e-13);
    let mut rhs: Vec<f64> = p.gradient.iter().map(|g| -g).collect();
    rhs.extend_from_slice(&p.eq_rhs);
    rhs.extend(active.iter().map(|&i| p.ineq_rhs[i]));
    let sol = ldl.solve(&rhs, 5);
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    let x = sol[..n].to_vec();
    let y = sol[n..n + me].to_vec();
    let mut z = vec![0.0; p.ineq_matrix.nrows()];
    for (a, &i) in active.iter().enumerate() {
        z[i] = sol[n + me + a];
    }
    let before = kkt_residuals(p, &out.x, &out.y, &out.z).max();
    let after = kkt_residuals(p, &x, &y, &z).max();
    (after <= before.max(1e-12)).then_some((x, y, z))
}

pub fn solve_qp(p: &QpProblem) -> Result<QpSolution, QpError> {
    solve_qp_with(p, &QpSettings::default())
}

pub fn solve_qp_with(p: &QpProblem, settings: &QpSettings) -> Result<QpSolution, QpError> {
    p.validate()?;
    let mut out = ipm::solve(p, settings.tol, settings.max_iter);
    if out.converged {
        if let Some((x, y, z)) = polish(p, &out) {
            out.x = x;
            out.y = y;
            out.z = z;
        }
        return Ok(QpSolution {
            status: QpStatus::Solved,
            x: out.x,
            y: out.y,
            z: out.z,
            iterations: out.iterations,
            infeasibility: 0.0,
        });
    }
    let gap = feasibility_gap(p, settings);
    let scale = 1.0 + p.ineq_rhs.iter().chain(&p.eq_rhs).fold(0.0f64, |m, v| m.max(v.abs()));
    let status = if gap > 1e-7 * scale {
        QpStatus::PrimalInfeasible
    } else {
        QpStatus::MaxIter
    };
    Ok(QpSolution {
        status,
        x: out.x,
        y: out.y,
        z: out.z,
        iterations: out.iterations,
        infeasibility: if status == QpStatus::PrimalInfeasible { gap } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_active() {
        // min x^2 s.t. x >= 1
        let mut p = QpProblem::new(1);
        p.hessian.add(0, 0, 2.0);
        p.add_ge([(0, 1.0)], 1.0);
        let sol = solve_qp(&p).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-8);
        assert!(kkt_residuals(&p, &sol.x, &sol.y, &sol.z).max() < 1e-8);
    }

    #[test]
    fn contradictory_bounds() {
        let mut p = QpProblem::new(1);
        p.hessian.add(0, 0, 2.0);
        p.add_ge([(0, 1.0)], 1.0);
        p.add_le([(0, 1.0)], 0.0);
        let sol = solve_qp(&p).unwrap();
        assert_eq!(sol.status, QpStatus::PrimalInfeasible);
        assert!((sol.infeasibility - 0.5).abs() < 1e-6);
    }

    #[test]
    fn equality_constrained() {
        // min x0^2 + x1^2 s.t. x0 + x1 = 2
        let mut p = QpProblem::new(2);
        p.hessian.add(0, 0, 2.0);
        p.hessian.add(1, 1, 2.0);
        p.add_eq([(0, 1.0), (1, 1.0)], 2.0);
        let sol = solve_qp(&p).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_program() {
        // min -x0 - x1 s.t. x0 + 2 x1 <= 4, 3 x0 + x1 <= 6, x >= 0
        let mut p = QpProblem::new(2);
        p.gradient = vec![-1.0, -1.0];
        p.add_le([(0, 1.0), (1, 2.0)], 4.0);
        p.add_le([(0, 3.0), (1, 1.0)], 6.0);
        p.add_ge([(0, 1.0)], 0.0);
        p.add_ge([(1, 1.0)], 0.0);
        let sol = solve_qp(&p).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.x[0] - 1.6).abs() < 1e-7 && (sol.x[1] - 1.2).abs() < 1e-7);
    }
}
