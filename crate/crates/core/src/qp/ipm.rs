//! Mehrotra predictor-corrector interior point method for
//!
//! ```text
//! minimize 1/2 x^T H x + c^T x   subject to   E x = d,   G x + s = h,   s >= 0
//! ```
//!
//! Each Newton system is reduced to the quasi-definite form
//! `[H + G^T (Z/S) G, E^T; E, 0]` and solved with the envelope LDL^T.

use super::ldl::EnvelopeLdl;
use super::QpProblem;

const PRIMAL_REG: f64 = 1e-9;
const DUAL_REG: f64 = 1e-9;
const PIVOT_FLOOR: f64 = 1e-13;
const REFINEMENTS: usize = 3;
const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest step in `(0, 1]` keeping `v + alpha dv >= 0`.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0f64, f64::min)
}

struct Kkt<'a> {
    p: &'a QpProblem,
    n: usize,
    ldl: EnvelopeLdl,
}

impl<'a> Kkt<'a> {
    fn new(p: &'a QpProblem) -> Self {
        let n = p.num_vars();
        let me = p.eq_matrix.nrows();
        let mut pattern: Vec<(usize, usize)> = p.hessian.entries().iter().map(|&(i, j, _)| (i, j)).collect();
        for row in p.ineq_matrix.rows() {
            for (a, &(i, _)) in row.iter().enumerate() {
                for &(j, _) in &row[..a] {
                    pattern.push((i, j));
                }
            }
        }
        for (r, row) in p.eq_matrix.rows().enumerate() {
            for &(j, _) in row {
                pattern.push((n + r, j));
            }
        }
        let mut signs = vec![1.0; n];
        signs.extend(std::iter::repeat_n(-1.0, me));
        Self {
            p,
            n,
            ldl: EnvelopeLdl::new(n + me, pattern, signs),
        }
    }

    /// Assembles `H + G^T diag(w) G` and `E`, then factors.
    fn factor(&mut self, w: &[f64]) {
        self.ldl.clear();
        for &(i, j, v) in self.p.hessian.entries() {
            self.ldl.add(i, j, v);
        }
        for (row, &wi) in self.p.ineq_matrix.rows().zip(w) {
            for (a, &(i, vi)) in row.iter().enumerate() {
                self.ldl.add(i, i, wi * vi * vi);
                for &(j, vj) in &row[..a] {
                    self.ldl.add(i, j, wi * vi * vj);
                }
            }
        }
        for (r, row) in self.p.eq_matrix.rows().enumerate() {
            for &(j, v) in row {
                self.ldl.add(self.n + r, j, v);
            }
        }
        self.ldl.factor(PRIMAL_REG.max(DUAL_REG), PIVOT_FLOOR);
    }

    fn solve(&self, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut rhs = rx.to_vec();
        rhs.extend_from_slice(ry);
        let mut sol = self.ldl.solve(&rhs, REFINEMENTS);
        let y = sol.split_off(self.n);
        (sol, y)
    }
}

pub(crate) fn solve(p: &QpProblem, tol: f64, max_iter: usize) -> IpmOutcome {
    let n = p.num_vars();
    let me = p.eq_matrix.nrows();
    let mi = p.ineq_matrix.nrows();
    let c = &p.gradient;
    let d = &p.eq_rhs;
    let h = &p.ineq_rhs;
    let mut kkt = Kkt::new(p);

    // Start: minimize 1/2 x'Hx + c'x + 1/2 |Gx - h|^2 subject to Ex = d.
    kkt.factor(&vec![1.0; mi]);
    let mut rx: Vec<f64> = p.ineq_matrix.tmul_vec(h);
    for (r, ci) in rx.iter_mut().zip(c) {
        *r -= ci;
    }
    let (mut x, mut y) = kkt.solve(&rx, d);
    let gx = p.ineq_matrix.mul_vec(&x);
    let mut s: Vec<f64> = h.iter().zip(&gx).map(|(hi, gi)| hi - gi).collect();
    let mut z: Vec<f64> = s.iter().map(|v| -v).collect();
    if mi > 0 {
        for v in [&mut s, &mut z] {
            let lowest = v.iter().cloned().fold(f64::INFINITY, f64::min);
            if lowest <= 1e-8 {
                let shift = 1.0 - lowest.min(0.0);
                v.iter_mut().for_each(|e| *e += shift);
            }
        }
    }

    let scale_c = 1.0 + inf_norm(c);
    let scale_d = 1.0 + inf_norm(d);
    let scale_h = 1.0 + inf_norm(h);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..=max_iter {
        iterations = iter;
        let hx = p.hessian.mul_vec(&x);
        let ety = p.eq_matrix.tmul_vec(&y);
        let gtz = p.ineq_matrix.tmul_vec(&z);
        let r_dual: Vec<f64> = (0..n).map(|i| hx[i] + c[i] + ety[i] + gtz[i]).collect();
        let ex = p.eq_matrix.mul_vec(&x);
        let r_eq: Vec<f64> = ex.iter().zip(d).map(|(a, b)| a - b).collect();
        let gx = p.ineq_matrix.mul_vec(&x);
        let r_in: Vec<f64> = (0..mi).map(|i| gx[i] + s[i] - h[i]).collect();
        let mu = if mi > 0 { dot(&s, &z) / mi as f64 } else { 0.0 };

        let finite = x.iter().chain(&y).chain(&z).chain(&s).all(|v| v.is_finite());
        if !finite || inf_norm(&x) > 1e14 {
            break;
        }
        let primal_ok = inf_norm(&r_eq) <= tol * scale_d && inf_norm(&r_in) <= tol * scale_h;
        let dual_ok = inf_norm(&r_dual) <= tol * scale_c;
        if primal_ok && dual_ok && mu <= tol {
            converged = true;
            break;
        }
        if iter == max_iter {
            break;
        }

        let w: Vec<f64> = (0..mi).map(|i| z[i] / s[i]).collect();
        kkt.factor(&w);

        // Direction for a given complementarity right-hand side `r_sz`
        // (target for s_i z_i residual).
        let direction = |r_sz: &[f64]| {
            // (H + G'WG) dx + E'dy = -r_dual - G' S^-1 (Z r_in - r_sz)
            let t: Vec<f64> = (0..mi).map(|i| (z[i] * r_in[i] - r_sz[i]) / s[i]).collect();
            let gt = p.ineq_matrix.tmul_vec(&t);
            let rx: Vec<f64> = (0..n).map(|i| -r_dual[i] - gt[i]).collect();
            let ry: Vec<f64> = r_eq.iter().map(|v| -v).collect();
            let (dx, dy) = kkt.solve(&rx, &ry);
            let gdx = p.ineq_matrix.mul_vec(&dx);
            let ds: Vec<f64> = (0..mi).map(|i| -r_in[i] - gdx[i]).collect();
            let dz: Vec<f64> = (0..mi).map(|i| (-r_sz[i] - z[i] * ds[i]) / s[i]).collect();
            (dx, dy, ds, dz)
        };

        let sz: Vec<f64> = (0..mi).map(|i| s[i] * z[i]).collect();
        let (dx, dy, ds, dz) = direction(&sz);
        let alpha_aff = max_step(&s, &ds).min(max_step(&z, &dz));
        let (dx, dy, ds, dz) = if mi > 0 {
            let mu_aff = (0..mi)
                .map(|i| (s[i] + alpha_aff * ds[i]) * (z[i] + alpha_aff * dz[i]))
                .sum::<f64>()
                / mi as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let r_sz: Vec<f64> = (0..mi).map(|i| sz[i] + ds[i] * dz[i] - sigma * mu).collect();
            direction(&r_sz)
        } else {
            (dx, dy, ds, dz)
        };
        let alpha = (STEP_FRACTION * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        let alpha = if mi == 0 { 1.0 } else { alpha };
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for i in 0..me {
            y[i] += alpha * dy[i];
        }
        for i in 0..mi {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
    }
    IpmOutcome {
        x,
        y,
        z,
        converged,
        iterations,
    }
}
