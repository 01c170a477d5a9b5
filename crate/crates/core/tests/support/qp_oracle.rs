//! Random box- and row-constrained convex QPs with a brute-force
//! active-set enumeration oracle.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use overhang_core::qp::{kkt_residuals, solve_qp, QpProblem, QpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// General rows `a . x <= b`.
    pub rows: Vec<(DVector<f64>, f64)>,
}

impl Case {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=n + 2);
        let a = DMatrix::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = a.transpose() * &a;
        let c = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..0.0)).collect();
        let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        // Rows through a margin around an interior point keep the case feasible.
        let center = DVector::from_fn(n, |i, _| 0.5 * (lo[i] + hi[i]));
        let rows = (0..rng.gen_range(0..=2))
            .map(|_| {
                let a = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let b = a.dot(&center) + rng.gen_range(0.05..0.5);
                (a, b)
            })
            .collect();
        Self { h, c, lo, hi, rows }
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.c.dot(x)
    }

    pub fn feasible(&self, x: &DVector<f64>) -> bool {
        let tol = 1e-9;
        (0..x.len()).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol)
            && self.rows.iter().all(|(a, b)| a.dot(x) <= b + tol)
    }

    pub fn to_problem(&self) -> QpProblem {
        let n = self.c.len();
        let mut p = QpProblem::new(n);
        for i in 0..n {
            for j in 0..=i {
                p.hessian.add(i, j, self.h[(i, j)]);
            }
            p.gradient[i] = self.c[i];
            p.add_ge([(i, 1.0)], self.lo[i]);
            p.add_le([(i, 1.0)], self.hi[i]);
        }
        for (a, b) in &self.rows {
            p.add_le((0..n).map(|i| (i, a[i])), *b);
        }
        p
    }

    /// Minimum objective over the stationary points of every active set:
    /// each box variable at its lower bound, upper bound or free, and each
    /// general row active or not.
    pub fn brute_force(&self) -> (f64, DVector<f64>) {
        let n = self.c.len();
        let m = self.rows.len();
        let mut best = (f64::INFINITY, DVector::zeros(n));
        let combos = 3usize.pow(n as u32);
        for code in 0..combos {
            let mut state = vec![0u8; n];
            let mut rest = code;
            for s in state.iter_mut() {
                *s = (rest % 3) as u8;
                rest /= 3;
            }
            for subset in 0..(1usize << m) {
                let mut x = DVector::zeros(n);
                let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
                for i in 0..n {
                    match state[i] {
                        0 => x[i] = self.lo[i],
                        1 => x[i] = self.hi[i],
                        _ => {}
                    }
                }
                let active: Vec<usize> = (0..m).filter(|r| subset & (1 << r) != 0).collect();
                let nf = free.len();
                let na = active.len();
                if nf + na > 0 {
                    let dim = nf + na;
                    let mut k = DMatrix::zeros(dim, dim);
                    let mut rhs = DVector::zeros(dim);
                    for (a, &i) in free.iter().enumerate() {
                        for (b, &j) in free.iter().enumerate() {
                            k[(a, b)] = self.h[(i, j)];
                        }
                        let mut r = -self.c[i];
                        for j in 0..n {
                            if state[j] != 2 {
                                r -= self.h[(i, j)] * x[j];
                            }
                        }
                        rhs[a] = r;
                    }
                    for (b, &r) in active.iter().enumerate() {
                        let (row, bound) = &self.rows[r];
                        let mut v = *bound;
                        for j in 0..n {
                            if state[j] != 2 {
                                v -= row[j] * x[j];
                            }
                        }
                        rhs[nf + b] = v;
                        for (a, &i) in free.iter().enumerate() {
                            k[(nf + b, a)] = row[i];
                            k[(a, nf + b)] = row[i];
                        }
                    }
                    let sol = match k.clone().lu().solve(&rhs) {
                        Some(s) if s.iter().all(|v| v.is_finite()) => s,
                        _ => match k.svd(true, true).solve(&rhs, 1e-12) {
                            Ok(s) => s,
                            Err(_) => continue,
                        },
                    };
                    for (a, &i) in free.iter().enumerate() {
                        x[i] = sol[a];
                    }
                }
                if self.feasible(&x) {
                    let f = self.objective(&x);
                    if f < best.0 {
                        best = (f, x);
                    }
                }
            }
        }
        best
    }
}

/// Worst deviations of the solver from the oracle over `count` cases.
#[derive(Debug, Clone, Copy, Default)]
pub struct Agreement {
    pub objective: f64,
    /// Solution gap over strictly convex cases, where the minimizer is unique.
    pub x: f64,
    pub kkt: f64,
}

pub fn compare(seed: u64, count: usize) -> Agreement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Agreement::default();
    for case_id in 0..count {
        let case = Case::random(&mut rng);
        let p = case.to_problem();
        let sol = solve_qp(&p).unwrap();
        assert_eq!(sol.status, QpStatus::Solved, "case {case_id}");
        let x = DVector::from_vec(sol.x.clone());
        let (f_ref, x_ref) = case.brute_force();
        out.objective = out.objective.max((case.objective(&x) - f_ref).abs());
        out.kkt = out.kkt.max(kkt_residuals(&p, &sol.x, &sol.y, &sol.z).max());
        if case.h.clone().symmetric_eigenvalues().min() > 1e-3 {
            out.x = out.x.max((x - x_ref).amax());
        }
    }
    out
}
