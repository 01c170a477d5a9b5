//! Envelope LDL^T factorization of symmetric quasi-definite matrices.
//!
//! The matrix is reordered once by reverse Cuthill-McKee; its lower envelope
//! is stored row by row and factored without pivoting. Each pivot has an
//! expected sign (positive for primal, negative for dual unknowns); pivots
//! that are tiny or of the wrong sign are replaced by a signed regularization.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub(crate) struct EnvelopeLdl {
    n: usize,
    /// `pos[old] = new`
    pos: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of each row's storage.
    start: Vec<usize>,
    signs: Vec<f64>,
    matrix: Vec<f64>,
    factor: Vec<f64>,
    diag: Vec<f64>,
}

/// Reverse Cuthill-McKee ordering; returns `order[new] = old`.
fn rcm(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]) {
        // Move towards a pseudo-peripheral node: restart from the last node
        // reached by a BFS a couple of times.
        let mut root = seed;
        for _ in 0..2 {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([root]);
            seen[root] = true;
            let mut last = root;
            while let Some(v) = queue.pop_front() {
                last = v;
                for &w in &adj[v] {
                    if !seen[w] && !visited[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            root = last;
        }
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

impl EnvelopeLdl {
    /// `pattern` lists the off-diagonal nonzeros `(i, j)` of the matrix in
    /// original numbering; `signs` gives the expected sign of each pivot.
    pub fn new(n: usize, pattern: impl IntoIterator<Item = (usize, usize)>, signs: Vec<f64>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (i, j) in pattern {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        // Dense rows (a variable shared by every constraint) would widen the
        // envelope of everything ordered after them, so they go last.
        let dense_degree = 40.max((6.0 * (n as f64).sqrt()) as usize);
        let dense: Vec<bool> = adj.iter().map(|a| a.len() > dense_degree).collect();
        let sparse_adj: Vec<Vec<usize>> = adj
            .iter()
            .enumerate()
            .map(|(v, a)| {
                if dense[v] {
                    Vec::new()
                } else {
                    a.iter().copied().filter(|&w| !dense[w]).collect()
                }
            })
            .collect();
        let mut order: Vec<usize> = rcm(n, &sparse_adj).into_iter().filter(|&v| !dense[v]).collect();
        order.extend((0..n).filter(|&v| dense[v]));
        let mut pos = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, nbrs) in adj.iter().enumerate() {
            let r = pos[old];
            for &w in nbrs {
                let c = pos[w];
                if c < r {
                    first[r] = first[r].min(c);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for r in 0..n {
            start.push(acc);
            acc += r - first[r] + 1;
        }
        start.push(acc);
        let signs = order.iter().map(|&old| signs[old]).collect();
        Self {
            n,
            pos,
            first,
            start,
            signs,
            matrix: vec![0.0; acc],
            factor: vec![0.0; acc],
            diag: vec![0.0; n],
        }
    }

    pub fn clear(&mut self) {
        self.matrix.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` at `(i, j)` (and symmetrically); `(i, j)` must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = (self.pos[i], self.pos[j]);
        let (r, c) = if a >= b { (a, b) } else { (b, a) };
        debug_assert!(c >= self.first[r], "entry outside the envelope");
        self.matrix[self.start[r] + c - self.first[r]] += v;
    }

    /// Factors the stored matrix plus `reg * sign` on the diagonal.
    /// Returns the number of pivots that needed replacement.
    pub fn factor(&mut self, reg: f64, pivot_floor: f64) -> usize {
        self.factor.copy_from_slice(&self.matrix);
        let mut replaced = 0;
        let mut work = vec![0.0; self.n];
        for r in 0..self.n {
            let fr = self.first[r];
            let sr = self.start[r];
            // Row r of L (scaled by D) computed column by column.
            for c in fr..r {
                let fc = self.first[c];
                let sc = self.start[c];
                let lo = fr.max(fc);
                let mut acc = self.factor[sr + c - fr];
                for k in lo..c {
                    acc -= work[k] * self.factor[sc + k - fc];
                }
                work[c] = acc; // l_rc * d_c
                self.factor[sr + c - fr] = acc / self.diag[c];
            }
            let mut d = self.factor[sr + r - fr] + reg * self.signs[r];
            for k in fr..r {
                d -= work[k] * self.factor[sr + k - fr];
            }
            if !(d * self.signs[r] > pivot_floor) {
                d = self.signs[r] * pivot_floor.max(reg);
                replaced += 1;
            }
            self.diag[r] = d;
            self.factor[sr + r - fr] = 1.0;
        }
        replaced
    }

    fn solve_permuted(&self, x: &mut [f64]) {
        for r in 0..self.n {
            let fr = self.first[r];
            let sr = self.start[r];
            let mut acc = x[r];
            for c in fr..r {
                acc -= self.factor[sr + c - fr] * x[c];
            }
            x[r] = acc;
        }
        for r in 0..self.n {
            x[r] /= self.diag[r];
        }
        for r in (0..self.n).rev() {
            let fr = self.first[r];
            let sr = self.start[r];
            let xr = x[r];
            for c in fr..r {
                x[c] -= self.factor[sr + c - fr] * xr;
            }
        }
    }

    /// Product with the stored (unregularized) matrix, original numbering.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut xp = vec![0.0; self.n];
        for (old, &v) in x.iter().enumerate() {
            xp[self.pos[old]] = v;
        }
        let mut yp = vec![0.0; self.n];
        for r in 0..self.n {
            let fr = self.first[r];
            let sr = self.start[r];
            for c in fr..r {
                let v = self.matrix[sr + c - fr];
                yp[r] += v * xp[c];
                yp[c] += v * xp[r];
            }
            yp[r] += self.matrix[sr + r - fr] * xp[r];
        }
        (0..self.n).map(|old| yp[self.pos[old]]).collect()
    }

    /// Solves against the factored matrix, then refines against the stored one.
    pub fn solve(&self, b: &[f64], refinements: usize) -> Vec<f64> {
        let apply = |rhs: &[f64]| {
            let mut xp = vec![0.0; self.n];
            for (old, &v) in rhs.iter().enumerate() {
                xp[self.pos[old]] = v;
            }
            self.solve_permuted(&mut xp);
            (0..self.n).map(|old| xp[self.pos[old]]).collect::<Vec<f64>>()
        };
        let mut x = apply(b);
        for _ in 0..refinements {
            let kx = self.mul(&x);
            let res: Vec<f64> = b.iter().zip(&kx).map(|(bi, ki)| bi - ki).collect();
            let norm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if norm == 0.0 {
                break;
            }
            let dx = apply(&res);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        x
    }

    #[cfg(test)]
    pub fn envelope_size(&self) -> usize {
        self.matrix.len()
    }
}
