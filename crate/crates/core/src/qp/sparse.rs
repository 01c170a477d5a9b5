/// Row-major sparse matrix; duplicate entries within a row are summed on use.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Appends a row given as `(column, value)` pairs and returns its index.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) -> usize {
        let row: Vec<(usize, f64)> = entries.into_iter().filter(|e| e.1 != 0.0).collect();
        assert!(row.iter().all(|e| e.0 < self.ncols), "column index out of range");
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, v)| v * x[j]).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row_dot(i, x)).collect()
    }

    /// `A^T y`
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, v) in row {
                    out[j] += v * yi;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[i][j] += v;
            }
        }
        out
    }
}

/// Symmetric matrix stored as its lower triangle, `(row, col, value)` with
/// `row >= col`; duplicates are summed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymmetricMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymmetricMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` at `(i, j)` and, implicitly, at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "index out of range");
        if v != 0.0 {
            self.entries.push((i.max(j), i.min(j), v));
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            out[i] += v * x[j];
            if i != j {
                out[j] += v * x[i];
            }
        }
        out
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for &(i, j, v) in &self.entries {
            out[i][j] += v;
            if i != j {
                out[j][i] += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let mut a = SparseMatrix::new(3);
        a.push_row([(0, 1.0), (2, 2.0)]);
        a.push_row([(1, -1.0), (1, 3.0)]);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, 4.0]);
        assert_eq!(a.tmul_vec(&[1.0, 2.0]), vec![1.0, 4.0, 2.0]);
        assert_eq!(a.nnz(), 4);

        let mut h = SymmetricMatrix::new(2);
        h.add(0, 0, 2.0);
        h.add(0, 1, 1.0);
        h.add(1, 1, 4.0);
        assert_eq!(h.mul_vec(&[1.0, 1.0]), vec![3.0, 5.0]);
        assert_eq!(h.quad_form(&[1.0, 1.0]), 8.0);
    }
}
