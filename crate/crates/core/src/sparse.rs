//! Compressed sparse row matrices with a fixed pattern.

/// Sparse matrix in CSR form. The pattern is fixed at construction and
/// entries are accumulated with [`CsrMatrix::add`].
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix whose pattern is the set of `(row, col)` pairs given.
    pub fn from_pattern(n_rows: usize, n_cols: usize, mut entries: Vec<(usize, usize)>) -> Self {
        entries.sort_unstable();
        entries.dedup();
        let mut row_ptr = vec![0; n_rows + 1];
        for &(i, j) in &entries {
            assert!(i < n_rows && j < n_cols, "pattern entry ({i}, {j}) out of range");
            row_ptr[i + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = entries.iter().map(|e| e.1).collect();
        let values = vec![0.0; col_idx.len()];
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    /// Adds `v` to entry `(i, j)`, which must belong to the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// `y += A x`.
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] += acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_add(x, &mut y);
        y
    }

    /// Largest `|A_ij - A_ji|` over the pattern.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.col_idx[k]] += self.values[k];
            }
        }
        d
    }

    /// Sum of two matrices of equal shape on the union of their patterns.
    pub fn sum(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.n_rows {
                entries.extend(m.col_idx[m.row_ptr[i]..m.row_ptr[i + 1]].iter().map(|&j| (i, j)));
            }
        }
        let mut out = CsrMatrix::from_pattern(self.n_rows, self.n_cols, entries);
        for m in [self, other] {
            for i in 0..m.n_rows {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    out.add(i, m.col_idx[k], m.values[k]);
                }
            }
        }
        out
    }
}
