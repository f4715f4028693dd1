//! Compressed sparse row storage for condensed FEM systems.

use std::collections::BTreeSet;

use super::dofs::{Constraints, DofMap};

/// Row structure of a condensed system: free rows couple free columns,
/// constrained rows carry only their diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn new(dofs: &DofMap, constraints: &Constraints) -> Self {
        let n = dofs.n_dofs();
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut targets = Vec::new();
        for cell in 0..dofs.n_cells() {
            targets.clear();
            for g in dofs.cell_dofs(cell) {
                constraints.for_each_target(g, |t, _| {
                    if constraints.is_free(t) {
                        targets.push(t);
                    }
                });
            }
            for &a in &targets {
                rows[a].extend(targets.iter().copied());
            }
        }
        for (d, row) in rows.iter_mut().enumerate() {
            if !constraints.is_free(d) {
                row.clear();
            }
            row.insert(d);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern { n, row_ptr, col_idx }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Storage position of `(row, col)`, if it is in the pattern.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi].binary_search(&col).ok().map(|k| lo + k)
    }
}

/// Square CSR matrix sharing a [`SparsityPattern`].
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: std::sync::Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: std::sync::Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn shared_pattern(&self) -> std::sync::Arc<SparsityPattern> {
        self.pattern.clone()
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` at `(row, col)`. Panics if the entry is outside the pattern.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let p = self
            .pattern
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) not in sparsity pattern"));
        self.values[p] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.position(row, col).map_or(0.0, |p| self.values[p])
    }

    pub fn set_diagonal(&mut self, row: usize, v: f64) {
        let p = self.pattern.position(row, row).expect("diagonal always stored");
        self.values[p] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let (lo, hi) = (p.row_ptr[i], p.row_ptr[i + 1]);
            *yi = p.col_idx[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let p = &*self.pattern;
        let mut worst = 0.0f64;
        for i in 0..p.n {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }
}
