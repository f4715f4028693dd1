//! Cell-wise assembly with hanging-node condensation.
//!
//! Systems are assembled in Newton form: constrained rows become identity
//! rows with zero right-hand side, so the solution is an increment that
//! respects homogeneous constraints.

use rayon::prelude::*;

use super::dofs::{Constraints, DofMap};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

const CHUNK: usize = 2048;

/// Local matrix (row-major) and vector of one cell.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub matrix: Vec<f64>,
    pub vector: Vec<f64>,
    n: usize,
    with_matrix: bool,
}

impl LocalSystem {
    pub fn new(n: usize, with_matrix: bool) -> Self {
        LocalSystem {
            matrix: if with_matrix { vec![0.0; n * n] } else { Vec::new() },
            vector: vec![0.0; n],
            n,
            with_matrix,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the kernel has to fill `matrix`.
    pub fn with_matrix(&self) -> bool {
        self.with_matrix
    }

    pub fn clear(&mut self) {
        self.matrix.iter_mut().for_each(|v| *v = 0.0);
        self.vector.iter_mut().for_each(|v| *v = 0.0);
    }

    fn is_finite(&self) -> bool {
        self.matrix.iter().chain(&self.vector).all(|v| v.is_finite())
    }
}

/// Assembles the condensed vector and, when `matrix` is given, the condensed
/// matrix. `kernel(cell, local)` fills a zeroed local system.
pub fn assemble<K>(
    dofs: &DofMap,
    constraints: &Constraints,
    kernel: K,
    mut matrix: Option<&mut CsrMatrix>,
    vector: &mut [f64],
) -> Result<()>
where
    K: Fn(usize, &mut LocalSystem) -> Result<()> + Sync,
{
    let n_local = 4 * dofs.components();
    let with_matrix = matrix.is_some();
    vector.iter_mut().for_each(|v| *v = 0.0);
    if let Some(a) = matrix.as_deref_mut() {
        a.fill_zero();
    }
    let n_cells = dofs.n_cells();
    let mut scratch = Scatter::default();

    let run = |cell: usize, local: &mut LocalSystem| -> Result<()> {
        local.clear();
        kernel(cell, local)?;
        if local.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { cell })
        }
    };

    if super::threads() > 1 {
        for start in (0..n_cells).step_by(CHUNK) {
            let end = (start + CHUNK).min(n_cells);
            let locals = (start..end)
                .into_par_iter()
                .map(|cell| {
                    let mut local = LocalSystem::new(n_local, with_matrix);
                    run(cell, &mut local).map(|_| local)
                })
                .collect::<Result<Vec<_>>>()?;
            for (k, local) in locals.iter().enumerate() {
                scratch.insert(dofs, constraints, start + k, local, matrix.as_deref_mut(), vector);
            }
        }
    } else {
        let mut local = LocalSystem::new(n_local, with_matrix);
        for cell in 0..n_cells {
            run(cell, &mut local)?;
            scratch.insert(dofs, constraints, cell, &local, matrix.as_deref_mut(), vector);
        }
    }

    constraints.zero_constrained(vector);
    if let Some(a) = matrix {
        for d in 0..a.n() {
            if !constraints.is_free(d) {
                a.set_diagonal(d, 1.0);
            }
        }
    }
    Ok(())
}

/// Assembles the condensed vector only.
pub fn assemble_vector<K>(dofs: &DofMap, constraints: &Constraints, kernel: K, vector: &mut [f64]) -> Result<()>
where
    K: Fn(usize, &mut LocalSystem) -> Result<()> + Sync,
{
    assemble(dofs, constraints, kernel, None, vector)
}

#[derive(Default)]
struct Scatter {
    targets: Vec<(usize, usize, f64)>,
}

impl Scatter {
    fn insert(
        &mut self,
        dofs: &DofMap,
        constraints: &Constraints,
        cell: usize,
        local: &LocalSystem,
        matrix: Option<&mut CsrMatrix>,
        vector: &mut [f64],
    ) {
        self.targets.clear();
        for (a, g) in dofs.cell_dofs(cell).enumerate() {
            constraints.for_each_target(g, |t, w| {
                if constraints.is_free(t) {
                    self.targets.push((a, t, w));
                }
            });
        }
        for &(a, t, w) in &self.targets {
            vector[t] += w * local.vector[a];
        }
        if let Some(m) = matrix {
            let n = local.n;
            for &(a, ta, wa) in &self.targets {
                for &(b, tb, wb) in &self.targets {
                    let v = local.matrix[a * n + b];
                    if v != 0.0 {
                        m.add(ta, tb, wa * wb * v);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::dofs::FieldKind;
    use crate::fem::quadrature::QuadratureTable;
    use crate::fem::sparse::SparsityPattern;
    use crate::mesh::QuadMesh;
    use std::sync::Arc;

    fn laplace_kernel<'a>(mesh: &'a QuadMesh, q: &'a QuadratureTable) -> impl Fn(usize, &mut LocalSystem) -> Result<()> + Sync + 'a {
        move |cell, local| {
            let h = mesh.cells()[cell].size;
            for (k, w) in q.weights.iter().enumerate() {
                let g = &q.shapes[k].grads;
                for a in 0..4 {
                    for b in 0..4 {
                        let gg = g[a][0] * g[b][0] / (h[0] * h[0]) + g[a][1] * g[b][1] / (h[1] * h[1]);
                        local.matrix[a * 4 + b] += w * gg * h[0] * h[1];
                    }
                }
            }
            Ok(())
        }
    }

    #[test]
    fn mass_matrix_sums_to_area() {
        let mesh = QuadMesh::unit_square().refine_global(2).refine_where(|c| c.centroid[1] > 0.6, 1);
        let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
        let cons = Constraints::hanging_only(&dofs);
        let q = QuadratureTable::gauss(2);
        let mut a = CsrMatrix::zeros(Arc::new(SparsityPattern::new(&dofs, &cons)));
        let mut v = vec![0.0; dofs.n_dofs()];
        assemble(
            &dofs,
            &cons,
            |cell, local| {
                let area = mesh.cells()[cell].area();
                for (k, w) in q.weights.iter().enumerate() {
                    let phi = &q.shapes[k].values;
                    for a in 0..4 {
                        local.vector[a] += w * area * phi[a];
                        for b in 0..4 {
                            local.matrix[a * 4 + b] += w * area * phi[a] * phi[b];
                        }
                    }
                }
                Ok(())
            },
            Some(&mut a),
            &mut v,
        )
        .unwrap();
        let free: f64 = (0..dofs.n_dofs()).filter(|&d| cons.is_free(d)).map(|d| v[d]).sum();
        assert!((free - 1.0).abs() < 1e-14);
        let mut total = 0.0;
        for i in 0..a.n() {
            for j in 0..a.n() {
                if cons.is_free(i) && cons.is_free(j) {
                    total += a.get(i, j);
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-14);
        assert!(a.asymmetry() < 1e-16);
    }

    #[test]
    fn stiffness_annihilates_constants_on_hanging_mesh() {
        let mesh = QuadMesh::unit_square().refine_global(2).refine_where(|c| c.centroid[0] < 0.3, 2);
        let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
        let cons = Constraints::hanging_only(&dofs);
        let q = QuadratureTable::gauss(2);
        let mut a = CsrMatrix::zeros(Arc::new(SparsityPattern::new(&dofs, &cons)));
        let mut v = vec![0.0; dofs.n_dofs()];
        assemble(&dofs, &cons, laplace_kernel(&mesh, &q), Some(&mut a), &mut v).unwrap();
        let ones: Vec<f64> = (0..a.n()).map(|d| if cons.is_free(d) { 1.0 } else { 0.0 }).collect();
        let mut y = vec![0.0; a.n()];
        a.mul_vec(&ones, &mut y);
        for d in (0..a.n()).filter(|&d| cons.is_free(d)) {
            assert!(y[d].abs() < 1e-13, "row {d}: {}", y[d]);
        }
    }

    #[test]
    fn non_finite_local_values_are_reported() {
        let mesh = QuadMesh::unit_square().refine_global(1);
        let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
        let cons = Constraints::hanging_only(&dofs);
        let mut v = vec![0.0; dofs.n_dofs()];
        let err = assemble_vector(
            &dofs,
            &cons,
            |cell, local| {
                if cell == 2 {
                    local.vector[0] = f64::NAN;
                }
                Ok(())
            },
            &mut v,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { cell: 2 }));
    }
}
