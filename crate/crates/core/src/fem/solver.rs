//! Linear solvers for condensed systems: sparse Cholesky with cached
//! symbolic analysis (LU fallback) and Jacobi-preconditioned CG.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use super::sparse::{CsrMatrix, SparsityPattern};
use crate::error::{Error, Result};

/// Relative residual above which a direct solve is refined.
const REFINE_TOL: f64 = 1e-10;
/// Relative residual above which a direct solve is rejected.
const ACCEPT_TOL: f64 = 1e-6;

enum Factor {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

/// Direct solver that keeps the symbolic factorization as long as the
/// sparsity pattern does not change.
#[derive(Default)]
pub struct DirectSolver {
    pattern: Option<Arc<SparsityPattern>>,
    llt_symbolic: Option<SymbolicLlt<usize>>,
    lu_symbolic: Option<SymbolicLu<usize>>,
    factor: Option<Factor>,
    n_factorizations: usize,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("has_factor", &self.factor.is_some())
            .field("n_factorizations", &self.n_factorizations)
            .finish()
    }
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_factorizations(&self) -> usize {
        self.n_factorizations
    }

    pub fn is_factorized(&self) -> bool {
        self.factor.is_some()
    }

    /// Drops the numeric factor (the symbolic analysis is kept).
    pub fn invalidate(&mut self) {
        self.factor = None;
    }

    /// Factorizes `a`, which must be symmetric; Cholesky is tried first.
    pub fn factorize(&mut self, a: &CsrMatrix) -> Result<()> {
        super::threads();
        let pattern = a.shared_pattern();
        let same = self.pattern.as_ref().is_some_and(|p| Arc::ptr_eq(p, &pattern) || **p == *pattern);
        if !same {
            self.llt_symbolic = None;
            self.lu_symbolic = None;
            self.pattern = Some(pattern);
        }
        self.factor = None;
        let p = a.pattern();
        // CSR of a symmetric matrix read as CSC is the same matrix.
        let sym = SymbolicSparseColMatRef::new_checked(p.n(), p.n(), p.row_ptr(), None, p.col_idx());
        let mat = SparseColMatRef::new(sym, a.values());
        if self.llt_symbolic.is_none() {
            let s = SymbolicLlt::try_new(sym, faer::Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
            self.llt_symbolic = Some(s);
        }
        let symbolic = self.llt_symbolic.clone().expect("set above");
        self.n_factorizations += 1;
        match Llt::try_new_with_symbolic(symbolic, mat, faer::Side::Lower) {
            Ok(f) => {
                self.factor = Some(Factor::Llt(f));
                return Ok(());
            }
            Err(e) => log::debug!("Cholesky failed ({e:?}), falling back to LU"),
        }
        if self.lu_symbolic.is_none() {
            let s = SymbolicLu::try_new(sym).map_err(|e| Error::Solver(format!("{e:?}")))?;
            self.lu_symbolic = Some(s);
        }
        let symbolic = self.lu_symbolic.clone().expect("set above");
        let f = Lu::try_new_with_symbolic(symbolic, mat).map_err(|e| Error::Solver(format!("LU: {e:?}")))?;
        self.factor = Some(Factor::Lu(f));
        Ok(())
    }

    fn apply(&self, x: &mut [f64]) {
        let n = x.len();
        let rhs = MatMut::from_column_major_slice_mut(x, n, 1);
        match self.factor.as_ref().expect("factorize before solve") {
            Factor::Llt(f) => f.solve_in_place(rhs),
            Factor::Lu(f) => f.solve_in_place(rhs),
        }
    }

    /// Solves `a x = b` with the current factor, refining against `a` when
    /// the residual is large.
    pub fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.apply(&mut x);
        let bnorm = norm(b).max(f64::MIN_POSITIVE);
        let mut r = vec![0.0; b.len()];
        let mut rel = f64::INFINITY;
        for _ in 0..3 {
            a.mul_vec(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            rel = norm(&r) / bnorm;
            if !rel.is_finite() {
                return Err(Error::Solver("non-finite solution".into()));
            }
            if rel <= REFINE_TOL {
                return Ok(x);
            }
            self.apply(&mut r);
            x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
        }
        if rel <= ACCEPT_TOL {
            Ok(x)
        } else {
            Err(Error::Solver(format!("relative residual {rel:.3e} after refinement")))
        }
    }

    /// Factorizes and solves in one go.
    pub fn factorize_and_solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        self.factorize(a)?;
        self.solve(a, b)
    }
}

/// Jacobi-preconditioned conjugate gradients for SPD systems. Returns the
/// solution and the iteration count.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Solver(format!("CG breakdown (pAp = {pap:e})")));
        }
        let step = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= step * api);
        if norm(&r) <= rel_tol * bnorm {
            return Ok((x, it));
        }
        z.iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(zi, (ri, di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::Solver(format!("CG did not converge in {max_iter} iterations")))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::assemble;
    use crate::fem::dofs::{Constraints, DofMap, FieldKind};
    use crate::mesh::QuadMesh;

    fn reaction_diffusion(mesh: &QuadMesh, shift: f64) -> (CsrMatrix, Vec<f64>) {
        let dofs = DofMap::new(mesh, FieldKind::PhaseField);
        let cons = Constraints::hanging_only(&dofs);
        let q = crate::fem::quadrature::QuadratureTable::gauss(2);
        let mut a = CsrMatrix::zeros(Arc::new(SparsityPattern::new(&dofs, &cons)));
        let mut b = vec![0.0; dofs.n_dofs()];
        assemble(
            &dofs,
            &cons,
            |cell, local| {
                let c = &mesh.cells()[cell];
                let h = c.size;
                for (k, w) in q.weights.iter().enumerate() {
                    let s = &q.shapes[k];
                    let x = c.map(q.points[k][0], q.points[k][1]);
                    for i in 0..4 {
                        local.vector[i] += w * c.area() * (x[0] - x[1] * x[1]) * s.values[i];
                        for j in 0..4 {
                            let gg = s.grads[i][0] * s.grads[j][0] / (h[0] * h[0])
                                + s.grads[i][1] * s.grads[j][1] / (h[1] * h[1]);
                            local.matrix[i * 4 + j] += w * c.area() * (gg + shift * s.values[i] * s.values[j]);
                        }
                    }
                }
                Ok(())
            },
            Some(&mut a),
            &mut b,
        )
        .unwrap();
        (a, b)
    }

    #[test]
    fn direct_and_cg_agree() {
        let mesh = QuadMesh::unit_square().refine_global(3).refine_where(|c| c.centroid[0] > 0.7, 1);
        let (a, b) = reaction_diffusion(&mesh, 3.0);
        let mut direct = DirectSolver::new();
        let x = direct.factorize_and_solve(&a, &b).unwrap();
        let (y, iters) = conjugate_gradient(&a, &b, 1e-13, 1000).unwrap();
        assert!(iters > 0);
        let diff: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn symbolic_analysis_is_reused() {
        let mesh = QuadMesh::unit_square().refine_global(2);
        let (a, b) = reaction_diffusion(&mesh, 1.0);
        let mut solver = DirectSolver::new();
        let x1 = solver.factorize_and_solve(&a, &b).unwrap();
        let mut a2 = a.clone();
        a2.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let x2 = solver.factorize_and_solve(&a2, &b).unwrap();
        assert_eq!(solver.n_factorizations(), 2);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - 2.0 * q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_system_falls_back_to_lu() {
        let mesh = QuadMesh::unit_square().refine_global(2);
        let (a, b) = reaction_diffusion(&mesh, -30.0);
        let mut solver = DirectSolver::new();
        let x = solver.factorize_and_solve(&a, &b).unwrap();
        let mut r = vec![0.0; b.len()];
        a.mul_vec(&x, &mut r);
        let res: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(res < 1e-10);
    }
}
