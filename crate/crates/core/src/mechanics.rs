//! Displacement subproblem: degraded (linear or strain-limiting) elasticity
//! with the L-scheme stabilization, solved by damped Newton.

use std::sync::Arc;

use crate::constitutive::{MaterialParams, Model, StressPoint};
use crate::error::{Error, Result};
use crate::fem::field::{basis_strain, interpolate_scalar, interpolate_vector, physical_grads, scalar_cell_values, strain, vector_cell_values};
use crate::fem::{assemble, assemble_vector, Constraints, CsrMatrix, DirectSolver, DofMap, LocalSystem, QuadratureTable, SparsityPattern};
use crate::mesh::QuadMesh;
use crate::newton::{newton, Linearization, NewtonOptions, NewtonReport};

/// Body force `f(x)` per unit area.
pub type BodyForce = dyn Fn([f64; 2]) -> [f64; 2] + Sync;

#[derive(Debug, Clone, PartialEq)]
pub struct MechanicsConfig {
    pub model: Model,
    /// L-scheme coefficient `L_u`.
    pub l_u: f64,
    /// Newton stops once `‖δu‖` reaches this value.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    /// Start the strain-limiting Newton iteration from a linear solve.
    pub warm_start_linear: bool,
    /// Gauss points per direction.
    pub quad_order: usize,
}

impl Default for MechanicsConfig {
    fn default() -> Self {
        MechanicsConfig {
            model: Model::Lefm,
            l_u: 1e-6,
            newton_tol: 1e-8,
            max_newton: 50,
            max_backtracks: 8,
            warm_start_linear: true,
            quad_order: 2,
        }
    }
}

impl MechanicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!("mechanics.newton_tol must be positive, got {}", self.newton_tol)));
        }
        if !(self.l_u >= 0.0) {
            return Err(Error::Config(format!("mechanics.l_u must be non-negative, got {}", self.l_u)));
        }
        if !(1..=4).contains(&self.quad_order) {
            return Err(Error::Config(format!("mechanics.quad_order must be 1..=4, got {}", self.quad_order)));
        }
        Ok(())
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.max_newton,
            max_backtracks: self.max_backtracks,
        }
    }
}

/// Everything the displacement residual depends on besides `u` itself.
#[derive(Clone, Copy)]
pub struct Mechanics<'a> {
    pub mesh: &'a QuadMesh,
    pub dofs: &'a DofMap,
    pub quad: &'a QuadratureTable,
    pub material: &'a MaterialParams,
    pub model: Model,
    /// Frozen phase field (nodal).
    pub phi: &'a [f64],
    /// Previous staggered iterate `u^{n,i-1}` for the L-term.
    pub u_prev_iter: &'a [f64],
    pub l_u: f64,
    pub body_force: Option<&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync + 'a)>,
}

impl<'a> Mechanics<'a> {
    fn kernel(&self, u: &'a [f64]) -> impl Fn(usize, &mut LocalSystem) -> Result<()> + Sync + '_ {
        move |c, local| {
            let cell = &self.mesh.cells()[c];
            let area = cell.area();
            let uv = vector_cell_values(u, cell);
            let up = vector_cell_values(self.u_prev_iter, cell);
            let pv = scalar_cell_values(self.phi, cell);
            let m = self.material;
            let mut basis = [crate::constitutive::SymTensor2::ZERO; 8];
            let mut tangents = [crate::constitutive::SymTensor2::ZERO; 8];
            for (q, &w) in self.quad.weights.iter().enumerate() {
                let shape = &self.quad.shapes[q];
                let grads = physical_grads(shape, cell);
                let wa = w * area;
                let g = m.degradation(interpolate_scalar(&pv, shape));
                let point = StressPoint::new(self.model, &strain(&uv, &grads), m)?;
                let sigma = point.stress();
                let du = {
                    let a = interpolate_vector(&uv, shape);
                    let b = interpolate_vector(&up, shape);
                    [a[0] - b[0], a[1] - b[1]]
                };
                let f = match self.body_force {
                    Some(f) => {
                        let p = self.quad.points[q];
                        f(cell.map(p[0], p[1]))
                    }
                    None => [0.0, 0.0],
                };
                for (k, b) in basis.iter_mut().enumerate() {
                    *b = basis_strain(&grads, k);
                }
                for k in 0..8 {
                    let (a, comp) = (k / 2, k % 2);
                    let n = shape.values[a];
                    local.vector[k] += wa * (g * sigma.ddot(&basis[k]) + (self.l_u * du[comp] - f[comp]) * n);
                }
                if local.with_matrix() {
                    for l in 0..8 {
                        tangents[l] = point.tangent(&basis[l], m);
                    }
                    for k in 0..8 {
                        let na = shape.values[k / 2];
                        for l in 0..8 {
                            let mut v = g * tangents[l].ddot(&basis[k]);
                            if k % 2 == l % 2 {
                                v += self.l_u * na * shape.values[l / 2];
                            }
                            local.matrix[k * 8 + l] += wa * v;
                        }
                    }
                }
            }
            Ok(())
        }
    }

    /// Condensed residual (constrained rows zero).
    pub fn residual(&self, u: &[f64], constraints: &Constraints) -> Result<Vec<f64>> {
        let mut r = vec![0.0; self.dofs.n_dofs()];
        assemble_vector(self.dofs, constraints, self.kernel(u), &mut r)?;
        Ok(r)
    }

    /// Condensed Jacobian into `matrix`; returns the condensed residual.
    pub fn system(&self, u: &[f64], constraints: &Constraints, matrix: &mut CsrMatrix) -> Result<Vec<f64>> {
        let mut r = vec![0.0; self.dofs.n_dofs()];
        assemble(self.dofs, constraints, self.kernel(u), Some(matrix), &mut r)?;
        Ok(r)
    }

    /// Same problem with a different law (used for the linear warm start).
    pub fn with_model(&self, model: Model) -> Mechanics<'a> {
        Mechanics { model, ..*self }
    }
}

/// Matrix storage and factorization reused across displacement solves.
#[derive(Debug)]
pub struct MechanicsSolver {
    matrix: CsrMatrix,
    solver: DirectSolver,
}

impl MechanicsSolver {
    pub fn new(dofs: &DofMap, constraints: &Constraints) -> Self {
        let pattern = Arc::new(SparsityPattern::new(dofs, constraints));
        MechanicsSolver {
            matrix: CsrMatrix::zeros(pattern),
            solver: DirectSolver::new(),
        }
    }

    pub fn n_factorizations(&self) -> usize {
        self.solver.n_factorizations()
    }
}

struct Stepper<'p, 'a> {
    problem: &'p Mechanics<'a>,
    constraints: &'p Constraints,
    store: &'p mut MechanicsSolver,
    /// The Jacobian does not depend on `u` (linear law): factor once.
    frozen: bool,
    factored: bool,
}

impl Linearization for Stepper<'_, '_> {
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.residual(x, self.constraints)
    }

    fn linearize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if self.frozen && self.factored {
            return self.problem.residual(x, self.constraints);
        }
        let r = self.problem.system(x, self.constraints, &mut self.store.matrix)?;
        self.store.solver.factorize(&self.store.matrix)?;
        self.factored = true;
        Ok(r)
    }

    fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.store.solver.solve(&self.store.matrix, rhs)
    }
}

fn is_linear(p: &Mechanics<'_>) -> bool {
    p.model == Model::Lefm || p.material.beta == 0.0
}

fn admissible(problem: &Mechanics<'_>, constraints: &Constraints, u: &[f64]) -> Result<bool> {
    match problem.residual(u, constraints) {
        Ok(_) => Ok(true),
        Err(Error::LimitExceeded { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// One Newton step of a linear problem from `u`, i.e. its solution.
fn linear_solution(
    linear: &Mechanics<'_>,
    constraints: &Constraints,
    increments: &Constraints,
    u: &[f64],
    store: &mut MechanicsSolver,
) -> Result<Vec<f64>> {
    let mut stepper = Stepper {
        problem: linear,
        constraints,
        store,
        frozen: true,
        factored: false,
    };
    let r = stepper.linearize(u)?;
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut delta = stepper.solve(&rhs)?;
    increments.distribute(&mut delta);
    Ok(u.iter().zip(&delta).map(|(a, b)| a + b).collect())
}

/// Continuation gives up when the load increment falls below this fraction
/// of the load reached, or after this many stages.
const MIN_RELATIVE_LOAD_STEP: f64 = 1e-3;
const MAX_CONTINUATION_STAGES: usize = 200;

/// Solves `problem` by continuation in a load factor `θ` that scales the
/// Dirichlet data and the body force. The first stage starts from the
/// linear solution at a load where its ellipticity monitor is one half.
fn continuation(
    problem: &Mechanics<'_>,
    constraints: &Constraints,
    increments: &Constraints,
    u: &mut [f64],
    store: &mut MechanicsSolver,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let lin = linear_solution(&problem.with_model(Model::Lefm), constraints, increments, u, store)?;
    let monitor = crate::postprocess::max_monitor(problem.mesh, problem.quad, &lin, problem.material);
    let mut theta = (0.5 / monitor).min(1.0);
    let mut x: Vec<f64> = lin.iter().map(|v| theta * v).collect();
    let mut done = 0.0;
    let mut accepted = x.clone();
    let mut report = NewtonReport::default();
    for _ in 0..MAX_CONTINUATION_STAGES {
        let cons = constraints.scaled(theta);
        let force = problem.body_force.map(|f| {
            move |p: [f64; 2]| {
                let v = f(p);
                [theta * v[0], theta * v[1]]
            }
        });
        let staged = Mechanics {
            body_force: force.as_ref().map(|f| f as &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)),
            ..*problem
        };
        cons.distribute(&mut x);
        let mut stepper = Stepper {
            problem: &staged,
            constraints: &cons,
            store: &mut *store,
            frozen: false,
            factored: false,
        };
        let outcome = if admissible(&staged, &cons, &x)? {
            newton(&mut stepper, &mut x, increments, opts, "mechanics")
        } else {
            Err(Error::LimitExceeded { monitor: f64::INFINITY })
        };
        match outcome {
            Ok(rep) => {
                log::debug!("continuation: converged at load factor {theta:.4e}");
                report.iterations += rep.iterations;
                report.history.extend(rep.history);
                report.damping.extend(rep.damping);
                if theta >= 1.0 {
                    u.copy_from_slice(&x);
                    return Ok(report);
                }
                let next = (theta + 2.0 * (theta - done)).min(1.0);
                // the solution scales roughly with the load
                accepted.clone_from(&x);
                x.iter_mut().for_each(|v| *v *= next / theta);
                done = theta;
                theta = next;
            }
            Err(Error::LimitExceeded { .. }) | Err(Error::NonConvergence { .. })
                if theta - done > MIN_RELATIVE_LOAD_STEP * done.max(1e-3) =>
            {
                theta = done + 0.5 * (theta - done);
                x.copy_from_slice(&accepted);
                if done > 0.0 {
                    x.iter_mut().for_each(|v| *v *= theta / done);
                } else {
                    x.iter_mut().zip(&lin).for_each(|(v, l)| *v = theta * l);
                }
            }
            Err(Error::LimitExceeded { .. }) | Err(Error::NonConvergence { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    log::warn!("mechanics: load continuation stalled at load factor {done:.4e}");
    let monitor = crate::postprocess::max_monitor(problem.mesh, problem.quad, &accepted, problem.material);
    Err(Error::LimitExceeded { monitor })
}

/// Solves the displacement subproblem from `u`, which must carry the
/// Dirichlet data (it is distributed here as well). With `warm_start`, a
/// nonlinear law starts from the linear solution when that is admissible.
/// Otherwise the load is ramped up from the unloaded state by continuation.
pub fn solve_mechanics(
    problem: &Mechanics<'_>,
    constraints: &Constraints,
    u: &mut [f64],
    store: &mut MechanicsSolver,
    opts: &NewtonOptions,
    warm_start: bool,
) -> Result<NewtonReport> {
    constraints.distribute(u);
    let increments = constraints.homogeneous();
    if warm_start && !is_linear(problem) {
        let linear = problem.with_model(Model::Lefm);
        let candidate = linear_solution(&linear, constraints, &increments, u, store)?;
        match admissible(problem, constraints, &candidate)? {
            true => u.copy_from_slice(&candidate),
            false if admissible(problem, constraints, u)? => {
                log::debug!("linear warm start inadmissible; starting from the previous iterate");
            }
            false => {
                // Neither is usable: ramp the loads up from a scaled linear solution.
                log::debug!("no admissible starting point; continuing in the load");
                return continuation(problem, constraints, &increments, u, store, opts);
            }
        }
    }
    let mut stepper = Stepper {
        problem,
        constraints,
        store,
        frozen: is_linear(problem),
        factored: false,
    };
    newton(&mut stepper, u, &increments, opts, "mechanics")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FieldKind;
    use crate::mesh::Side;

    fn material(beta: f64) -> MaterialParams {
        MaterialParams {
            lambda: 1.0,
            mu: 1.0,
            alpha: 0.5,
            beta,
            gc: 1.0,
            xi: 0.1,
            kappa: 1e-10,
        }
    }

    /// Top pulled by `top`, bottom held vertically, left bottom corner pinned.
    fn stretch_constraints(mesh: &QuadMesh, dofs: &DofMap, top: f64) -> Constraints {
        let mut bc: Vec<(usize, f64)> = dofs.boundary_dofs(Side::Bottom, Some(1)).into_iter().map(|d| (d, 0.0)).collect();
        bc.extend(dofs.boundary_dofs(Side::Top, Some(1)).into_iter().map(|d| (d, top)));
        let corner = mesh.vertices().iter().position(|p| p[0] == 0.0 && p[1] == 0.0).unwrap();
        bc.push((dofs.dof(corner, 0), 0.0));
        Constraints::new(dofs, &bc)
    }

    #[test]
    fn uniform_stretch_matches_plane_strain_contraction() {
        for refine in [0, 4] {
            let mesh = QuadMesh::unit_square().refine_global(refine);
            let dofs = DofMap::new(&mesh, FieldKind::Displacement);
            let m = material(0.0);
            let cons = stretch_constraints(&mesh, &dofs, 1e-3);
            let phi = vec![1.0; mesh.n_vertices()];
            let zero = vec![0.0; dofs.n_dofs()];
            let quad = QuadratureTable::gauss(2);
            let p = Mechanics {
                mesh: &mesh,
                dofs: &dofs,
                quad: &quad,
                material: &m,
                model: Model::Lefm,
                phi: &phi,
                u_prev_iter: &zero,
                l_u: 0.0,
                body_force: None,
            };
            let mut store = MechanicsSolver::new(&dofs, &cons);
            let mut u = zero.clone();
            let opts = MechanicsConfig::default().newton_options();
            let rep = solve_mechanics(&p, &cons, &mut u, &mut store, &opts, false).unwrap();
            assert_eq!(rep.iterations, 1);
            let nu = m.lambda / (m.lambda + 2.0 * m.mu);
            for (v, x) in mesh.vertices().iter().enumerate() {
                assert!((u[2 * v + 1] - 1e-3 * x[1]).abs() < 1e-12);
                assert!((u[2 * v] + nu * 1e-3 * x[0]).abs() < 1e-12);
            }
        }
    }
}
