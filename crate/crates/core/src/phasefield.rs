//! Phase-field subproblem: Ambrosio-Tortorelli residual with the
//! augmented-Lagrangian irreversibility penalty and L-scheme term, solved by
//! semi-smooth Newton.

use std::sync::Arc;

use crate::constitutive::{MaterialParams, Model, StressPoint};
use crate::error::{Error, Result};
use crate::fem::field::{physical_grads, scalar_cell_values, scalar_gradient, interpolate_scalar, strain, vector_cell_values};
use crate::fem::{assemble, assemble_vector, Constraints, CsrMatrix, DirectSolver, DofMap, LocalSystem, QuadratureTable, SparsityPattern};
use crate::mesh::QuadMesh;
use crate::newton::{newton, Linearization, NewtonOptions, NewtonReport};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFieldConfig {
    /// L-scheme coefficient `L_φ`.
    pub l_phi: f64,
    /// Penalty coefficient `γ`.
    pub gamma: f64,
    /// Newton stops once `‖δφ‖` reaches this value.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
}

impl Default for PhaseFieldConfig {
    fn default() -> Self {
        PhaseFieldConfig {
            l_phi: 1e-6,
            gamma: 1e4,
            newton_tol: 1e-8,
            max_newton: 50,
            max_backtracks: 8,
        }
    }
}

impl PhaseFieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!("phasefield.newton_tol must be positive, got {}", self.newton_tol)));
        }
        if !(self.l_phi >= 0.0) {
            return Err(Error::Config(format!("phasefield.l_phi must be non-negative, got {}", self.l_phi)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!("phasefield.gamma must be non-negative, got {}", self.gamma)));
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

/// Nodal multiplier `ω_γ ≥ 0` and penalty coefficient `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyState {
    pub omega: Vec<f64>,
    pub gamma: f64,
}

impl PenaltyState {
    pub fn new(n: usize, gamma: f64) -> Self {
        PenaltyState {
            omega: vec![0.0; n],
            gamma,
        }
    }

    pub fn reset(&mut self) {
        self.omega.iter_mut().for_each(|w| *w = 0.0);
    }

    /// Nodal active-set indicator `η = [ω + γ(φ - φ_prev) > 0]`.
    pub fn active(&self, phi: &[f64], phi_prev_step: &[f64]) -> Vec<bool> {
        self.omega
            .iter()
            .zip(phi.iter().zip(phi_prev_step))
            .map(|(w, (p, q))| w + self.gamma * (p - q) > 0.0)
            .collect()
    }
}

/// `ω ← [ω + γ(φ - φ_prev)]⁺` nodewise.
pub fn update_multiplier(pen: &PenaltyState, phi: &[f64], phi_prev_step: &[f64]) -> PenaltyState {
    PenaltyState {
        omega: pen
            .omega
            .iter()
            .zip(phi.iter().zip(phi_prev_step))
            .map(|(w, (p, q))| (w + pen.gamma * (p - q)).max(0.0))
            .collect(),
        gamma: pen.gamma,
    }
}

/// `σ(u):ε(u)` at every quadrature point, cell-major.
pub fn driving_force(mesh: &QuadMesh, quad: &QuadratureTable, u: &[f64], model: Model, m: &MaterialParams) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(mesh.n_cells() * quad.len());
    for cell in mesh.cells() {
        let uv = vector_cell_values(u, cell);
        for shape in &quad.shapes {
            let eps = strain(&uv, &physical_grads(shape, cell));
            let point = StressPoint::new(model, &eps, m)?;
            out.push(point.stress().ddot(&eps));
        }
    }
    Ok(out)
}

/// Everything the phase-field residual depends on besides `φ` itself.
#[derive(Clone, Copy)]
pub struct PhaseField<'a> {
    pub mesh: &'a QuadMesh,
    pub dofs: &'a DofMap,
    pub quad: &'a QuadratureTable,
    pub material: &'a MaterialParams,
    /// Output of [`driving_force`] for the frozen displacement.
    pub driving: &'a [f64],
    /// `φ^{n-1}`
    pub phi_prev_step: &'a [f64],
    /// `φ^{n,i-1}`
    pub phi_prev_iter: &'a [f64],
    pub penalty: &'a PenaltyState,
    pub l_phi: f64,
}

impl<'a> PhaseField<'a> {
    fn kernel(&self, phi: &'a [f64], active: &'a [bool]) -> impl Fn(usize, &mut LocalSystem) -> Result<()> + Sync + '_ {
        move |c, local| {
            let cell = &self.mesh.cells()[c];
            let area = cell.area();
            let m = self.material;
            let gamma = self.penalty.gamma;
            let pv = scalar_cell_values(phi, cell);
            let prev = scalar_cell_values(self.phi_prev_step, cell);
            let iter = scalar_cell_values(self.phi_prev_iter, cell);
            let omega = scalar_cell_values(&self.penalty.omega, cell);
            let eta = cell.vertices.map(|v| if active[v] { 1.0 } else { 0.0 });
            let nq = self.quad.len();
            for (q, &w) in self.quad.weights.iter().enumerate() {
                let shape = &self.quad.shapes[q];
                let n = &shape.values;
                let grads = physical_grads(shape, cell);
                let wa = w * area;
                let drive = (1.0 - m.kappa) * self.driving[c * nq + q];
                let p = interpolate_scalar(&pv, shape);
                let gp = scalar_gradient(&pv, &grads);
                let lterm = self.l_phi * (p - interpolate_scalar(&iter, shape));
                let reaction = drive * p - m.gc / m.xi * (1.0 - p) + lterm;
                for a in 0..4 {
                    let diffusion = m.gc * m.xi * (gp[0] * grads[a][0] + gp[1] * grads[a][1]);
                    local.vector[a] += wa * (reaction * n[a] + diffusion);
                }
                if local.with_matrix() {
                    let mass = drive + m.gc / m.xi + self.l_phi;
                    for a in 0..4 {
                        for b in 0..4 {
                            let stiff = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                            local.matrix[a * 4 + b] += wa * (mass * n[a] * n[b] + m.gc * m.xi * stiff);
                        }
                    }
                }
            }
            // Penalty with the vertex rule: each vertex sees only its own
            // multiplier argument.
            let lumped = 0.25 * area;
            for a in 0..4 {
                local.vector[a] += lumped * eta[a] * (omega[a] + gamma * (pv[a] - prev[a]));
                if local.with_matrix() {
                    local.matrix[a * 4 + a] += lumped * gamma * eta[a];
                }
            }
            Ok(())
        }
    }

    pub fn active_set(&self, phi: &[f64]) -> Vec<bool> {
        self.penalty.active(phi, self.phi_prev_step)
    }

    /// Condensed residual with `η` evaluated at `phi`.
    pub fn residual(&self, phi: &[f64], constraints: &Constraints) -> Result<Vec<f64>> {
        let active = self.active_set(phi);
        let mut r = vec![0.0; self.dofs.n_dofs()];
        assemble_vector(self.dofs, constraints, self.kernel(phi, &active), &mut r)?;
        Ok(r)
    }

    /// Condensed Jacobian (with `η` frozen at `phi`) into `matrix`; returns
    /// the condensed residual.
    pub fn system(&self, phi: &[f64], constraints: &Constraints, matrix: &mut CsrMatrix) -> Result<Vec<f64>> {
        let active = self.active_set(phi);
        let mut r = vec![0.0; self.dofs.n_dofs()];
        assemble(self.dofs, constraints, self.kernel(phi, &active), Some(matrix), &mut r)?;
        Ok(r)
    }
}

/// Matrix storage and factorization reused across phase-field solves.
#[derive(Debug)]
pub struct PhaseFieldSolver {
    matrix: CsrMatrix,
    solver: DirectSolver,
}

impl PhaseFieldSolver {
    pub fn new(dofs: &DofMap, constraints: &Constraints) -> Self {
        let pattern = Arc::new(SparsityPattern::new(dofs, constraints));
        PhaseFieldSolver {
            matrix: CsrMatrix::zeros(pattern),
            solver: DirectSolver::new(),
        }
    }

    pub fn n_factorizations(&self) -> usize {
        self.solver.n_factorizations()
    }
}

struct Stepper<'p, 'a> {
    problem: &'p PhaseField<'a>,
    constraints: &'p Constraints,
    store: &'p mut PhaseFieldSolver,
    /// Active set of the current factorization.
    factored: Option<Vec<bool>>,
}

impl Linearization for Stepper<'_, '_> {
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.residual(x, self.constraints)
    }

    fn linearize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        // Apart from η the residual is affine in φ.
        let active = self.problem.active_set(x);
        if self.factored.as_ref() == Some(&active) {
            return self.problem.residual(x, self.constraints);
        }
        let r = self.problem.system(x, self.constraints, &mut self.store.matrix)?;
        self.store.solver.factorize(&self.store.matrix)?;
        self.factored = Some(active);
        Ok(r)
    }

    fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.store.solver.solve(&self.store.matrix, rhs)
    }
}

/// Solves the phase-field subproblem starting from `phi`.
pub fn solve_phasefield(
    problem: &PhaseField<'_>,
    constraints: &Constraints,
    phi: &mut [f64],
    store: &mut PhaseFieldSolver,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    constraints.distribute(phi);
    let increments = constraints.homogeneous();
    let mut stepper = Stepper {
        problem,
        constraints,
        store,
        factored: None,
    };
    newton(&mut stepper, phi, &increments, opts, "phasefield")
}
