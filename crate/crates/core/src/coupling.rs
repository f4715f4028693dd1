//! Staggered L-scheme coupling of the two subproblems with the
//! augmented-Lagrangian multiplier update, and the quasi-static time loop.

use crate::constitutive::{MaterialParams, Model};
use crate::error::{Error, Result, StaggerStep};
use crate::fem::solver::norm;
use crate::fem::{Constraints, DofMap, FieldKind, QuadratureTable};
use crate::mechanics::{solve_mechanics, BodyForce, Mechanics, MechanicsConfig, MechanicsSolver};
use crate::mesh::QuadMesh;
use crate::newton::NewtonReport;
use crate::phasefield::{driving_force, solve_phasefield, update_multiplier, PenaltyState, PhaseField, PhaseFieldConfig, PhaseFieldSolver};
use crate::postprocess;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    /// Staggered stopping tolerance on `‖A₁‖` and `‖A₂‖`.
    pub tol: f64,
    pub max_stagger: usize,
    pub dt: f64,
    pub n_steps: usize,
    /// Top displacement per unit time: `ū_top(t) = load_rate · t`.
    pub load_rate: f64,
    /// Solve the phase field; when false `φ` stays at its initial value.
    pub phase_field: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            tol: 1e-6,
            max_stagger: 2000,
            dt: 1.0,
            n_steps: 1,
            load_rate: 1.0,
            phase_field: true,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("coupling.tol must be positive, got {}", self.tol)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("coupling.dt must be positive, got {}", self.dt)));
        }
        if self.max_stagger == 0 {
            return Err(Error::Config("coupling.max_stagger must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_at(&self, t: f64) -> f64 {
        self.load_rate * t
    }
}

/// Dirichlet data of the displacement: each entry prescribes
/// `base + per_load · ū_top` on one dof.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletData {
    pub entries: Vec<(usize, f64, f64)>,
}

impl DirichletData {
    pub fn constraints(&self, dofs: &DofMap, load: f64) -> Constraints {
        let values: Vec<(usize, f64)> = self.entries.iter().map(|&(d, base, k)| (d, base + k * load)).collect();
        Constraints::new(dofs, &values)
    }
}

/// Mesh-dependent data shared by every solve of a run.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: QuadMesh,
    pub u_dofs: DofMap,
    pub phi_dofs: DofMap,
    pub quad: QuadratureTable,
}

impl Discretization {
    pub fn new(mesh: QuadMesh, quad_order: usize) -> Self {
        let u_dofs = DofMap::new(&mesh, FieldKind::Displacement);
        let phi_dofs = DofMap::new(&mesh, FieldKind::PhaseField);
        Discretization {
            mesh,
            u_dofs,
            phi_dofs,
            quad: QuadratureTable::gauss(quad_order),
        }
    }
}

/// Committed state at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveState {
    pub step: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub penalty: PenaltyState,
}

/// Diagnostics of one committed timestep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub load: f64,
    pub stagger_iters: usize,
    pub mech_newton_total: usize,
    pub pf_newton_total: usize,
    pub history: Vec<StaggerStep>,
    /// `newton,...` and `pfnewton,...` CSV lines.
    pub newton_log: Vec<String>,
    /// Largest `β |E^{1/2}[ε]|` over quadrature points.
    pub max_monitor: f64,
}

/// A complete quasi-static run: discretization, parameters, solvers and the
/// current committed state.
pub struct Simulation {
    pub disc: Discretization,
    pub material: MaterialParams,
    pub mechanics: MechanicsConfig,
    pub phasefield: PhaseFieldConfig,
    pub coupling: CouplingConfig,
    pub dirichlet: DirichletData,
    pub state: SolveState,
    body_force: Option<Box<BodyForce>>,
    phi_constraints: Constraints,
    mech_store: MechanicsSolver,
    pf_store: PhaseFieldSolver,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("cells", &self.disc.mesh.n_cells())
            .field("step", &self.state.step)
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(
        disc: Discretization,
        material: MaterialParams,
        mechanics: MechanicsConfig,
        phasefield: PhaseFieldConfig,
        coupling: CouplingConfig,
        dirichlet: DirichletData,
        phi0: Vec<f64>,
    ) -> Result<Self> {
        material.validate()?;
        mechanics.validate()?;
        phasefield.validate()?;
        coupling.validate()?;
        if phi0.len() != disc.phi_dofs.n_dofs() {
            return Err(Error::Config(format!(
                "initial phase field has {} values, mesh has {} vertices",
                phi0.len(),
                disc.phi_dofs.n_dofs()
            )));
        }
        let u_cons = dirichlet.constraints(&disc.u_dofs, 0.0);
        let phi_constraints = Constraints::hanging_only(&disc.phi_dofs);
        let mut phi = phi0;
        phi_constraints.distribute(&mut phi);
        let mut u = vec![0.0; disc.u_dofs.n_dofs()];
        u_cons.distribute(&mut u);
        let mech_store = MechanicsSolver::new(&disc.u_dofs, &u_cons);
        let pf_store = PhaseFieldSolver::new(&disc.phi_dofs, &phi_constraints);
        let penalty = PenaltyState::new(disc.phi_dofs.n_dofs(), phasefield.gamma);
        Ok(Simulation {
            disc,
            material,
            mechanics,
            phasefield,
            coupling,
            dirichlet,
            state: SolveState {
                step: 0,
                time: 0.0,
                u,
                phi,
                penalty,
            },
            body_force: None,
            phi_constraints,
            mech_store,
            pf_store,
        })
    }

    pub fn set_body_force(&mut self, f: Box<BodyForce>) {
        self.body_force = Some(f);
    }

    pub fn model(&self) -> Model {
        self.mechanics.model
    }

    fn mechanics_problem<'a>(&'a self, phi: &'a [f64], u_prev: &'a [f64], l_u: f64) -> Mechanics<'a> {
        mechanics_problem(&self.disc, &self.material, &self.mechanics, self.body_force.as_deref(), phi, u_prev, l_u)
    }

    /// Advances one timestep and commits the converged state.
    pub fn staggered_step(&mut self) -> Result<StepReport> {
        let n = self.state.step + 1;
        let t = n as f64 * self.coupling.dt;
        let load = self.coupling.load_at(t);
        let u_cons = self.dirichlet.constraints(&self.disc.u_dofs, load);
        let mut report = StepReport {
            step: n,
            time: t,
            load,
            ..Default::default()
        };
        let phi_prev = self.state.phi.clone();
        let mut u_iter = self.state.u.clone();
        u_cons.distribute(&mut u_iter);
        let mut phi_iter = phi_prev.clone();
        let mut pen = self.state.penalty.clone();
        pen.reset();
        let mech_opts = self.mechanics.newton_options();
        let pf_opts = self.phasefield.newton_options();

        for i in 1..=self.coupling.max_stagger {
            let mut u_new = u_iter.clone();
            let warm = i == 1 && self.mechanics.warm_start_linear;
            let rep = {
                let problem = mechanics_problem(
                    &self.disc,
                    &self.material,
                    &self.mechanics,
                    self.body_force.as_deref(),
                    &phi_iter,
                    &u_iter,
                    self.mechanics.l_u,
                );
                solve_mechanics(&problem, &u_cons, &mut u_new, &mut self.mech_store, &mech_opts, warm)?
            };
            log_newton(&mut report.newton_log, "newton", n, i, &rep);
            report.mech_newton_total += rep.history.len();

            if !self.coupling.phase_field {
                report.stagger_iters = i;
                let r1 = norm(&self.mechanics_problem(&phi_iter, &u_new, 0.0).residual(&u_new, &u_cons)?);
                report.history.push(StaggerStep {
                    mechanics: r1,
                    phasefield: 0.0,
                });
                u_iter = u_new;
                break;
            }

            let driving = driving_force(&self.disc.mesh, &self.disc.quad, &u_new, self.mechanics.model, &self.material)?;
            let mut phi_new = phi_iter.clone();
            let rep = {
                let problem = PhaseField {
                    mesh: &self.disc.mesh,
                    dofs: &self.disc.phi_dofs,
                    quad: &self.disc.quad,
                    material: &self.material,
                    driving: &driving,
                    phi_prev_step: &phi_prev,
                    phi_prev_iter: &phi_iter,
                    penalty: &pen,
                    l_phi: self.phasefield.l_phi,
                };
                solve_phasefield(&problem, &self.phi_constraints, &mut phi_new, &mut self.pf_store, &pf_opts)?
            };
            log_newton(&mut report.newton_log, "pfnewton", n, i, &rep);
            report.pf_newton_total += rep.history.len();
            pen = update_multiplier(&pen, &phi_new, &phi_prev);

            let r1 = norm(&self.mechanics_problem(&phi_new, &u_new, 0.0).residual(&u_new, &u_cons)?);
            let r2 = {
                let problem = PhaseField {
                    mesh: &self.disc.mesh,
                    dofs: &self.disc.phi_dofs,
                    quad: &self.disc.quad,
                    material: &self.material,
                    driving: &driving,
                    phi_prev_step: &phi_prev,
                    phi_prev_iter: &phi_new,
                    penalty: &pen,
                    l_phi: 0.0,
                };
                norm(&problem.residual(&phi_new, &self.phi_constraints)?)
            };
            report.history.push(StaggerStep {
                mechanics: r1,
                phasefield: r2,
            });
            u_iter = u_new;
            phi_iter = phi_new;
            log::debug!("step {n} stagger {i}: |A1| = {r1:.3e}, |A2| = {r2:.3e}");
            if r1 <= self.coupling.tol && r2 <= self.coupling.tol {
                report.stagger_iters = i;
                break;
            }
            if i == self.coupling.max_stagger {
                return Err(Error::StaggerNonConvergence { history: report.history });
            }
        }

        report.max_monitor = postprocess::max_monitor(&self.disc.mesh, &self.disc.quad, &u_iter, &self.material);
        if self.mechanics.model == Model::Nlsl && report.max_monitor >= 1.0 {
            log::warn!("step {n}: strain-limiting bound violated (monitor {:.4})", report.max_monitor);
        }
        self.state = SolveState {
            step: n,
            time: t,
            u: u_iter,
            phi: phi_iter,
            penalty: pen,
        };
        Ok(report)
    }

    /// Runs the remaining timesteps, calling `observe` after each commit.
    pub fn run<F>(&mut self, mut observe: F) -> Result<Vec<StepReport>>
    where
        F: FnMut(&Simulation, &StepReport) -> Result<()>,
    {
        let mut reports = Vec::new();
        while self.state.step < self.coupling.n_steps {
            let rep = self.staggered_step()?;
            observe(self, &rep)?;
            reports.push(rep);
        }
        Ok(reports)
    }
}

fn mechanics_problem<'a>(
    disc: &'a Discretization,
    material: &'a MaterialParams,
    cfg: &MechanicsConfig,
    body_force: Option<&'a BodyForce>,
    phi: &'a [f64],
    u_prev: &'a [f64],
    l_u: f64,
) -> Mechanics<'a> {
    Mechanics {
        mesh: &disc.mesh,
        dofs: &disc.u_dofs,
        quad: &disc.quad,
        material,
        model: cfg.model,
        phi,
        u_prev_iter: u_prev,
        l_u,
        body_force,
    }
}

fn log_newton(out: &mut Vec<String>, tag: &str, n: usize, i: usize, rep: &NewtonReport) {
    for (a, s) in rep.history.iter().enumerate() {
        out.push(format!("{tag},{n},{i},{},{:.6e},{:.6e}", a + 1, s.residual, s.increment));
    }
}
