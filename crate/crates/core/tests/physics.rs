use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use limitfrac::constitutive::{MaterialParams, Model};
use limitfrac::driver::run::simulation_on;
use limitfrac::driver::{mms, mms_solution, preset, run};
use limitfrac::fem::field::{interpolate_scalar, physical_grads, scalar_cell_values, scalar_gradient};
use limitfrac::fem::{Constraints, CsrMatrix, DofMap, FieldKind, QuadratureTable, SparsityPattern};
use limitfrac::mechanics::Mechanics;
use limitfrac::mesh::{QuadMesh, Side};
use limitfrac::phasefield::{update_multiplier, PenaltyState, PhaseField};

fn dense(a: &CsrMatrix) -> Vec<Vec<f64>> {
    (0..a.n()).map(|i| (0..a.n()).map(|j| a.get(i, j)).collect()).collect()
}

/// Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

#[test]
fn coarsest_manufactured_problem_matches_dense_solve() {
    let cfg = preset("ex1_linear").unwrap();
    let (sim, _) = mms_solution(&cfg, 1).unwrap();
    assert_eq!(sim.disc.mesh.n_cells(), 4);

    let m = sim.material;
    let force = move |p: [f64; 2]| mms::forcing(p, Model::Lefm, &m).unwrap();
    let cons = sim.dirichlet.constraints(&sim.disc.u_dofs, 0.0);
    let mut u0 = vec![0.0; sim.disc.u_dofs.n_dofs()];
    cons.distribute(&mut u0);
    let phi = vec![1.0; sim.disc.mesh.n_vertices()];
    let problem = Mechanics {
        mesh: &sim.disc.mesh,
        dofs: &sim.disc.u_dofs,
        quad: &sim.disc.quad,
        material: &m,
        model: Model::Lefm,
        phi: &phi,
        u_prev_iter: &u0,
        l_u: 0.0,
        body_force: Some(&force),
    };
    let mut a = CsrMatrix::zeros(Arc::new(SparsityPattern::new(&sim.disc.u_dofs, &cons)));
    let r = problem.system(&u0, &cons, &mut a).unwrap();
    let du = dense_solve(dense(&a), r.iter().map(|v| -v).collect());
    for i in 0..u0.len() {
        assert!((u0[i] + du[i] - sim.state.u[i]).abs() < 1e-10, "dof {i}");
    }
}

#[test]
fn interpolant_residual_shrinks_under_refinement() {
    let cfg = preset("ex1_linear").unwrap();
    let mut prev = f64::INFINITY;
    for level in 2..=6 {
        let mesh = QuadMesh::unit_square().refine_global(level);
        let sim = simulation_on(&cfg, mesh).unwrap();
        let m = sim.material;
        let force = move |p: [f64; 2]| mms::forcing(p, Model::Lefm, &m).unwrap();
        let u: Vec<f64> = sim.disc.mesh.vertices().iter().flat_map(|&p| mms::exact(p)).collect();
        let phi = vec![1.0; sim.disc.mesh.n_vertices()];
        let problem = Mechanics {
            mesh: &sim.disc.mesh,
            dofs: &sim.disc.u_dofs,
            quad: &sim.disc.quad,
            material: &m,
            model: Model::Lefm,
            phi: &phi,
            u_prev_iter: &u,
            l_u: 0.0,
            body_force: Some(&force),
        };
        let cons = sim.dirichlet.constraints(&sim.disc.u_dofs, 0.0);
        let r = problem.residual(&u, &cons).unwrap();
        let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(worst < prev, "level {level}: {worst} after {prev}");
        prev = worst;
    }
}

#[test]
fn broken_body_keeps_a_positive_spectral_floor() {
    let mesh = QuadMesh::unit_square().refine_global(1);
    let dofs = DofMap::new(&mesh, FieldKind::Displacement);
    let bc: Vec<(usize, f64)> = dofs.boundary_dofs(Side::Bottom, None).into_iter().map(|d| (d, 0.0)).collect();
    let cons = Constraints::new(&dofs, &bc);
    let m = MaterialParams {
        lambda: 1.0,
        mu: 1.0,
        alpha: 0.25,
        beta: 1.0,
        gc: 1.0,
        xi: 0.1,
        kappa: 1e-10 * 0.5,
    };
    let l_u = 1e-6;
    let u = vec![0.0; dofs.n_dofs()];
    let phi = vec![0.0; mesh.n_vertices()];
    let quad = QuadratureTable::gauss(2);
    let problem = Mechanics {
        mesh: &mesh,
        dofs: &dofs,
        quad: &quad,
        material: &m,
        model: Model::Nlsl,
        phi: &phi,
        u_prev_iter: &u,
        l_u,
        body_force: None,
    };
    let mut a = CsrMatrix::zeros(Arc::new(SparsityPattern::new(&dofs, &cons)));
    problem.system(&u, &cons, &mut a).unwrap();
    let free: Vec<usize> = (0..dofs.n_dofs()).filter(|&d| cons.is_free(d)).collect();
    let mat = faer::Mat::<f64>::from_fn(free.len(), free.len(), |i, j| a.get(free[i], free[j]));
    let eig = mat.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    // the Q1 mass of a cell of side h has smallest eigenvalue h²/36, here h = 1/2
    assert!(eig[0] > 0.5 * l_u * 0.25 / 36.0, "{eig:?}");
}

/// Residual of the phase-field problem assembled term by term on a uniform
/// mesh without constraints.
#[allow(clippy::too_many_arguments)]
fn split_residual(
    mesh: &QuadMesh,
    quad: &QuadratureTable,
    m: &MaterialParams,
    driving: &[f64],
    phi: &[f64],
    prev: &[f64],
    iter: &[f64],
    pen: &PenaltyState,
    l_phi: f64,
) -> Vec<f64> {
    let n = mesh.n_vertices();
    let (mut drive, mut reaction, mut diffusion, mut penalty, mut lterm) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let nq = quad.len();
    for (c, cell) in mesh.cells().iter().enumerate() {
        let pv = scalar_cell_values(phi, cell);
        let iv = scalar_cell_values(iter, cell);
        for (q, &w) in quad.weights.iter().enumerate() {
            let shape = &quad.shapes[q];
            let g = physical_grads(shape, cell);
            let wa = w * cell.area();
            let p = interpolate_scalar(&pv, shape);
            let gp = scalar_gradient(&pv, &g);
            for a in 0..4 {
                let v = cell.vertices[a];
                let na = shape.values[a];
                drive[v] += wa * (1.0 - m.kappa) * driving[c * nq + q] * p * na;
                reaction[v] -= wa * m.gc / m.xi * (1.0 - p) * na;
                diffusion[v] += wa * m.gc * m.xi * (gp[0] * g[a][0] + gp[1] * g[a][1]);
                lterm[v] += wa * l_phi * (p - interpolate_scalar(&iv, shape)) * na;
            }
        }
        for &v in &cell.vertices {
            let arg = pen.omega[v] + pen.gamma * (phi[v] - prev[v]);
            if arg > 0.0 {
                penalty[v] += 0.25 * cell.area() * arg;
            }
        }
    }
    (0..n)
        .map(|i| drive[i] + reaction[i] + diffusion[i] + penalty[i] + lterm[i])
        .collect()
}

#[test]
fn phasefield_residual_is_the_sum_of_its_terms() {
    let mesh = QuadMesh::unit_square().refine_global(3);
    let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
    let cons = Constraints::hanging_only(&dofs);
    let quad = QuadratureTable::gauss(2);
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..20 {
        let m = MaterialParams {
            lambda: 1.0,
            mu: 1.0,
            alpha: 1.0,
            beta: 0.0,
            gc: rng.random_range(0.5..5.0),
            xi: rng.random_range(0.02..0.3),
            kappa: rng.random_range(0.0..1e-3),
        };
        let n = mesh.n_vertices();
        let driving: Vec<f64> = (0..mesh.n_cells() * quad.len()).map(|_| rng.random_range(0.0..20.0)).collect();
        let prev: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let phi: Vec<f64> = prev.iter().map(|p| p + rng.random_range(-0.3..0.3)).collect();
        let iter: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let pen = PenaltyState {
            omega: (0..n).map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..3.0) } else { 0.0 }).collect(),
            gamma: rng.random_range(1.0..100.0),
        };
        let l_phi = rng.random_range(0.0..1e-2);
        let problem = PhaseField {
            mesh: &mesh,
            dofs: &dofs,
            quad: &quad,
            material: &m,
            driving: &driving,
            phi_prev_step: &prev,
            phi_prev_iter: &iter,
            penalty: &pen,
            l_phi,
        };
        let got = problem.residual(&phi, &cons).unwrap();
        let want = split_residual(&mesh, &quad, &m, &driving, &phi, &prev, &iter, &pen, l_phi);
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            assert!((got[i] - want[i]).abs() <= 1e-12 * scale, "node {i}: {} vs {}", got[i], want[i]);
        }
    }
}

#[test]
fn phasefield_jacobian_sees_kappa_only_through_the_driving_term() {
    let mesh = QuadMesh::unit_square().refine_global(2);
    let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
    let cons = Constraints::hanging_only(&dofs);
    let quad = QuadratureTable::gauss(2);
    let n = mesh.n_vertices();
    let phi = vec![0.7; n];
    let prev = vec![0.8; n];
    let pen = PenaltyState::new(n, 10.0);
    let matrix = |kappa: f64, drive: f64| {
        let m = MaterialParams {
            lambda: 1.0,
            mu: 1.0,
            alpha: 1.0,
            beta: 0.0,
            gc: 2.0,
            xi: 0.1,
            kappa,
        };
        let driving = vec![drive; mesh.n_cells() * quad.len()];
        let problem = PhaseField {
            mesh: &mesh,
            dofs: &dofs,
            quad: &quad,
            material: &m,
            driving: &driving,
            phi_prev_step: &prev,
            phi_prev_iter: &phi,
            penalty: &pen,
            l_phi: 1e-6,
        };
        let mut a = CsrMatrix::zeros(Arc::new(SparsityPattern::new(&dofs, &cons)));
        problem.system(&phi, &cons, &mut a).unwrap();
        a.values().to_vec()
    };
    assert_eq!(matrix(1e-3, 0.0), matrix(0.3, 0.0));
    // with driving C the difference is (κ₂ - κ₁) C times the mass matrix
    let (a, b, mass) = (matrix(0.0, 5.0), matrix(0.2, 5.0), matrix(0.0, 1.0));
    let base = matrix(0.0, 0.0);
    for k in 0..a.len() {
        let m = mass[k] - base[k];
        assert!((a[k] - b[k] - 0.2 * 5.0 * m).abs() < 1e-12, "entry {k}");
    }
}

#[test]
fn multiplier_update_is_nodewise_positive_part() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..50 {
        let n = 40;
        let pen = PenaltyState {
            omega: (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
            gamma: rng.random_range(0.1..1e4),
        };
        let phi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let prev: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let next = update_multiplier(&pen, &phi, &prev);
        for i in 0..n {
            assert_eq!(next.omega[i], (pen.omega[i] + pen.gamma * (phi[i] - prev[i])).max(0.0));
        }
        assert_eq!(next.gamma, pen.gamma);
    }
}

#[test]
fn seeded_band_stays_broken_under_tension() {
    let mut cfg = preset("ex3_lefm").unwrap();
    cfg.mesh.global = 4;
    cfg.mesh.band_levels = 2;
    let o = run(&cfg, None).unwrap();
    let sim = &o.simulation;
    let h = sim.disc.mesh.h_min();
    for (p, &v) in sim.disc.mesh.vertices().iter().zip(&sim.state.phi) {
        if p[0] > 0.55 && (p[1] - 0.5).abs() <= h * 0.5 {
            assert!(v < 0.1, "{p:?}: {v}");
        }
        if (p[1] - 0.5).abs() > 0.25 {
            assert!(v > 0.95, "{p:?}: {v}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = preset("ex4_nlsl_reduced").unwrap();
    cfg.mesh.global = 4;
    cfg.coupling.n_steps = 4;
    let a = run(&cfg, None).unwrap();
    let b = run(&cfg, None).unwrap();
    assert_eq!(a.simulation.state, b.simulation.state);
    assert_eq!(a.energies, b.energies);
}
