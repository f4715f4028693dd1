//! Invariant checks behind `limitfrac verify`. Each check is small enough to
//! run in a second or two.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::constitutive::{stress_sl, strain_nl, MaterialParams, Model, SymTensor2};
use crate::fem::field::eval_scalar;
use crate::fem::{Constraints, CsrMatrix, DofMap, FieldKind, QuadratureTable, SparsityPattern};
use crate::mechanics::{solve_mechanics, Mechanics, MechanicsConfig, MechanicsSolver};
use crate::mesh::{QuadMesh, Side};
use crate::phasefield::{PenaltyState, PhaseField};
use crate::postprocess::max_monitor;

use super::presets::preset;
use super::run;

const SEED: u64 = 0x5eed_1ab5;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> CheckResult {
    CheckResult {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} (limit {limit:.0e})"),
    }
}

fn failed(name: &'static str, e: crate::Error) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        detail: e.to_string(),
    }
}

/// Unit square, two global levels, lower-left quarter refined once more.
pub fn hanging_mesh() -> QuadMesh {
    QuadMesh::unit_square()
        .refine_global(2)
        .refine_where(|c| c.centroid[0] < 0.5 && c.centroid[1] < 0.5, 1)
}

fn material(alpha: f64, beta: f64) -> MaterialParams {
    MaterialParams {
        lambda: 1.5,
        mu: 1.0,
        alpha,
        beta,
        gc: 2.0,
        xi: 0.1,
        kappa: 1e-6,
    }
}

pub fn inverse_pairs(n: usize) -> CheckResult {
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let m = material(rng.random_range(0.2..3.0), rng.random_range(0.01..2.0));
        let eps = SymTensor2::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let s = crate::constitutive::half_norm_strain(&eps, &m);
        let eps = (rng.random_range(0.01..0.9) / (m.beta * s)) * eps;
        let res = stress_sl(&eps, &m).and_then(|sig| strain_nl(&sig, &m));
        match res {
            Ok(back) => worst = worst.max((back - eps).max_abs() / eps.max_abs()),
            Err(e) => return failed("strain_nl inverts stress_sl", e),
        }
    }
    check("strain_nl inverts stress_sl", worst, 1e-10)
}

/// Largest deviation from 1 of the interpolated constant on a 41x41 grid.
pub fn partition_of_unity_error(mesh: &QuadMesh) -> f64 {
    let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
    let cons = Constraints::hanging_only(&dofs);
    let mut ones: Vec<f64> = vec![1.0; dofs.n_dofs()];
    cons.distribute(&mut ones);
    let mut worst = 0.0f64;
    for i in 0..=40 {
        for j in 0..=40 {
            let p = [i as f64 / 40.0, j as f64 / 40.0];
            worst = worst.max((eval_scalar(mesh, &ones, p).unwrap_or(f64::NAN) - 1.0).abs());
        }
    }
    worst
}

pub fn partition_of_unity() -> CheckResult {
    let uniform = partition_of_unity_error(&QuadMesh::unit_square().refine_global(3));
    let hanging = partition_of_unity_error(&hanging_mesh());
    check("partition of unity, uniform and hanging meshes", uniform.max(hanging), 1e-10)
}

fn affine(p: [f64; 2]) -> [f64; 2] {
    [1e-3 * (0.3 + 2.0 * p[0] - p[1]), 1e-3 * (-0.1 + 0.5 * p[0] + 1.5 * p[1])]
}

/// Largest nodal error when an affine displacement is imposed on the boundary
/// and solved for with both models.
pub fn patch_test_error(mesh: &QuadMesh) -> crate::Result<f64> {
    let dofs = DofMap::new(mesh, FieldKind::Displacement);
    let mut bc = Vec::new();
    for side in Side::ALL {
        for d in dofs.boundary_dofs(side, None) {
            bc.push((d, affine(mesh.vertices()[dofs.vertex_of(d)])[dofs.component_of(d)]));
        }
    }
    bc.sort_by_key(|b| b.0);
    bc.dedup_by_key(|b| b.0);
    let cons = Constraints::new(&dofs, &bc);
    let m = material(0.5, 1.0);
    let phi = vec![1.0; mesh.n_vertices()];
    let zero = vec![0.0; dofs.n_dofs()];
    let quad = QuadratureTable::gauss(2);
    let mut worst = 0.0f64;
    for model in [Model::Lefm, Model::Nlsl] {
        let p = Mechanics {
            mesh,
            dofs: &dofs,
            quad: &quad,
            material: &m,
            model,
            phi: &phi,
            u_prev_iter: &zero,
            l_u: 0.0,
            body_force: None,
        };
        let mut store = MechanicsSolver::new(&dofs, &cons);
        let mut u = zero.clone();
        let opts = MechanicsConfig {
            newton_tol: 1e-13,
            ..MechanicsConfig::default()
        }
        .newton_options();
        solve_mechanics(&p, &cons, &mut u, &mut store, &opts, true)?;
        for (v, x) in mesh.vertices().iter().enumerate() {
            let a = affine(*x);
            worst = worst.max((u[2 * v] - a[0]).abs().max((u[2 * v + 1] - a[1]).abs()));
        }
    }
    Ok(worst)
}

pub fn patch_test() -> CheckResult {
    let name = "patch test, uniform and hanging meshes";
    let uniform = QuadMesh::unit_square().refine_global(3);
    match (patch_test_error(&uniform), patch_test_error(&hanging_mesh())) {
        (Ok(a), Ok(b)) => check(name, a.max(b), 1e-10),
        (Err(e), _) | (_, Err(e)) => failed(name, e),
    }
}

fn directional_check(
    matrix: &CsrMatrix,
    cons: &Constraints,
    v: &[f64],
    residual: impl Fn(&[f64]) -> crate::Result<Vec<f64>>,
    x: &[f64],
    h: f64,
) -> crate::Result<f64> {
    let mut jv = vec![0.0; v.len()];
    matrix.mul_vec(v, &mut jv);
    let shifted = |s: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    let rp = residual(&shifted(h))?;
    let rm = residual(&shifted(-h))?;
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..v.len() {
        if !cons.is_free(i) {
            continue;
        }
        let fd = (rp[i] - rm[i]) / (2.0 * h);
        diff += (jv[i] - fd).powi(2);
        scale += fd * fd;
    }
    Ok(diff.sqrt() / scale.sqrt().max(f64::MIN_POSITIVE))
}

/// Largest relative mismatch between the mechanics Jacobian and central
/// differences of the residual over `n` random admissible states.
pub fn mechanics_tangent(n: usize, seed: u64) -> crate::Result<f64> {
    let mesh = hanging_mesh();
    let dofs = DofMap::new(&mesh, FieldKind::Displacement);
    let bc: Vec<(usize, f64)> = dofs.boundary_dofs(Side::Bottom, None).into_iter().map(|d| (d, 0.0)).collect();
    let cons = Constraints::new(&dofs, &bc);
    let incr = cons.homogeneous();
    let quad = QuadratureTable::gauss(2);
    let pattern = Arc::new(SparsityPattern::new(&dofs, &cons));
    let mut matrix = CsrMatrix::zeros(pattern);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let m = material(rng.random_range(0.2..3.0), rng.random_range(0.1..2.0));
        let mut u: Vec<f64> = (0..dofs.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        cons.distribute(&mut u);
        let target = rng.random_range(0.05..0.8);
        let scale = target / max_monitor(&mesh, &quad, &u, &m).max(1e-300);
        u.iter_mut().for_each(|x| *x *= scale);
        let mut phi: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.random_range(0.2..1.0)).collect();
        Constraints::hanging_only(&DofMap::new(&mesh, FieldKind::PhaseField)).distribute(&mut phi);
        let u_prev: Vec<f64> = u.iter().map(|x| x * rng.random_range(0.9..1.1)).collect();
        let p = Mechanics {
            mesh: &mesh,
            dofs: &dofs,
            quad: &quad,
            material: &m,
            model: Model::Nlsl,
            phi: &phi,
            u_prev_iter: &u_prev,
            l_u: 1e-3,
            body_force: None,
        };
        p.system(&u, &cons, &mut matrix)?;
        let mut v: Vec<f64> = (0..dofs.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        incr.distribute(&mut v);
        let umax = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let h = 1e-5 * umax / v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let rel = directional_check(&matrix, &cons, &v, |x| p.residual(x, &cons), &u, h)?;
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Same for the phase-field Jacobian, with every node kept away from the
/// switch of the active set.
pub fn phasefield_tangent(n: usize, seed: u64) -> crate::Result<f64> {
    let mesh = hanging_mesh();
    let dofs = DofMap::new(&mesh, FieldKind::PhaseField);
    let cons = Constraints::hanging_only(&dofs);
    let quad = QuadratureTable::gauss(2);
    let pattern = Arc::new(SparsityPattern::new(&dofs, &cons));
    let mut matrix = CsrMatrix::zeros(pattern);
    let mut rng = StdRng::seed_from_u64(seed);
    let nv = dofs.n_dofs();
    let mut worst = 0.0f64;
    for _ in 0..n {
        let m = material(1.0, 0.0);
        let gamma = rng.random_range(1.0..100.0);
        let driving: Vec<f64> = (0..mesh.n_cells() * quad.len()).map(|_| rng.random_range(0.0..50.0)).collect();
        let mut prev: Vec<f64> = (0..nv).map(|_| rng.random_range(0.3..1.0)).collect();
        cons.distribute(&mut prev);
        let mut phi: Vec<f64> = prev.iter().map(|p| p + rng.random_range(-0.2..0.2)).collect();
        cons.distribute(&mut phi);
        // keep |ω + γ(φ - φ_prev)| ≥ 1 at every node
        let omega: Vec<f64> = phi
            .iter()
            .zip(&prev)
            .map(|(p, q)| {
                let s = gamma * (p - q);
                let mut w: f64 = if rng.random_bool(0.5) { rng.random_range(0.0..5.0) } else { 0.0 };
                while (w + s).abs() < 1.0 {
                    w += 1.5;
                }
                w
            })
            .collect();
        let penalty = PenaltyState { omega, gamma };
        let iter: Vec<f64> = phi.iter().map(|p| p * rng.random_range(0.95..1.05)).collect();
        let p = PhaseField {
            mesh: &mesh,
            dofs: &dofs,
            quad: &quad,
            material: &m,
            driving: &driving,
            phi_prev_step: &prev,
            phi_prev_iter: &iter,
            penalty: &penalty,
            l_phi: 1e-3,
        };
        p.system(&phi, &cons, &mut matrix)?;
        let mut v: Vec<f64> = (0..nv).map(|_| rng.random_range(-1.0..1.0)).collect();
        cons.homogeneous().distribute(&mut v);
        // small enough that no node crosses its switch
        let h = 1e-4 / gamma;
        let rel = directional_check(&matrix, &cons, &v, |x| p.residual(x, &cons), &phi, h)?;
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// An NLSL slit problem with `β = 0` against its LEFM counterpart on a
/// coarse mesh.
pub fn model_coincidence() -> CheckResult {
    let name = "beta = 0 reproduces LEFM";
    let run_one = |preset_name: &str| -> crate::Result<Vec<f64>> {
        let mut cfg = preset(preset_name)?;
        cfg.mesh.global = 4;
        if cfg.model() == Model::Nlsl {
            cfg.material.beta = 0.0;
        }
        Ok(run::run(&cfg, None)?.simulation.state.u)
    };
    match (run_one("ex2_nlsl_case2_iv"), run_one("ex2_lefm_case2")) {
        (Ok(a), Ok(b)) => {
            let diff = a.iter().zip(&b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
            check(name, diff, 1e-8)
        }
        (Err(e), _) | (_, Err(e)) => failed(name, e),
    }
}

/// Linear manufactured solution, first three cycles against the printed errors.
pub fn mms_linear() -> CheckResult {
    const PRINTED: [f64; 3] = [0.033493958414, 0.008457780816, 0.002119761659];
    let name = "manufactured solution, cycles 1-3 (LEFM)";
    let cfg = match preset("ex1_linear") {
        Ok(c) => c,
        Err(e) => return failed(name, e),
    };
    match run::converge(&cfg, 3) {
        Ok(rows) => {
            let worst = rows
                .iter()
                .zip(PRINTED)
                .fold(0.0f64, |a, (r, e)| a.max((r.error - e).abs() / e));
            check(name, worst, 1e-2)
        }
        Err(e) => failed(name, e),
    }
}

pub fn run_all() -> Vec<CheckResult> {
    let tangent = |name: &'static str, r: crate::Result<f64>, tol: f64| match r {
        Ok(v) => check(name, v, tol),
        Err(e) => failed(name, e),
    };
    vec![
        inverse_pairs(1000),
        partition_of_unity(),
        patch_test(),
        tangent("mechanics Jacobian vs differences", mechanics_tangent(20, SEED), 1e-5),
        tangent("phase-field Jacobian vs differences", phasefield_tangent(20, SEED), 1e-6),
        model_coincidence(),
        mms_linear(),
    ]
}
