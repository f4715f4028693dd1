//! Builds meshes, initial and boundary data from a [`RunConfig`] and drives
//! the time loop, the outputs and the convergence study.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::constitutive::{MaterialParams, Model};
use crate::coupling::{DirichletData, Discretization, Simulation, StepReport};
use crate::error::{Error, Result};
use crate::fem::field::l2_error_vector;
use crate::fem::{DofMap, QuadratureTable};
use crate::mesh::{CellInfo, QuadMesh, Side};
use crate::postprocess::{self, EnergyRecord};

use super::config::{Boundary, CrackBand, RunConfig};
use super::mms;

/// Steps whose crack speed sets the take-off baseline.
pub const TAKE_OFF_BASELINE: usize = 10;
/// Take-off: speed above this multiple of the baseline speed.
pub const TAKE_OFF_FACTOR: f64 = 5.0;

pub const RUN_LOG_HEADER: &str = "step,time,stagger_iters,mech_newton_total,pf_newton_total,bulk_energy,crack_energy,total_energy";

const GEOM_TOL: f64 = 1e-12;

fn band_touches(info: &CellInfo, band: &CrackBand, half: f64) -> bool {
    let (hx, hy) = (0.5 * info.size[0], 0.5 * info.size[1]);
    let [cx, cy] = info.centroid;
    cx + hx >= band.x0 - GEOM_TOL
        && cx - hx <= band.x1 + GEOM_TOL
        && cy + hy >= band.y - half - GEOM_TOL
        && cy - hy <= band.y + half + GEOM_TOL
}

/// Global refinement, slit, refinement boxes, then band refinement.
pub fn build_mesh(cfg: &RunConfig) -> Result<QuadMesh> {
    let mut mesh = QuadMesh::unit_square().refine_global(cfg.mesh.global);
    if let Some(slit) = cfg.slit {
        mesh = mesh.with_slit(slit)?;
    }
    for b in &cfg.mesh.boxes {
        let inside = |c: &CellInfo| {
            let [x, y] = c.centroid;
            x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1
        };
        mesh = mesh.refine_where(inside, b.levels);
    }
    if cfg.mesh.band_levels > 0 {
        let band = cfg
            .crack
            .ok_or_else(|| Error::Config("mesh.band_levels needs crack.band".into()))?;
        let target = mesh.h_min() / f64::powi(2.0, cfg.mesh.band_levels as i32);
        let half = band.half_width.resolve(target);
        // One level at a time so the marker sees the current cells.
        for _ in 0..cfg.mesh.band_levels {
            mesh = mesh.refine_where(|c| band_touches(c, &band, half), 1);
        }
    }
    Ok(mesh)
}

/// `φ = 0` on vertices inside the crack band, 1 elsewhere.
pub fn initial_phase_field(cfg: &RunConfig, mesh: &QuadMesh) -> Vec<f64> {
    let Some(band) = cfg.crack else {
        return vec![1.0; mesh.n_vertices()];
    };
    let half = band.half_width.resolve(mesh.h_min());
    mesh.vertices()
        .iter()
        .map(|p| {
            let inside = p[0] >= band.x0 - GEOM_TOL
                && p[0] <= band.x1 + GEOM_TOL
                && (p[1] - band.y).abs() <= half + GEOM_TOL;
            if inside {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}

pub fn dirichlet_data(cfg: &RunConfig, mesh: &QuadMesh, dofs: &DofMap) -> DirichletData {
    let mut entries = Vec::new();
    match cfg.boundary {
        Boundary::Tension => {
            for d in dofs.boundary_dofs(Side::Top, None) {
                let per_load = if dofs.component_of(d) == 1 { 1.0 } else { 0.0 };
                entries.push((d, 0.0, per_load));
            }
            for d in dofs.boundary_dofs(Side::Bottom, Some(1)) {
                entries.push((d, 0.0, 0.0));
            }
        }
        Boundary::Mms => {
            for side in Side::ALL {
                for d in dofs.boundary_dofs(side, None) {
                    let p = mesh.vertices()[dofs.vertex_of(d)];
                    entries.push((d, mms::exact(p)[dofs.component_of(d)], 0.0));
                }
            }
        }
    }
    entries.sort_by_key(|e| e.0);
    entries.dedup_by_key(|e| e.0);
    DirichletData { entries }
}

pub fn material(cfg: &RunConfig, mesh: &QuadMesh) -> MaterialParams {
    cfg.material.resolve(mesh.h_min())
}

/// Simulation on a given mesh with the config's data.
pub fn simulation_on(cfg: &RunConfig, mesh: QuadMesh) -> Result<Simulation> {
    let m = material(cfg, &mesh);
    let phi0 = initial_phase_field(cfg, &mesh);
    let disc = Discretization::new(mesh, cfg.mechanics.quad_order);
    let dirichlet = dirichlet_data(cfg, &disc.mesh, &disc.u_dofs);
    let mut sim = Simulation::new(
        disc,
        m,
        cfg.mechanics.clone(),
        cfg.phasefield.clone(),
        cfg.coupling.clone(),
        dirichlet,
        phi0,
    )?;
    if cfg.boundary == Boundary::Mms {
        let model = cfg.model();
        sim.set_body_force(Box::new(move |p| mms::forcing(p, model, &m).unwrap_or([f64::NAN; 2])));
    }
    Ok(sim)
}

pub fn build_simulation(cfg: &RunConfig) -> Result<Simulation> {
    simulation_on(cfg, build_mesh(cfg)?)
}

/// What a completed run leaves behind.
#[derive(Debug)]
pub struct RunOutcome {
    pub simulation: Simulation,
    /// Step reports without the Newton logs.
    pub reports: Vec<StepReport>,
    /// Energies at step 0 and after every step.
    pub energies: Vec<EnergyRecord>,
    pub speeds: Vec<(usize, f64, f64)>,
    pub take_off: Option<usize>,
    pub max_monitor: f64,
    /// Largest increase of any nodal `φ` over one step.
    pub max_phi_increase: f64,
    pub out_dir: Option<PathBuf>,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_log_row(r: &StepReport, e: &EnergyRecord) -> String {
    format!(
        "{},{:e},{},{},{},{:.12e},{:.12e},{:.12e}",
        r.step, r.time, r.stagger_iters, r.mech_newton_total, r.pf_newton_total, e.bulk, e.crack, e.total
    )
}

fn wants(steps: &[usize], step: usize, last: usize) -> bool {
    if steps.is_empty() {
        step == last
    } else {
        steps.contains(&step)
    }
}

fn write_outputs(cfg: &RunConfig, sim: &Simulation, dir: &Path) -> Result<()> {
    let step = sim.state.step;
    let last = sim.coupling.n_steps;
    let (mesh, quad) = (&sim.disc.mesh, &sim.disc.quad);
    let (u, phi) = (&sim.state.u, &sim.state.phi);
    if wants(&cfg.output.sample_steps, step, last) {
        for &q in &cfg.output.quantities {
            let rows = postprocess::line_sample(
                mesh,
                quad,
                u,
                phi,
                cfg.output.line_from,
                cfg.output.line_to,
                q,
                sim.model(),
                &sim.material,
            )?;
            postprocess::write_samples(&dir.join(format!("{}_{step}.csv", q.name())), &rows)?;
        }
    }
    if wants(&cfg.output.vtk_steps, step, last) {
        let title = format!("{} step {step} t={:e}", cfg.name, sim.state.time);
        postprocess::export_vtk(
            &dir.join(format!("state_{step}.vtk")),
            mesh,
            quad,
            u,
            phi,
            sim.model(),
            &sim.material,
            &title,
        )?;
    }
    Ok(())
}

/// Runs every timestep of `cfg`, writing logs and samples to `out` if given.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let mut sim = build_simulation(cfg)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("config.txt"), &cfg.render())?;
    }
    log::info!(
        "{}: {} cells, {} vertices, h_min = {:e}",
        cfg.name,
        sim.disc.mesh.n_cells(),
        sim.disc.mesh.n_vertices(),
        sim.disc.mesh.h_min()
    );
    let model = sim.model();
    let e0 = postprocess::energy_record(0, 0.0, &sim.disc.mesh, &sim.state.u, &sim.state.phi, model, &sim.material)?;
    let mut energies = vec![e0];
    let mut log_text = format!("{RUN_LOG_HEADER}\n");
    let mut newton_text = String::from("solver,step,stagger,iteration,residual,increment\n");
    let mut max_phi_increase = f64::NEG_INFINITY;
    let mut prev_phi = sim.state.phi.clone();

    let reports = sim.run(|s, rep| {
        let e = postprocess::energy_record(rep.step, rep.time, &s.disc.mesh, &s.state.u, &s.state.phi, model, &s.material)?;
        let inc = s.state.phi.iter().zip(&prev_phi).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        max_phi_increase = max_phi_increase.max(inc);
        prev_phi.clone_from(&s.state.phi);
        log::info!(
            "step {:>3} t={:.4e}: stagger {}, newton {}/{}, crack energy {:.6e}, monitor {:.4}",
            rep.step,
            rep.time,
            rep.stagger_iters,
            rep.mech_newton_total,
            rep.pf_newton_total,
            e.crack,
            rep.max_monitor
        );
        let _ = writeln!(log_text, "{}", run_log_row(rep, &e));
        for l in &rep.newton_log {
            let _ = writeln!(newton_text, "{l}");
        }
        energies.push(e);
        if let Some(dir) = out {
            write_file(&dir.join("run_log.csv"), &log_text)?;
            write_outputs(cfg, s, dir)?;
        }
        Ok(())
    })?;

    let speeds = postprocess::crack_speed(&energies);
    let take_off = postprocess::take_off(&speeds, TAKE_OFF_BASELINE, TAKE_OFF_FACTOR);
    if let Some(dir) = out {
        if cfg.output.newton_log {
            write_file(&dir.join("newton_log.csv"), &newton_text)?;
        }
        let mut s = String::from("step,time,crack_speed\n");
        for (k, t, v) in &speeds {
            let _ = writeln!(s, "{k},{t:e},{v:.12e}");
        }
        write_file(&dir.join("crack_speed.csv"), &s)?;
    }
    let max_monitor = reports.iter().map(|r| r.max_monitor).fold(0.0, f64::max);
    let reports = reports
        .into_iter()
        .map(|mut r| {
            r.newton_log = Vec::new();
            r
        })
        .collect();
    Ok(RunOutcome {
        simulation: sim,
        reports,
        energies,
        speeds,
        take_off,
        max_monitor,
        max_phi_increase,
        out_dir: out.map(Path::to_path_buf),
    })
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub cycle: usize,
    pub h: f64,
    pub cells: usize,
    pub dofs: usize,
    pub error: f64,
    /// `2 log(e_prev / e) / log(N / N_prev)` in the dof count `N`; zero on
    /// the first cycle.
    pub rate: f64,
    pub newton_iterations: usize,
    pub max_monitor: f64,
}

/// Solves the manufactured-solution problem of cycle `cycle` (1-based): the
/// unit square refined `mesh.global + cycle - 1` times.
pub fn mms_solution(cfg: &RunConfig, cycle: usize) -> Result<(Simulation, StepReport)> {
    if cfg.boundary != Boundary::Mms {
        return Err(Error::Config(format!("`{}` is not a manufactured-solution preset", cfg.name)));
    }
    let mesh = QuadMesh::unit_square().refine_global(cfg.mesh.global + cycle as u32 - 1);
    let mut sim = simulation_on(cfg, mesh)?;
    let rep = sim.staggered_step()?;
    Ok((sim, rep))
}

/// Manufactured-solution study over cycles `1..=cycles`, reporting the `L²`
/// displacement error of each.
pub fn converge(cfg: &RunConfig, cycles: usize) -> Result<Vec<ConvergenceRow>> {
    let error_quad = QuadratureTable::gauss(3);
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for cycle in 1..=cycles {
        let (sim, rep) = mms_solution(cfg, cycle)?;
        let error = l2_error_vector(&sim.disc.mesh, &sim.state.u, mms::exact, &error_quad);
        let dofs = sim.disc.u_dofs.n_dofs();
        let rate = match rows.last() {
            Some(prev) => 2.0 * (prev.error / error).ln() / (dofs as f64 / prev.dofs as f64).ln(),
            None => 0.0,
        };
        rows.push(ConvergenceRow {
            cycle,
            h: sim.disc.mesh.h_min(),
            cells: sim.disc.mesh.n_cells(),
            dofs,
            error,
            rate,
            newton_iterations: rep.mech_newton_total,
            max_monitor: rep.max_monitor,
        });
    }
    Ok(rows)
}

pub fn convergence_table(model: Model, rows: &[ConvergenceRow]) -> String {
    let mut s = format!("{} L2 displacement error\n", model.name().to_uppercase());
    let _ = writeln!(s, "{:>5} {:>10} {:>6} {:>7} {:>16} {:>8}", "cycle", "h", "cells", "dofs", "L2 error", "rate");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>5} {:>10} {:>6} {:>7} {:>16.12} {:>8.4}",
            r.cycle, r.h, r.cells, r.dofs, r.error, r.rate
        );
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("cycle,h,cells,dofs,l2_error,rate\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{:.12e},{:.6}", r.cycle, r.h, r.cells, r.dofs, r.error, r.rate);
    }
    s
}
