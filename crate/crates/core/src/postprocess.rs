//! Derived quantities: energies, crack speed and take-off, center-line
//! samples, cell fields and VTK export.

use std::fmt::Write as _;
use std::path::Path;

use crate::constitutive::{ellipticity_monitor, half_norm_strain, hooke_stress, strain_nl, MaterialParams, Model, StressPoint};
use crate::error::{Error, Result};
use crate::fem::field::{interpolate_scalar, physical_grads, scalar_cell_values, scalar_gradient, strain, vector_cell_values};
use crate::fem::QuadratureTable;
use crate::mesh::QuadMesh;
use crate::vtk::{self, VtkData};

/// Energies of one committed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub time: f64,
    pub bulk: f64,
    pub crack: f64,
    pub total: f64,
}

/// Degraded elastic energy; the strain-limiting law divides the integrand by
/// `(1 - (β|E^{1/2}[ε]|)^α)^{1/α}`. Integrated with 3x3 Gauss.
pub fn bulk_energy(mesh: &QuadMesh, u: &[f64], phi: &[f64], model: Model, m: &MaterialParams) -> Result<f64> {
    let quad = QuadratureTable::gauss(3);
    let mut total = 0.0;
    for cell in mesh.cells() {
        let uv = vector_cell_values(u, cell);
        let pv = scalar_cell_values(phi, cell);
        for (q, &w) in quad.weights.iter().enumerate() {
            let shape = &quad.shapes[q];
            let eps = strain(&uv, &physical_grads(shape, cell));
            let s2 = half_norm_strain(&eps, m).powi(2);
            let point = StressPoint::new(model, &eps, m)?;
            let g = m.degradation(interpolate_scalar(&pv, shape));
            total += w * cell.area() * 0.5 * g * s2 * point.inv_denominator;
        }
    }
    Ok(total)
}

/// `G_c/2 ∫ (1-φ)²/ξ + ξ|∇φ|²`, integrated with 3x3 Gauss.
pub fn crack_energy(mesh: &QuadMesh, phi: &[f64], m: &MaterialParams) -> f64 {
    let quad = QuadratureTable::gauss(3);
    let mut total = 0.0;
    for cell in mesh.cells() {
        let pv = scalar_cell_values(phi, cell);
        for (q, &w) in quad.weights.iter().enumerate() {
            let shape = &quad.shapes[q];
            let p = interpolate_scalar(&pv, shape);
            let g = scalar_gradient(&pv, &physical_grads(shape, cell));
            total += w * cell.area() * ((1.0 - p).powi(2) / m.xi + m.xi * (g[0] * g[0] + g[1] * g[1]));
        }
    }
    0.5 * m.gc * total
}

pub fn energy_record(step: usize, time: f64, mesh: &QuadMesh, u: &[f64], phi: &[f64], model: Model, m: &MaterialParams) -> Result<EnergyRecord> {
    let bulk = bulk_energy(mesh, u, phi, model, m)?;
    let crack = crack_energy(mesh, phi, m);
    Ok(EnergyRecord {
        step,
        time,
        bulk,
        crack,
        total: bulk + crack,
    })
}

/// Forward difference of the crack energy, reported at the earlier record:
/// `(step_k, t_k, (E_{k+1} - E_k) / (t_{k+1} - t_k))`.
pub fn crack_speed(records: &[EnergyRecord]) -> Vec<(usize, f64, f64)> {
    records
        .windows(2)
        .map(|w| (w[0].step, w[0].time, (w[1].crack - w[0].crack) / (w[1].time - w[0].time)))
        .collect()
}

/// First step after `baseline_step` whose speed exceeds `factor` times the
/// magnitude of the speed at `baseline_step`.
pub fn take_off(speeds: &[(usize, f64, f64)], baseline_step: usize, factor: f64) -> Option<usize> {
    let base = speeds.iter().find(|s| s.0 == baseline_step)?.2.abs();
    speeds
        .iter()
        .filter(|s| s.0 > baseline_step)
        .find(|s| s.2 > factor * base)
        .map(|s| s.0)
}

/// Largest `β |E^{1/2}[ε]|` over quadrature points.
pub fn max_monitor(mesh: &QuadMesh, quad: &QuadratureTable, u: &[f64], m: &MaterialParams) -> f64 {
    let mut worst = 0.0f64;
    for cell in mesh.cells() {
        let uv = vector_cell_values(u, cell);
        for shape in &quad.shapes {
            worst = worst.max(ellipticity_monitor(&strain(&uv, &physical_grads(shape, cell)), m));
        }
    }
    worst
}

/// Sampled or exported per-cell quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `σ₂₂` from Hooke's law on the displacement gradient.
    Sigma22,
    /// `ε₂₂` for the linear law, `ε_NL,22` for the strain-limiting law.
    Eps22,
    /// Degraded stress `g(φ) σ₂₂`.
    SigmaPhi22,
    Phi,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::Sigma22, Quantity::Eps22, Quantity::SigmaPhi22, Quantity::Phi];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Sigma22 => "sigma22",
            Quantity::Eps22 => "eps22",
            Quantity::SigmaPhi22 => "sigma_phi22",
            Quantity::Phi => "phi",
        }
    }

    pub fn parse(s: &str) -> Option<Quantity> {
        Quantity::ALL.into_iter().find(|q| q.name() == s.trim())
    }
}

/// Quadrature-point average of a quantity on one cell.
pub fn cell_average(
    mesh: &QuadMesh,
    quad: &QuadratureTable,
    cell: usize,
    u: &[f64],
    phi: &[f64],
    quantity: Quantity,
    model: Model,
    m: &MaterialParams,
) -> Result<f64> {
    let cell = &mesh.cells()[cell];
    let uv = vector_cell_values(u, cell);
    let pv = scalar_cell_values(phi, cell);
    let mut acc = 0.0;
    for shape in &quad.shapes {
        let eps = strain(&uv, &physical_grads(shape, cell));
        let p = interpolate_scalar(&pv, shape);
        acc += match quantity {
            Quantity::Sigma22 => hooke_stress(&eps, m).yy,
            Quantity::SigmaPhi22 => m.degradation(p) * hooke_stress(&eps, m).yy,
            Quantity::Phi => p,
            Quantity::Eps22 => match model {
                Model::Lefm => eps.yy,
                Model::Nlsl => strain_nl(&hooke_stress(&eps, m), m)?.yy,
            },
        };
    }
    Ok(acc / quad.len() as f64)
}

/// Per-cell values of a quantity over the whole mesh.
pub fn cell_field(mesh: &QuadMesh, quad: &QuadratureTable, u: &[f64], phi: &[f64], quantity: Quantity, model: Model, m: &MaterialParams) -> Result<Vec<f64>> {
    (0..mesh.n_cells())
        .map(|c| cell_average(mesh, quad, c, u, phi, quantity, model, m))
        .collect()
}

/// One line-sample row: cell centroid abscissa, line ordinate, value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub x: f64,
    pub y: f64,
    pub quantity: Quantity,
    pub value: f64,
}

/// Cells crossed by the horizontal segment `from`–`to`, ordered by `x`. A
/// line on a cell edge selects the cells above it (the cells below on the top
/// boundary).
pub fn cells_on_horizontal(mesh: &QuadMesh, from: [f64; 2], to: [f64; 2]) -> Result<Vec<usize>> {
    if from[1] != to[1] {
        return Err(Error::Config("line samples must be horizontal".into()));
    }
    let y = from[1];
    let (xa, xb) = (from[0].min(to[0]), from[0].max(to[0]));
    let top = mesh.domain().y1;
    let mut cells: Vec<usize> = mesh
        .cells()
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let (y0, y1) = (c.origin[1], c.origin[1] + c.size[1]);
            let in_y = if y == top { y0 < y && y <= y1 } else { y0 <= y && y < y1 };
            let (x0, x1) = (c.origin[0], c.origin[0] + c.size[0]);
            in_y && x0 < xb && x1 > xa
        })
        .map(|(k, _)| k)
        .collect();
    cells.sort_by(|&a, &b| mesh.cells()[a].origin[0].total_cmp(&mesh.cells()[b].origin[0]));
    Ok(cells)
}

#[allow(clippy::too_many_arguments)]
pub fn line_sample(
    mesh: &QuadMesh,
    quad: &QuadratureTable,
    u: &[f64],
    phi: &[f64],
    from: [f64; 2],
    to: [f64; 2],
    quantity: Quantity,
    model: Model,
    m: &MaterialParams,
) -> Result<Vec<SampleRow>> {
    cells_on_horizontal(mesh, from, to)?
        .into_iter()
        .map(|c| {
            Ok(SampleRow {
                x: mesh.cells()[c].centroid()[0],
                y: from[1],
                quantity,
                value: cell_average(mesh, quad, c, u, phi, quantity, model, m)?,
            })
        })
        .collect()
}

pub fn samples_csv(rows: &[SampleRow]) -> String {
    let mut s = String::from("x,y,quantity,value\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.12e}", r.x, r.y, r.quantity.name(), r.value);
    }
    s
}

pub fn write_samples(path: &Path, rows: &[SampleRow]) -> Result<()> {
    std::fs::write(path, samples_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Writes `u`, `φ` at points and `σ₂₂`, `ε₂₂`, `g(φ)σ₂₂` on cells.
#[allow(clippy::too_many_arguments)]
pub fn export_vtk(
    path: &Path,
    mesh: &QuadMesh,
    quad: &QuadratureTable,
    u: &[f64],
    phi: &[f64],
    model: Model,
    m: &MaterialParams,
    title: &str,
) -> Result<()> {
    let sigma = cell_field(mesh, quad, u, phi, Quantity::Sigma22, model, m)?;
    let eps = cell_field(mesh, quad, u, phi, Quantity::Eps22, model, m)?;
    let sigma_phi = cell_field(mesh, quad, u, phi, Quantity::SigmaPhi22, model, m)?;
    let data = VtkData {
        point_scalars: vec![("phi", phi)],
        point_vectors: vec![("u", u)],
        cell_scalars: vec![("sigma22", &sigma), ("eps22", &eps), ("sigma_phi22", &sigma_phi)],
    };
    vtk::write(path, mesh, &data, title)
}
