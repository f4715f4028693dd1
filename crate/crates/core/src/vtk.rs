//! Legacy ASCII VTK (version 3.0) unstructured-grid writer for quad meshes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;

/// Data attached to a mesh for export.
#[derive(Debug, Default)]
pub struct VtkData<'a> {
    pub point_scalars: Vec<(&'a str, &'a [f64])>,
    /// Interleaved 2-vectors, written with a zero third component.
    pub point_vectors: Vec<(&'a str, &'a [f64])>,
    pub cell_scalars: Vec<(&'a str, &'a [f64])>,
}

/// Renders the mesh and data as a VTK document.
pub fn render(mesh: &QuadMesh, data: &VtkData<'_>, title: &str) -> String {
    let mut s = String::new();
    let nv = mesh.n_vertices();
    let nc = mesh.n_cells();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", 5 * nc);
    for c in mesh.cells() {
        let v = c.vertices;
        let _ = writeln!(s, "4 {} {} {} {}", v[0], v[1], v[2], v[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "9");
    }
    if !data.point_scalars.is_empty() || !data.point_vectors.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, vals) in &data.point_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals.iter() {
                let _ = writeln!(s, "{v}");
            }
        }
        for (name, vals) in &data.point_vectors {
            let _ = writeln!(s, "VECTORS {name} double");
            for v in vals.chunks(2) {
                let _ = writeln!(s, "{} {} 0", v[0], v[1]);
            }
        }
    }
    if !data.cell_scalars.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nc}");
        for (name, vals) in &data.cell_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals.iter() {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    s
}

pub fn write(path: &Path, mesh: &QuadMesh, data: &VtkData<'_>, title: &str) -> Result<()> {
    std::fs::write(path, render(mesh, data, title)).map_err(|e| Error::io(path, e))
}
