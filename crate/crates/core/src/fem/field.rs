//! Evaluation of nodal Q1 fields on cells.

use super::quadrature::{shape_eval, QuadratureTable, ShapeEval};
use crate::constitutive::SymTensor2;
use crate::mesh::{Cell, QuadMesh};

/// Vertex values of a scalar field on one cell.
pub fn scalar_cell_values(values: &[f64], cell: &Cell) -> [f64; 4] {
    cell.vertices.map(|v| values[v])
}

/// Vertex values of a displacement field (interleaved) on one cell.
pub fn vector_cell_values(values: &[f64], cell: &Cell) -> [[f64; 2]; 4] {
    cell.vertices.map(|v| [values[2 * v], values[2 * v + 1]])
}

/// Physical gradients of the shape functions on an axis-aligned cell.
pub fn physical_grads(shape: &ShapeEval, cell: &Cell) -> [[f64; 2]; 4] {
    let inv = [1.0 / cell.size[0], 1.0 / cell.size[1]];
    shape.grads.map(|g| [g[0] * inv[0], g[1] * inv[1]])
}

pub fn interpolate_scalar(vals: &[f64; 4], shape: &ShapeEval) -> f64 {
    (0..4).map(|a| vals[a] * shape.values[a]).sum()
}

pub fn interpolate_vector(vals: &[[f64; 2]; 4], shape: &ShapeEval) -> [f64; 2] {
    let mut u = [0.0; 2];
    for a in 0..4 {
        u[0] += vals[a][0] * shape.values[a];
        u[1] += vals[a][1] * shape.values[a];
    }
    u
}

pub fn scalar_gradient(vals: &[f64; 4], grads: &[[f64; 2]; 4]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for a in 0..4 {
        g[0] += vals[a] * grads[a][0];
        g[1] += vals[a] * grads[a][1];
    }
    g
}

/// `grad[i][j] = d u_i / d x_j`.
pub fn vector_gradient(vals: &[[f64; 2]; 4], grads: &[[f64; 2]; 4]) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for a in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += vals[a][i] * grads[a][j];
            }
        }
    }
    g
}

/// Symmetric gradient of a displacement field.
pub fn strain(vals: &[[f64; 2]; 4], grads: &[[f64; 2]; 4]) -> SymTensor2 {
    SymTensor2::sym_grad(vector_gradient(vals, grads))
}

/// Strain of the shape function of local vector dof `k = 2 a + c`.
pub fn basis_strain(grads: &[[f64; 2]; 4], k: usize) -> SymTensor2 {
    let (a, c) = (k / 2, k % 2);
    let g = grads[a];
    if c == 0 {
        SymTensor2::new(g[0], 0.0, 0.5 * g[1])
    } else {
        SymTensor2::new(0.0, g[1], 0.5 * g[0])
    }
}

/// Point evaluation of a scalar field; `None` outside the mesh.
pub fn eval_scalar(mesh: &QuadMesh, values: &[f64], p: [f64; 2]) -> Option<f64> {
    let cell = &mesh.cells()[mesh.locate(p)?];
    let s = shape_eval((p[0] - cell.origin[0]) / cell.size[0], (p[1] - cell.origin[1]) / cell.size[1]);
    Some(interpolate_scalar(&scalar_cell_values(values, cell), &s))
}

/// `L²` norm of `u_h - u` for a displacement field.
pub fn l2_error_vector<F>(mesh: &QuadMesh, values: &[f64], exact: F, q: &QuadratureTable) -> f64
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    let mut acc = 0.0;
    for cell in mesh.cells() {
        let vals = vector_cell_values(values, cell);
        for (k, w) in q.weights.iter().enumerate() {
            let uh = interpolate_vector(&vals, &q.shapes[k]);
            let u = exact(cell.map(q.points[k][0], q.points[k][1]));
            acc += w * cell.area() * ((uh[0] - u[0]).powi(2) + (uh[1] - u[1]).powi(2));
        }
    }
    acc.sqrt()
}

/// `L²` norm of `v_h - v` for a scalar field.
pub fn l2_error_scalar<F>(mesh: &QuadMesh, values: &[f64], exact: F, q: &QuadratureTable) -> f64
where
    F: Fn([f64; 2]) -> f64,
{
    let mut acc = 0.0;
    for cell in mesh.cells() {
        let vals = scalar_cell_values(values, cell);
        for (k, w) in q.weights.iter().enumerate() {
            let vh = interpolate_scalar(&vals, &q.shapes[k]);
            acc += w * cell.area() * (vh - exact(cell.map(q.points[k][0], q.points[k][1]))).powi(2);
        }
    }
    acc.sqrt()
}
