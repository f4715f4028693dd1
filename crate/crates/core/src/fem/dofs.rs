//! Degree-of-freedom numbering and constraints (Dirichlet data and hanging
//! vertices) for scalar and 2-vector Q1 spaces.

use std::collections::BTreeMap;

use crate::mesh::{QuadMesh, Side};

/// Which Q1 space a field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// 2-vector, components interleaved: dof `2 v + c`.
    Displacement,
    /// Scalar: dof `v`.
    PhaseField,
}

impl FieldKind {
    pub fn components(&self) -> usize {
        match self {
            FieldKind::Displacement => 2,
            FieldKind::PhaseField => 1,
        }
    }
}

/// Global numbering of one field on one mesh.
#[derive(Debug, Clone)]
pub struct DofMap {
    kind: FieldKind,
    n_vertices: usize,
    cell_vertices: Vec<[usize; 4]>,
    hanging: BTreeMap<usize, [usize; 2]>,
    boundary: [Vec<usize>; 4],
}

impl DofMap {
    pub fn new(mesh: &QuadMesh, kind: FieldKind) -> Self {
        let side_vertices = |s: Side| mesh.boundary_vertices(s).collect::<Vec<_>>();
        DofMap {
            kind,
            n_vertices: mesh.n_vertices(),
            cell_vertices: mesh.cells().iter().map(|c| c.vertices).collect(),
            hanging: mesh.constraints().clone(),
            boundary: [
                side_vertices(Side::Left),
                side_vertices(Side::Right),
                side_vertices(Side::Bottom),
                side_vertices(Side::Top),
            ],
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.kind.components()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_vertices * self.components()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_vertices.len()
    }

    pub fn dof(&self, vertex: usize, component: usize) -> usize {
        debug_assert!(component < self.components());
        vertex * self.components() + component
    }

    pub fn vertex_of(&self, dof: usize) -> usize {
        dof / self.components()
    }

    pub fn component_of(&self, dof: usize) -> usize {
        dof % self.components()
    }

    /// Local-to-global table of a cell; local index `k * components + c`.
    pub fn cell_dofs(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let nc = self.components();
        self.cell_vertices[cell]
            .iter()
            .flat_map(move |&v| (0..nc).map(move |c| v * nc + c))
    }

    pub fn cell_vertices(&self, cell: usize) -> [usize; 4] {
        self.cell_vertices[cell]
    }

    /// Boundary dofs on one side, optionally restricted to one component.
    pub fn boundary_dofs(&self, side: Side, component: Option<usize>) -> Vec<usize> {
        let idx = match side {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        };
        let nc = self.components();
        self.boundary[idx]
            .iter()
            .flat_map(|&v| (0..nc).filter(move |&c| component.is_none_or(|k| k == c)).map(move |c| v * nc + c))
            .collect()
    }

    pub fn hanging_vertices(&self) -> &BTreeMap<usize, [usize; 2]> {
        &self.hanging
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Free,
    Fixed(f64),
    Hanging,
}

/// Constraint set of one field: Dirichlet values and hanging-vertex
/// interpolation, with hanging rows flattened onto unconstrained or fixed dofs.
#[derive(Debug, Clone)]
pub struct Constraints {
    status: Vec<Status>,
    expansion: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl Constraints {
    /// `dirichlet` lists `(dof, value)` pairs; a dof listed twice keeps the last value.
    pub fn new(dofs: &DofMap, dirichlet: &[(usize, f64)]) -> Self {
        let n = dofs.n_dofs();
        let mut status = vec![Status::Free; n];
        for &(d, value) in dirichlet {
            status[d] = Status::Fixed(value);
        }
        let nc = dofs.components();
        let mut direct: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
        for (&h, &[p, q]) in dofs.hanging_vertices() {
            for c in 0..nc {
                let d = h * nc + c;
                if status[d] == Status::Free {
                    status[d] = Status::Hanging;
                    direct.insert(d, [p * nc + c, q * nc + c]);
                }
            }
        }
        let mut expansion = BTreeMap::new();
        for &d in direct.keys() {
            let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
            let mut stack = vec![(d, 1.0)];
            while let Some((k, w)) = stack.pop() {
                match direct.get(&k) {
                    Some(&[p, q]) if k == d || status[k] == Status::Hanging => {
                        stack.push((p, 0.5 * w));
                        stack.push((q, 0.5 * w));
                    }
                    _ => *terms.entry(k).or_insert(0.0) += w,
                }
            }
            expansion.insert(d, terms.into_iter().collect());
        }
        Constraints { status, expansion }
    }

    /// Hanging-vertex constraints only.
    pub fn hanging_only(dofs: &DofMap) -> Self {
        Self::new(dofs, &[])
    }

    /// Same structure with every Dirichlet value set to zero (for Newton
    /// increments).
    pub fn homogeneous(&self) -> Self {
        Constraints {
            status: self
                .status
                .iter()
                .map(|s| match s {
                    Status::Fixed(_) => Status::Fixed(0.0),
                    other => *other,
                })
                .collect(),
            expansion: self.expansion.clone(),
        }
    }

    /// Same structure with every Dirichlet value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Constraints {
            status: self
                .status
                .iter()
                .map(|s| match s {
                    Status::Fixed(v) => Status::Fixed(factor * v),
                    other => *other,
                })
                .collect(),
            expansion: self.expansion.clone(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.status.len()
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.status[dof] == Status::Free
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        matches!(self.status[dof], Status::Fixed(_))
    }

    pub fn is_hanging(&self, dof: usize) -> bool {
        self.status[dof] == Status::Hanging
    }

    pub fn fixed_value(&self, dof: usize) -> Option<f64> {
        match self.status[dof] {
            Status::Fixed(v) => Some(v),
            _ => None,
        }
    }

    pub fn n_free(&self) -> usize {
        self.status.iter().filter(|s| **s == Status::Free).count()
    }

    /// Flattened interpolation weights of a hanging dof.
    pub fn hanging_terms(&self, dof: usize) -> Option<&[(usize, f64)]> {
        self.expansion.get(&dof).map(Vec::as_slice)
    }

    /// Calls `f(target, weight)` for every unconstrained-or-fixed dof that
    /// `dof` contributes to.
    pub fn for_each_target(&self, dof: usize, mut f: impl FnMut(usize, f64)) {
        match self.expansion.get(&dof) {
            Some(terms) => terms.iter().for_each(|&(t, w)| f(t, w)),
            None => f(dof, 1.0),
        }
    }

    /// Writes Dirichlet values and hanging interpolants into `x`.
    pub fn distribute(&self, x: &mut [f64]) {
        for (d, s) in self.status.iter().enumerate() {
            if let Status::Fixed(v) = s {
                x[d] = *v;
            }
        }
        self.distribute_hanging(x);
    }

    /// Writes only the hanging interpolants into `x`.
    pub fn distribute_hanging(&self, x: &mut [f64]) {
        for (&d, terms) in &self.expansion {
            x[d] = terms.iter().map(|&(t, w)| w * x[t]).sum();
        }
    }

    /// Zeroes every constrained entry (fixed and hanging rows).
    pub fn zero_constrained(&self, r: &mut [f64]) {
        for (d, s) in self.status.iter().enumerate() {
            if *s != Status::Free {
                r[d] = 0.0;
            }
        }
    }
}
