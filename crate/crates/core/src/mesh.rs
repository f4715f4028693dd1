//! Quadtree meshes of axis-aligned rectangles.
//!
//! Only leaves are stored; the hierarchy is implied by [`CellKey`]. After every
//! refinement the tree is 2:1 balanced across edges and the hanging vertices
//! (midpoints of a coarse edge shared with two finer cells) receive a
//! constraint `v = (p0 + p1) / 2` towards the coarse edge's end points.
//!
//! A horizontal slit can be cut into the mesh: vertices on the slit (except
//! the tip) are duplicated so that cells above and below it do not share
//! degrees of freedom.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Deepest level any mesh may reach.
pub const MAX_LEVEL: u32 = 24;

/// Position of a cell in the implied tree: `level` and its integer index in
/// the uniform grid of that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub level: u32,
    pub i: u64,
    pub j: u64,
}

impl CellKey {
    pub fn parent(&self) -> Option<CellKey> {
        (self.level > 0).then(|| CellKey {
            level: self.level - 1,
            i: self.i / 2,
            j: self.j / 2,
        })
    }

    pub fn children(&self) -> [CellKey; 4] {
        let (l, i, j) = (self.level + 1, 2 * self.i, 2 * self.j);
        [
            CellKey { level: l, i, j },
            CellKey { level: l, i: i + 1, j },
            CellKey { level: l, i, j: j + 1 },
            CellKey { level: l, i: i + 1, j: j + 1 },
        ]
    }
}

/// Edge directions of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    fn bit(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
            Side::Bottom => 4,
            Side::Top => 8,
        }
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Horizontal cut at height `y` from the tip `x_tip` to `x_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slit {
    pub y: f64,
    pub x_tip: f64,
    pub x_end: f64,
}

/// What a refinement marker sees of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellInfo {
    pub centroid: [f64; 2],
    pub size: [f64; 2],
    pub level: u32,
}

impl CellInfo {
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        (p[0] - self.centroid[0]).abs() <= 0.5 * self.size[0] + tol
            && (p[1] - self.centroid[1]).abs() <= 0.5 * self.size[1] + tol
    }
}

/// An active (leaf) cell. Vertices are counter-clockwise from the lower-left
/// corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub key: CellKey,
    pub vertices: [usize; 4],
    pub origin: [f64; 2],
    pub size: [f64; 2],
}

impl Cell {
    pub fn centroid(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.size[0],
            self.origin[1] + 0.5 * self.size[1],
        ]
    }

    pub fn area(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    pub fn info(&self) -> CellInfo {
        CellInfo {
            centroid: self.centroid(),
            size: self.size,
            level: self.key.level,
        }
    }

    /// Maps a reference point in `[0,1]²` to physical coordinates.
    pub fn map(&self, s: f64, t: f64) -> [f64; 2] {
        [
            self.origin[0] + s * self.size[0],
            self.origin[1] + t * self.size[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SlitGrid {
    j: u64,
    i_tip: u64,
    i_end: u64,
}

/// 2:1-balanced quadtree mesh with hanging-vertex constraints.
#[derive(Debug, Clone)]
pub struct QuadMesh {
    domain: Rect,
    root: [u64; 2],
    slit: Option<Slit>,
    leaves: BTreeSet<CellKey>,
    cells: Vec<Cell>,
    vertices: Vec<[f64; 2]>,
    boundary: Vec<u8>,
    constraints: BTreeMap<usize, [usize; 2]>,
    lookup: HashMap<CellKey, usize>,
    max_level: u32,
}

impl PartialEq for QuadMesh {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.root == other.root
            && self.slit == other.slit
            && self.leaves == other.leaves
    }
}

impl QuadMesh {
    /// A single cell covering `[0,1]²`.
    pub fn unit_square() -> Self {
        Self::rectangle(Rect::unit(), 1, 1)
    }

    /// `nx x ny` root cells covering `domain`.
    pub fn rectangle(domain: Rect, nx: u64, ny: u64) -> Self {
        assert!(nx > 0 && ny > 0, "need at least one root cell");
        assert!(domain.width() > 0.0 && domain.height() > 0.0);
        let leaves = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| CellKey { level: 0, i, j }))
            .collect();
        Self::from_leaves(domain, [nx, ny], None, leaves)
    }

    /// Cuts a horizontal slit into the mesh. Cells straddling the slit are
    /// refined until the slit runs along cell edges.
    pub fn with_slit(&self, slit: Slit) -> Result<Self> {
        let d = self.domain;
        if !(slit.y > d.y0 && slit.y < d.y1) || !(slit.x_tip < slit.x_end) {
            return Err(Error::Mesh(format!("slit {slit:?} is not inside {d:?}")));
        }
        if slit.x_tip < d.x0 || slit.x_end > d.x1 {
            return Err(Error::Mesh(format!("slit {slit:?} leaves the domain {d:?}")));
        }
        let representable = |v: f64, lo: f64, len: f64, n: u64| {
            let scaled = (v - lo) / len * (n << MAX_LEVEL) as f64;
            (scaled - scaled.round()).abs() < 1e-6
        };
        if !representable(slit.y, d.y0, d.height(), self.root[1])
            || !representable(slit.x_tip, d.x0, d.width(), self.root[0])
            || !representable(slit.x_end, d.x0, d.width(), self.root[0])
        {
            return Err(Error::Mesh(format!(
                "slit {slit:?} does not lie on a dyadic grid line"
            )));
        }
        Ok(Self::from_leaves(
            self.domain,
            self.root,
            Some(slit),
            self.leaves.clone(),
        ))
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn slit(&self) -> Option<Slit> {
        self.slit
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Hanging vertex -> the two end points of the coarse edge it sits on.
    pub fn constraints(&self) -> &BTreeMap<usize, [usize; 2]> {
        &self.constraints
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Side length of the smallest active cell.
    pub fn h_min(&self) -> f64 {
        let n = 1u64 << self.max_level;
        (self.domain.width() / (self.root[0] * n) as f64)
            .min(self.domain.height() / (self.root[1] * n) as f64)
    }

    pub fn is_on_boundary(&self, vertex: usize, side: Side) -> bool {
        self.boundary[vertex] & side.bit() != 0
    }

    pub fn boundary_vertices(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(move |&v| self.is_on_boundary(v, side))
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(Cell::area).sum()
    }

    /// Splits every leaf `times` times.
    pub fn refine_global(&self, times: u32) -> QuadMesh {
        let mut leaves = self.leaves.clone();
        for _ in 0..times {
            leaves = leaves.iter().flat_map(|k| k.children()).collect();
        }
        self.rebuild(leaves)
    }

    /// Refines every leaf selected by `marker` `levels` times (the
    /// descendants of a marked leaf are refined again on later passes),
    /// restoring 2:1 balance after each pass.
    pub fn refine_where<F>(&self, marker: F, levels: u32) -> QuadMesh
    where
        F: Fn(&CellInfo) -> bool,
    {
        let mut leaves = self.leaves.clone();
        let mut current: BTreeSet<CellKey> = self
            .cells
            .iter()
            .filter(|c| marker(&c.info()))
            .map(|c| c.key)
            .collect();
        for _ in 0..levels {
            if current.is_empty() {
                break;
            }
            let mut next = BTreeSet::new();
            for key in &current {
                if leaves.remove(key) {
                    for child in key.children() {
                        leaves.insert(child);
                        next.insert(child);
                    }
                }
            }
            self.balance(&mut leaves);
            next.retain(|k| leaves.contains(k));
            current = next;
        }
        self.rebuild(leaves)
    }

    /// Index of the leaf containing `p`, if `p` is inside the domain.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let d = self.domain;
        if p[0] < d.x0 || p[0] > d.x1 || p[1] < d.y0 || p[1] > d.y1 {
            return None;
        }
        let n = 1u64 << self.max_level;
        let nx = self.root[0] * n;
        let ny = self.root[1] * n;
        let fx = ((p[0] - d.x0) / d.width() * nx as f64).floor() as i64;
        let fy = ((p[1] - d.y0) / d.height() * ny as f64).floor() as i64;
        let mut key = CellKey {
            level: self.max_level,
            i: fx.clamp(0, nx as i64 - 1) as u64,
            j: fy.clamp(0, ny as i64 - 1) as u64,
        };
        loop {
            if let Some(&idx) = self.lookup.get(&key) {
                return Some(idx);
            }
            key = key.parent()?;
        }
    }

    fn rebuild(&self, mut leaves: BTreeSet<CellKey>) -> QuadMesh {
        self.balance(&mut leaves);
        Self::from_leaves(self.domain, self.root, self.slit, leaves)
    }

    fn grid_size(&self, level: u32) -> [u64; 2] {
        [self.root[0] << level, self.root[1] << level]
    }

    fn neighbor_key(&self, key: &CellKey, side: Side) -> Option<CellKey> {
        let [nx, ny] = self.grid_size(key.level);
        let (i, j) = (key.i as i64, key.j as i64);
        let (ni, nj) = match side {
            Side::Left => (i - 1, j),
            Side::Right => (i + 1, j),
            Side::Bottom => (i, j - 1),
            Side::Top => (i, j + 1),
        };
        (ni >= 0 && nj >= 0 && (ni as u64) < nx && (nj as u64) < ny).then(|| CellKey {
            level: key.level,
            i: ni as u64,
            j: nj as u64,
        })
    }

    /// Leaf covering the region of `key` (itself or an ancestor), if any.
    fn covering_leaf(leaves: &BTreeSet<CellKey>, key: CellKey) -> Option<CellKey> {
        let mut k = key;
        loop {
            if leaves.contains(&k) {
                return Some(k);
            }
            k = k.parent()?;
        }
    }

    /// Slit position in the integer grid of `level`, or `None` when the slit
    /// does not fall on grid lines of that level.
    fn slit_grid(domain: &Rect, root: [u64; 2], slit: &Slit, level: u32) -> Option<SlitGrid> {
        let snap = |v: f64, lo: f64, len: f64, n: u64| -> Option<u64> {
            let scaled = (v - lo) / len * n as f64;
            let r = scaled.round();
            ((scaled - r).abs() < 1e-9).then_some(r as u64)
        };
        Some(SlitGrid {
            j: snap(slit.y, domain.y0, domain.height(), root[1] << level)?,
            i_tip: snap(slit.x_tip, domain.x0, domain.width(), root[0] << level)?,
            i_end: snap(slit.x_end, domain.x0, domain.width(), root[0] << level)?,
        })
    }

    /// Does the leaf cut through the slit (or its end points) rather than
    /// lying on one side of it?
    fn straddles_slit(&self, key: &CellKey) -> bool {
        let Some(slit) = self.slit else { return false };
        let d = self.domain;
        let [nx, ny] = self.grid_size(key.level);
        let (hx, hy) = (d.width() / nx as f64, d.height() / ny as f64);
        let (x0, y0) = (d.x0 + key.i as f64 * hx, d.y0 + key.j as f64 * hy);
        let (x1, y1) = (x0 + hx, y0 + hy);
        let tol = 1e-12 * d.width().max(d.height());
        let overlaps_x = x1 > slit.x_tip + tol && x0 < slit.x_end - tol;
        let cuts_y = y0 < slit.y - tol && y1 > slit.y + tol;
        let on_line = (y0 - slit.y).abs() <= tol || (y1 - slit.y).abs() <= tol;
        let spans_end = |xe: f64| x0 < xe - tol && x1 > xe + tol;
        (overlaps_x && cuts_y) || (on_line && (spans_end(slit.x_tip) || spans_end(slit.x_end)))
    }

    /// Refines until neighbouring leaves differ by at most one level and no
    /// leaf straddles the slit.
    fn balance(&self, leaves: &mut BTreeSet<CellKey>) {
        loop {
            let mut marks = BTreeSet::new();
            for key in leaves.iter() {
                if self.straddles_slit(key) {
                    marks.insert(*key);
                }
                for side in Side::ALL {
                    let Some(nk) = self.neighbor_key(key, side) else {
                        continue;
                    };
                    if let Some(cover) = Self::covering_leaf(leaves, nk) {
                        if cover.level + 1 < key.level {
                            marks.insert(cover);
                        }
                    }
                }
            }
            if marks.is_empty() {
                return;
            }
            for key in marks {
                assert!(key.level < MAX_LEVEL, "quadtree exceeds {MAX_LEVEL} levels");
                leaves.remove(&key);
                leaves.extend(key.children());
            }
        }
    }

    fn from_leaves(
        domain: Rect,
        root: [u64; 2],
        slit: Option<Slit>,
        leaves: BTreeSet<CellKey>,
    ) -> QuadMesh {
        let mut mesh = QuadMesh {
            domain,
            root,
            slit,
            leaves,
            cells: Vec::new(),
            vertices: Vec::new(),
            boundary: Vec::new(),
            constraints: BTreeMap::new(),
            lookup: HashMap::new(),
            max_level: 0,
        };
        if slit.is_some() {
            let mut leaves = std::mem::take(&mut mesh.leaves);
            mesh.balance(&mut leaves);
            mesh.leaves = leaves;
        }
        mesh.build();
        mesh
    }

    fn build(&mut self) {
        let max_level = self.leaves.iter().map(|k| k.level).max().unwrap_or(0);
        self.max_level = max_level;
        let [nxf, nyf] = self.grid_size(max_level);
        let (hx, hy) = (
            self.domain.width() / nxf as f64,
            self.domain.height() / nyf as f64,
        );
        let slit = self
            .slit
            .map(|s| Self::slit_grid(&self.domain, self.root, &s, max_level).expect("slit is aligned"));

        // corner-first ordering keeps the numbering close to row-major
        let mut order: Vec<CellKey> = self.leaves.iter().copied().collect();
        order.sort_by_key(|k| {
            let s = max_level - k.level;
            (k.j << s, k.i << s, k.level)
        });

        let mut ids: HashMap<(u64, u64, bool), usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut vertex_id = |ix: u64, iy: u64, upper: bool, vertices: &mut Vec<[f64; 2]>| {
            let on_slit = slit.is_some_and(|s| iy == s.j && ix > s.i_tip && ix <= s.i_end);
            let key = (ix, iy, upper && on_slit);
            *ids.entry(key).or_insert_with(|| {
                vertices.push([
                    self.domain.x0 + ix as f64 * hx,
                    self.domain.y0 + iy as f64 * hy,
                ]);
                vertices.len() - 1
            })
        };

        let mut cells = Vec::with_capacity(order.len());
        for key in &order {
            let s = 1u64 << (max_level - key.level);
            let (ix, iy) = (key.i * s, key.j * s);
            let upper = slit.is_some_and(|g| iy >= g.j);
            let v = [
                vertex_id(ix, iy, upper, &mut vertices),
                vertex_id(ix + s, iy, upper, &mut vertices),
                vertex_id(ix + s, iy + s, upper, &mut vertices),
                vertex_id(ix, iy + s, upper, &mut vertices),
            ];
            cells.push(Cell {
                key: *key,
                vertices: v,
                origin: [
                    self.domain.x0 + ix as f64 * hx,
                    self.domain.y0 + iy as f64 * hy,
                ],
                size: [s as f64 * hx, s as f64 * hy],
            });
        }

        let mut boundary = vec![0u8; vertices.len()];
        for (&(ix, iy, _), &id) in &ids {
            if ix == 0 {
                boundary[id] |= Side::Left.bit();
            }
            if ix == nxf {
                boundary[id] |= Side::Right.bit();
            }
            if iy == 0 {
                boundary[id] |= Side::Bottom.bit();
            }
            if iy == nyf {
                boundary[id] |= Side::Top.bit();
            }
        }

        // internal nodes of the tree, to detect refined neighbours
        let mut internal = BTreeSet::new();
        for key in &self.leaves {
            let mut k = *key;
            while let Some(p) = k.parent() {
                if !internal.insert(p) {
                    break;
                }
                k = p;
            }
        }

        let mut constraints = BTreeMap::new();
        for cell in &cells {
            let key = cell.key;
            let s = 1u64 << (max_level - key.level);
            let (ix, iy) = (key.i * s, key.j * s);
            let upper = slit.is_some_and(|g| iy >= g.j);
            for side in Side::ALL {
                let Some(nk) = self.neighbor_key(&key, side) else {
                    continue;
                };
                if !internal.contains(&nk) {
                    continue;
                }
                let (edge_y, x_lo) = match side {
                    Side::Bottom => (Some(iy), ix),
                    Side::Top => (Some(iy + s), ix),
                    _ => (None, ix),
                };
                if let (Some(g), Some(ey)) = (slit, edge_y) {
                    if ey == g.j && x_lo >= g.i_tip && x_lo + s <= g.i_end {
                        continue; // the two sides of the slit are not connected
                    }
                }
                let half = s / 2;
                let (mid, ends) = match side {
                    Side::Left => ((ix, iy + half), [cell.vertices[0], cell.vertices[3]]),
                    Side::Right => ((ix + s, iy + half), [cell.vertices[1], cell.vertices[2]]),
                    Side::Bottom => ((ix + half, iy), [cell.vertices[0], cell.vertices[1]]),
                    Side::Top => ((ix + half, iy + s), [cell.vertices[3], cell.vertices[2]]),
                };
                let on_slit = slit.is_some_and(|g| mid.1 == g.j && mid.0 > g.i_tip && mid.0 <= g.i_end);
                let id = ids[&(mid.0, mid.1, upper && on_slit)];
                constraints.insert(id, ends);
            }
        }

        self.lookup = cells.iter().enumerate().map(|(i, c)| (c.key, i)).collect();
        self.cells = cells;
        self.vertices = vertices;
        self.boundary = boundary;
        self.constraints = constraints;
    }
}
