//! Nested criss-cross triangulations of a rectangle and coarse-layer patches.
//!
//! The coarse mesh splits each of the `nx x ny` cells along its `(1,1)`
//! diagonal. Midpoint (red) refinement of that pattern reproduces the same
//! pattern at half the spacing, so level `J` is the criss-cross mesh with
//! `2^J` times as many cells per axis. Both levels are generated directly
//! from that structure, which fixes the ordering conventions:
//!
//! * nodes are row-major, bottom row first;
//! * triangles are ordered by cell (row-major), then lower (below the
//!   diagonal) before upper.

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
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

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// A single-level triangulation.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Criss-cross mesh of `rect` with `nx x ny` cells.
    fn criss_cross(rect: Rect, nx: usize, ny: usize) -> Self {
        let dx = rect.width() / nx as f64;
        let dy = rect.height() / ny as f64;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = if j == ny { rect.y1 } else { rect.y0 + j as f64 * dy };
            for i in 0..=nx {
                let x = if i == nx { rect.x1 } else { rect.x0 + i as f64 * dx };
                nodes.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self { nodes, triangles }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.vertices(t);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn barycenter(&self, t: usize) -> [f64; 2] {
        let [p, q, r] = self.vertices(t);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    /// Plain-text dump: counts, node coordinates, then vertex triples.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.n_nodes(), self.n_triangles())?;
        for [x, y] in &self.nodes {
            writeln!(out, "{x:.17e} {y:.17e}")?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(out, "{a} {b} {c}")?;
        }
        Ok(())
    }
}

/// Coarse mesh `T_H` and its `J`-fold refinement `T_h`.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    domain: Rect,
    nc: usize,
    levels: u32,
    coarse_cells: (usize, usize),
    pub coarse: TriMesh,
    pub fine: TriMesh,
    /// Fine triangle -> coarse ancestor.
    pub parent: Vec<usize>,
    /// Coarse node -> coincident fine node.
    pub coarse_to_fine_node: Vec<usize>,
    /// Fine nodes on the domain boundary.
    pub boundary: Vec<bool>,
    pub coarse_boundary: Vec<bool>,
    children: Vec<Vec<usize>>,
    coarse_node_triangles: Vec<Vec<usize>>,
    fine_node_triangles: Vec<Vec<usize>>,
}

impl MeshHierarchy {
    /// Builds the hierarchy. `nc` counts cells along the shorter side; the
    /// longer side gets `round(aspect * nc)` cells.
    pub fn build(domain: Rect, nc: usize, levels: u32) -> Result<Self> {
        if nc == 0 {
            return Err(Error::InvalidMesh("Nc must be at least 1".into()));
        }
        let (w, ht) = (domain.width(), domain.height());
        if !(w > 0.0 && ht > 0.0 && w.is_finite() && ht.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "degenerate rectangle {w} x {ht}"
            )));
        }
        if levels > 12 {
            return Err(Error::InvalidMesh(format!("J = {levels} is too deep")));
        }
        let (nx, ny) = if w >= ht {
            (((w / ht) * nc as f64).round().max(1.0) as usize, nc)
        } else {
            (nc, ((ht / w) * nc as f64).round().max(1.0) as usize)
        };
        let r = 1usize << levels;
        let coarse = TriMesh::criss_cross(domain, nx, ny);
        let fine = TriMesh::criss_cross(domain, nx * r, ny * r);
        let (fnx, fny) = (nx * r, ny * r);

        let mut parent = Vec::with_capacity(fine.n_triangles());
        for fj in 0..fny {
            for fi in 0..fnx {
                let cell = (fj / r) * nx + fi / r;
                let (a, b) = (fi % r, fj % r);
                for kind in 0..2 {
                    let coarse_kind = match a.cmp(&b) {
                        std::cmp::Ordering::Greater => 0,
                        std::cmp::Ordering::Less => 1,
                        std::cmp::Ordering::Equal => kind,
                    };
                    parent.push(2 * cell + coarse_kind);
                }
            }
        }

        let coarse_to_fine_node = (0..=ny)
            .flat_map(|j| (0..=nx).map(move |i| (j * r) * (fnx + 1) + i * r))
            .collect();
        let on_edge = |i: usize, j: usize, mx: usize, my: usize| i == 0 || j == 0 || i == mx || j == my;
        let boundary = (0..=fny)
            .flat_map(|j| (0..=fnx).map(move |i| on_edge(i, j, fnx, fny)))
            .collect();
        let coarse_boundary = (0..=ny)
            .flat_map(|j| (0..=nx).map(move |i| on_edge(i, j, nx, ny)))
            .collect();

        let mut children = vec![Vec::with_capacity(r * r); coarse.n_triangles()];
        for (t, &p) in parent.iter().enumerate() {
            children[p].push(t);
        }
        let incidence = |mesh: &TriMesh| {
            let mut inc = vec![Vec::new(); mesh.n_nodes()];
            for (t, tri) in mesh.triangles.iter().enumerate() {
                for &v in tri {
                    inc[v].push(t);
                }
            }
            inc
        };
        let coarse_node_triangles = incidence(&coarse);
        let fine_node_triangles = incidence(&fine);

        Ok(Self {
            domain,
            nc,
            levels,
            coarse_cells: (nx, ny),
            coarse,
            fine,
            parent,
            coarse_to_fine_node,
            boundary,
            coarse_boundary,
            children,
            coarse_node_triangles,
            fine_node_triangles,
        })
    }

    /// Unit square hierarchy.
    pub fn unit_square(nc: usize, levels: u32) -> Result<Self> {
        Self::build(Rect::UNIT, nc, levels)
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Coarse cell counts `(nx, ny)`.
    pub fn coarse_cells(&self) -> (usize, usize) {
        self.coarse_cells
    }

    /// Fine cell counts `(nx, ny)`.
    pub fn fine_cells(&self) -> (usize, usize) {
        let r = 1usize << self.levels;
        (self.coarse_cells.0 * r, self.coarse_cells.1 * r)
    }

    /// Coarse mesh size (longest cell leg).
    pub fn coarse_h(&self) -> f64 {
        let (nx, ny) = self.coarse_cells;
        (self.domain.width() / nx as f64).max(self.domain.height() / ny as f64)
    }

    /// Fine mesh size, `H / 2^J`.
    pub fn fine_h(&self) -> f64 {
        self.coarse_h() / (1u64 << self.levels) as f64
    }

    pub fn children(&self, coarse_triangle: usize) -> &[usize] {
        &self.children[coarse_triangle]
    }

    pub fn coarse_node_triangles(&self, node: usize) -> &[usize] {
        &self.coarse_node_triangles[node]
    }

    pub fn fine_node_triangles(&self, node: usize) -> &[usize] {
        &self.fine_node_triangles[node]
    }

    /// Coarse nodes off the boundary, ascending.
    pub fn interior_coarse_nodes(&self) -> Vec<usize> {
        (0..self.coarse.n_nodes())
            .filter(|&v| !self.coarse_boundary[v])
            .collect()
    }

    /// Coarse node closest to `p` (ties broken by index).
    pub fn nearest_coarse_node(&self, p: [f64; 2], interior_only: bool) -> Option<usize> {
        (0..self.coarse.n_nodes())
            .filter(|&v| !interior_only || !self.coarse_boundary[v])
            .min_by(|&a, &b| {
                let da = dist2(self.coarse.nodes[a], p);
                let db = dist2(self.coarse.nodes[b], p);
                da.total_cmp(&db)
            })
    }

    /// Coarse triangle whose barycenter is closest to `p`.
    pub fn nearest_coarse_triangle(&self, p: [f64; 2]) -> usize {
        (0..self.coarse.n_triangles())
            .min_by(|&a, &b| {
                dist2(self.coarse.barycenter(a), p).total_cmp(&dist2(self.coarse.barycenter(b), p))
            })
            .expect("mesh has triangles")
    }

    /// Adds every coarse triangle that shares at least a vertex with `set`.
    fn grow(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        for &t in set {
            for &v in &self.coarse.triangles[t] {
                out.extend(self.coarse_node_triangles[v].iter().copied());
            }
        }
        out
    }

    /// Patch `Ω_i^l`: triangles incident to coarse node `node`, grown by `l - 1` layers.
    pub fn node_patch(&self, node: usize, layers: usize) -> Result<PatchDescriptor> {
        if node >= self.coarse.n_nodes() {
            return Err(Error::IndexOutOfRange {
                index: node,
                len: self.coarse.n_nodes(),
            });
        }
        if self.coarse_boundary[node] {
            return Err(Error::BoundaryCenter(node));
        }
        if layers == 0 {
            return Err(Error::InvalidMesh("patch needs at least one layer".into()));
        }
        let mut set: BTreeSet<usize> = self.coarse_node_triangles[node].iter().copied().collect();
        for _ in 1..layers {
            set = self.grow(&set);
        }
        Ok(self.describe(PatchCenter::Node(node), layers, set))
    }

    /// Patch `Ω̄_i^l`: triangle `t` and its vertex neighbours, grown by `l - 1` layers.
    pub fn triangle_patch(&self, t: usize, layers: usize) -> Result<PatchDescriptor> {
        if t >= self.coarse.n_triangles() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.coarse.n_triangles(),
            });
        }
        if layers == 0 {
            return Err(Error::InvalidMesh("patch needs at least one layer".into()));
        }
        let mut set = BTreeSet::from([t]);
        for _ in 0..layers {
            set = self.grow(&set);
        }
        Ok(self.describe(PatchCenter::Triangle(t), layers, set))
    }

    /// Patch covering the whole domain, used for global basis functions.
    pub fn full_patch(&self, center: PatchCenter) -> PatchDescriptor {
        self.describe(center, usize::MAX, (0..self.coarse.n_triangles()).collect())
    }

    fn describe(&self, center: PatchCenter, layers: usize, set: BTreeSet<usize>) -> PatchDescriptor {
        let mut member = vec![false; self.coarse.n_triangles()];
        for &t in &set {
            member[t] = true;
        }
        let mut candidates = BTreeSet::new();
        for &t in &set {
            for &ft in &self.children[t] {
                candidates.extend(self.fine.triangles[ft].iter().copied());
            }
        }
        let interior_fine_dofs = candidates
            .into_iter()
            .filter(|&v| {
                !self.boundary[v]
                    && self.fine_node_triangles[v]
                        .iter()
                        .all(|&ft| member[self.parent[ft]])
            })
            .collect();
        PatchDescriptor {
            center,
            layers,
            triangles: set.into_iter().collect(),
            interior_fine_dofs,
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchCenter {
    Node(usize),
    Triangle(usize),
}

/// A union of coarse triangles around a basis center.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchDescriptor {
    pub center: PatchCenter,
    /// Layer count; `usize::MAX` marks the whole domain.
    pub layers: usize,
    /// Coarse triangles, ascending.
    pub triangles: Vec<usize>,
    /// Fine nodes strictly inside the patch and off `∂Ω`, ascending.
    pub interior_fine_dofs: Vec<usize>,
}

impl PatchDescriptor {
    pub fn contains_triangle(&self, t: usize) -> bool {
        self.triangles.binary_search(&t).is_ok()
    }
}
