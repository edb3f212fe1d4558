//! P1 finite elements on the fine mesh and piecewise-constant controls.
//!
//! State-space vectors are stored over the interior fine nodes only
//! ([`DofMap`]); homogeneous Dirichlet values are implicit. Control vectors
//! hold one value per triangle of the fine or coarse mesh.

use std::fmt;
use std::sync::Arc;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SparseOperator};
use crate::mesh::MeshHierarchy;

/// Numbering of the interior fine nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    nodes: Vec<usize>,
    index: Vec<usize>,
}

impl DofMap {
    pub fn interior(mesh: &MeshHierarchy) -> Self {
        let mut index = vec![usize::MAX; mesh.fine.n_nodes()];
        let mut nodes = Vec::new();
        for (v, &b) in mesh.boundary.iter().enumerate() {
            if !b {
                index[v] = nodes.len();
                nodes.push(v);
            }
        }
        Self { nodes, index }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fine node ids, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.index.len()
    }

    /// Interior index of fine node `v`.
    pub fn dof(&self, v: usize) -> Option<usize> {
        let k = self.index[v];
        (k != usize::MAX).then_some(k)
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.index.len());
        self.nodes.iter().map(|&v| full[v]).collect()
    }

    /// Pads an interior vector with zero boundary values.
    pub fn extend(&self, interior: &[f64]) -> Vec<f64> {
        assert_eq!(interior.len(), self.nodes.len());
        let mut full = vec![0.0; self.index.len()];
        for (&v, &x) in self.nodes.iter().zip(interior) {
            full[v] = x;
        }
        full
    }
}

/// The control-to-state operator `B`.
#[derive(Clone, Default)]
pub enum ControlOperator {
    #[default]
    Identity,
    /// Pointwise multiplication by a bounded `c(x)`.
    Multiplier(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ControlOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlOperator::Identity => f.write_str("Identity"),
            ControlOperator::Multiplier(_) => f.write_str("Multiplier"),
        }
    }
}

impl ControlOperator {
    fn weight(&self, p: [f64; 2]) -> f64 {
        match self {
            ControlOperator::Identity => 1.0,
            ControlOperator::Multiplier(c) => c(p[0], p[1]),
        }
    }
}

/// Which triangulation carries piecewise-constant controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlLevel {
    Fine,
    Coarse,
}

/// P1 stiffness on one triangle for a constant coefficient.
pub fn element_stiffness(v: [[f64; 2]; 3], a: f64) -> [[f64; 3]; 3] {
    let area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let b = [v[1][1] - v[2][1], v[2][1] - v[0][1], v[0][1] - v[1][1]];
    let c = [v[2][0] - v[1][0], v[0][0] - v[2][0], v[1][0] - v[0][0]];
    let scale = a / (2.0 * area2.abs());
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = scale * (b[i] * b[j] + c[i] * c[j]);
        }
    }
    k
}

/// P1 mass on a triangle of the given area.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Barycenter samples of `a` on every fine triangle.
pub fn sample_coefficient(mesh: &MeshHierarchy, coeff: &CoefficientField) -> Result<Vec<f64>> {
    (0..mesh.fine.n_triangles())
        .map(|t| coeff.sample(mesh.fine.barycenter(t)))
        .collect()
}

fn assemble_nodal(
    mesh: &MeshHierarchy,
    element: impl Fn(usize) -> [[f64; 3]; 3],
) -> SparseOperator {
    let fine = &mesh.fine;
    let mut triplets = Vec::with_capacity(9 * fine.n_triangles());
    for (t, tri) in fine.triangles.iter().enumerate() {
        let k = element(t);
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    let n = fine.n_nodes();
    SparseOperator::from_triplets(n, n, &triplets)
}

/// Stiffness over all fine nodes, before boundary elimination.
pub fn assemble_stiffness_full(mesh: &MeshHierarchy, coeff: &CoefficientField) -> Result<SparseOperator> {
    let a = sample_coefficient(mesh, coeff)?;
    Ok(assemble_nodal(mesh, |t| element_stiffness(mesh.fine.vertices(t), a[t])))
}

/// Stiffness with Dirichlet rows and columns removed.
pub fn assemble_stiffness(mesh: &MeshHierarchy, coeff: &CoefficientField) -> Result<SparseOperator> {
    let dofs = DofMap::interior(mesh);
    let full = assemble_stiffness_full(mesh, coeff)?;
    Ok(full.submatrix(dofs.nodes(), dofs.nodes()))
}

pub fn assemble_mass_full(mesh: &MeshHierarchy) -> SparseOperator {
    assemble_nodal(mesh, |t| element_mass(mesh.fine.area(t)))
}

pub fn assemble_mass(mesh: &MeshHierarchy) -> SparseOperator {
    let dofs = DofMap::interior(mesh);
    assemble_mass_full(mesh).submatrix(dofs.nodes(), dofs.nodes())
}

/// Cell areas of the control triangulation.
pub fn control_areas(mesh: &MeshHierarchy, level: ControlLevel) -> Vec<f64> {
    let tri = match level {
        ControlLevel::Fine => &mesh.fine,
        ControlLevel::Coarse => &mesh.coarse,
    };
    (0..tri.n_triangles()).map(|t| tri.area(t)).collect()
}

/// Mass matrix of piecewise constants: diagonal with cell areas.
pub fn assemble_control_mass(mesh: &MeshHierarchy, level: ControlLevel) -> SparseOperator {
    SparseOperator::diagonal(&control_areas(mesh, level))
}

/// Load vector `∫ f φ_k` over interior nodes, one-point quadrature per triangle.
pub fn assemble_load(mesh: &MeshHierarchy, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let dofs = DofMap::interior(mesh);
    let mut load = vec![0.0; dofs.len()];
    for (t, tri) in mesh.fine.triangles.iter().enumerate() {
        let [x, y] = mesh.fine.barycenter(t);
        let w = f(x, y) * mesh.fine.area(t) / 3.0;
        for &v in tri {
            if let Some(k) = dofs.dof(v) {
                load[k] += w;
            }
        }
    }
    load
}

/// `(g_h, φ_k)` for the nodal interpolant `g_h` of `g`, boundary values included.
pub fn assemble_mass_load(mesh: &MeshHierarchy, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let dofs = DofMap::interior(mesh);
    let nodal: Vec<f64> = mesh.fine.nodes.iter().map(|&[x, y]| g(x, y)).collect();
    let full = assemble_mass_full(mesh).mul_vec(&nodal);
    dofs.restrict(&full)
}

/// Coupling `D_kt = ∫_t B 1_t φ_k` between interior nodes and fine control cells.
pub fn assemble_control_coupling(mesh: &MeshHierarchy, b: &ControlOperator) -> SparseOperator {
    let dofs = DofMap::interior(mesh);
    let mut triplets = Vec::with_capacity(3 * mesh.fine.n_triangles());
    for (t, tri) in mesh.fine.triangles.iter().enumerate() {
        let w = b.weight(mesh.fine.barycenter(t)) * mesh.fine.area(t) / 3.0;
        for &v in tri {
            if let Some(k) = dofs.dof(v) {
                triplets.push((k, t, w));
            }
        }
    }
    SparseOperator::from_triplets(dofs.len(), mesh.fine.n_triangles(), &triplets)
}

/// Fine-cell to coarse-cell restriction `R` (`n_fine_cells x n_coarse_cells`, entries 1).
pub fn cell_prolongation(mesh: &MeshHierarchy) -> SparseOperator {
    let rows = mesh.parent.iter().map(|&p| vec![(p, 1.0)]).collect();
    SparseOperator::from_rows(mesh.coarse.n_triangles(), rows)
}

/// Coarse piecewise constant evaluated on fine cells.
pub fn prolong_cells(mesh: &MeshHierarchy, coarse: &[f64]) -> Vec<f64> {
    assert_eq!(coarse.len(), mesh.coarse.n_triangles());
    mesh.parent.iter().map(|&p| coarse[p]).collect()
}

/// Area-weighted average of fine cell values over each coarse cell.
pub fn project_average(mesh: &MeshHierarchy, fine: &[f64]) -> Result<Vec<f64>> {
    if fine.len() != mesh.fine.n_triangles() {
        return Err(Error::NotNested(format!(
            "{} values for {} fine cells",
            fine.len(),
            mesh.fine.n_triangles()
        )));
    }
    Ok((0..mesh.coarse.n_triangles())
        .map(|c| {
            let kids = mesh.children(c);
            let (num, den) = kids.iter().fold((0.0, 0.0), |(n, d), &t| {
                let a = mesh.fine.area(t);
                (n + a * fine[t], d + a)
            });
            num / den
        })
        .collect())
}

/// Solves the Dirichlet problem `A z = b` on interior nodes.
pub fn solve_dirichlet(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(Cholesky::new(a)?.solve(b))
}

/// Relative errors against a reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

/// Matrices defining the `L²` and full `H¹` norms on interior nodes.
#[derive(Clone, Debug)]
pub struct NormOperators {
    pub mass: SparseOperator,
    /// Unweighted (`a ≡ 1`) stiffness.
    pub laplacian: SparseOperator,
}

impl NormOperators {
    pub fn new(mesh: &MeshHierarchy) -> Self {
        let one = crate::coeff::constant(1.0).expect("positive constant");
        Self {
            mass: assemble_mass(mesh),
            laplacian: assemble_stiffness(mesh, &one).expect("constant coefficient"),
        }
    }

    pub fn l2(&self, z: &[f64]) -> f64 {
        self.mass.quadratic_form(z).max(0.0).sqrt()
    }

    /// Full `H¹` norm, `(‖z‖² + |z|₁²)^{1/2}`.
    pub fn h1(&self, z: &[f64]) -> f64 {
        (self.mass.quadratic_form(z) + self.laplacian.quadratic_form(z))
            .max(0.0)
            .sqrt()
    }
}

pub fn error_norms(z_ref: &[f64], z: &[f64], norms: &NormOperators) -> Result<ErrorNorms> {
    if z_ref.len() != z.len() || z.len() != norms.mass.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {} for {} dofs",
            z_ref.len(),
            z.len(),
            norms.mass.nrows()
        )));
    }
    let e: Vec<f64> = z_ref.iter().zip(z).map(|(r, v)| v - r).collect();
    let (r_l2, r_h1) = (norms.l2(z_ref), norms.h1(z_ref));
    let r_inf = crate::linalg::norm_inf(z_ref);
    if r_l2 == 0.0 || r_h1 == 0.0 || r_inf == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(ErrorNorms {
        l2: norms.l2(&e) / r_l2,
        h1: norms.h1(&e) / r_h1,
        linf: crate::linalg::norm_inf(&e) / r_inf,
    })
}

/// Relative `L²` error of a piecewise constant over cells of the given areas.
pub fn cell_relative_l2(reference: &[f64], value: &[f64], areas: &[f64]) -> Result<f64> {
    if reference.len() != areas.len() || value.len() != areas.len() {
        return Err(Error::DimensionMismatch("cell vectors".into()));
    }
    let num: f64 = reference
        .iter()
        .zip(value)
        .zip(areas)
        .map(|((r, v), a)| a * (v - r).powi(2))
        .sum();
    let den: f64 = reference.iter().zip(areas).map(|(r, a)| a * r * r).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Fine-level operators shared by the basis construction and the control solver.
#[derive(Clone, Debug)]
pub struct FineOperators {
    pub dofs: DofMap,
    /// `a`-weighted stiffness on interior nodes.
    pub stiffness: SparseOperator,
    pub norms: NormOperators,
    /// Fine control cell areas (the diagonal of the fine control mass).
    pub control_areas: Vec<f64>,
    /// Interior nodes x fine control cells.
    pub coupling: SparseOperator,
    /// Per-triangle coefficient samples.
    pub coefficient: Vec<f64>,
}

impl FineOperators {
    pub fn assemble(mesh: &MeshHierarchy, coeff: &CoefficientField, b: &ControlOperator) -> Result<Self> {
        let dofs = DofMap::interior(mesh);
        let coefficient = sample_coefficient(mesh, coeff)?;
        let full = assemble_nodal(mesh, |t| element_stiffness(mesh.fine.vertices(t), coefficient[t]));
        Ok(Self {
            stiffness: full.submatrix(dofs.nodes(), dofs.nodes()),
            norms: NormOperators::new(mesh),
            control_areas: control_areas(mesh, ControlLevel::Fine),
            coupling: assemble_control_coupling(mesh, b),
            coefficient,
            dofs,
        })
    }

    pub fn mass(&self) -> &SparseOperator {
        &self.norms.mass
    }
}
