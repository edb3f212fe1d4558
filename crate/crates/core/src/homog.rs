//! Rough polyharmonic spline coarse spaces.
//!
//! Each basis function minimizes the energy `vᵀ A v` over the fine P1 space
//! subject to `C v = e_i`, where the rows of `C` are the coarse measurements:
//! nodal values at interior coarse nodes (RPS) or averages over coarse
//! triangles (GRPS). Localized functions solve the same problem on the
//! interior nodes of a layered patch and are extended by zero.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{element_stiffness, DofMap};
use crate::linalg::{Cholesky, SaddlePointSolver, SparseOperator};
use crate::mesh::{MeshHierarchy, PatchCenter, PatchDescriptor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// Point values at interior coarse nodes.
    Rps,
    /// Averages over coarse triangles.
    Grps,
}

impl BasisKind {
    /// Coarse dimension for an `nc x nc` unit-square mesh.
    pub fn coarse_dof(self, nc: usize) -> usize {
        match self {
            BasisKind::Rps => (nc - 1) * (nc - 1),
            BasisKind::Grps => 2 * nc * nc,
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Rps => "rps",
            BasisKind::Grps => "grps",
        })
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rps" => Ok(BasisKind::Rps),
            "grps" => Ok(BasisKind::Grps),
            other => Err(Error::config("basis", format!("unknown kind {other:?} (rps|grps)"))),
        }
    }
}

/// Coarse measurement functionals.
#[derive(Clone, Debug)]
pub struct MeasurementSet {
    pub kind: BasisKind,
    /// Rows act on interior fine vectors.
    pub c: SparseOperator,
    /// Same rows acting on vectors over every fine node.
    pub c_full: SparseOperator,
    /// Measurement -> coarse node (RPS) or coarse triangle (GRPS).
    pub support: Vec<usize>,
    entity_to_measurement: Vec<usize>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Measurement attached to a coarse node (RPS) or triangle (GRPS).
    pub fn measurement_of(&self, entity: usize) -> Option<usize> {
        self.entity_to_measurement
            .get(entity)
            .copied()
            .filter(|&m| m != usize::MAX)
    }

    /// `C z` for an interior vector.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.c.mul_vec(z)
    }

    /// `C z` for a vector over all fine nodes.
    pub fn apply_full(&self, z: &[f64]) -> Vec<f64> {
        self.c_full.mul_vec(z)
    }

    /// Physical location of measurement `i`: the node, or the triangle barycenter.
    pub fn center(&self, mesh: &MeshHierarchy, i: usize) -> [f64; 2] {
        match self.kind {
            BasisKind::Rps => mesh.coarse.nodes[self.support[i]],
            BasisKind::Grps => mesh.coarse.barycenter(self.support[i]),
        }
    }

    /// Measurement whose center is nearest `p`.
    pub fn nearest(&self, mesh: &MeshHierarchy, p: [f64; 2]) -> usize {
        (0..self.len())
            .min_by(|&a, &b| {
                let da = dist2(self.center(mesh, a), p);
                let db = dist2(self.center(mesh, b), p);
                da.total_cmp(&db)
            })
            .expect("nonempty measurement set")
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Assembles `C`. GRPS rows integrate P1 hats exactly: `∫_T φ_k / |T|`.
pub fn build_measurements(mesh: &MeshHierarchy, kind: BasisKind) -> MeasurementSet {
    let dofs = DofMap::interior(mesh);
    let n_full = mesh.fine.n_nodes();
    let (support, rows_full): (Vec<usize>, Vec<Vec<(usize, f64)>>) = match kind {
        BasisKind::Rps => mesh
            .interior_coarse_nodes()
            .into_iter()
            .map(|v| (v, vec![(mesh.coarse_to_fine_node[v], 1.0)]))
            .unzip(),
        BasisKind::Grps => (0..mesh.coarse.n_triangles())
            .map(|t| {
                let area = mesh.coarse.area(t);
                let mut row: Vec<(usize, f64)> = Vec::new();
                for &ft in mesh.children(t) {
                    let w = mesh.fine.area(ft) / (3.0 * area);
                    for &v in &mesh.fine.triangles[ft] {
                        row.push((v, w));
                    }
                }
                row.sort_unstable_by_key(|&(v, _)| v);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                for (v, w) in row {
                    match merged.last_mut() {
                        Some((u, acc)) if *u == v => *acc += w,
                        _ => merged.push((v, w)),
                    }
                }
                (t, merged)
            })
            .unzip(),
    };
    let rows_interior = rows_full
        .iter()
        .map(|row| {
            row.iter()
                .filter_map(|&(v, w)| dofs.dof(v).map(|k| (k, w)))
                .collect()
        })
        .collect();
    let n_entities = match kind {
        BasisKind::Rps => mesh.coarse.n_nodes(),
        BasisKind::Grps => mesh.coarse.n_triangles(),
    };
    let mut entity_to_measurement = vec![usize::MAX; n_entities];
    for (i, &e) in support.iter().enumerate() {
        entity_to_measurement[e] = i;
    }
    MeasurementSet {
        kind,
        c: SparseOperator::from_rows(dofs.len(), rows_interior),
        c_full: SparseOperator::from_rows(n_full, rows_full),
        support,
        entity_to_measurement,
    }
}

/// A basis function stored on its support (interior dof indices, ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct BasisVector {
    pub dofs: Vec<u32>,
    pub values: Vec<f64>,
}

impl BasisVector {
    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            dofs: (0..values.len() as u32).collect(),
            values: values.to_vec(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.add_to(1.0, &mut out);
        out
    }

    pub fn add_to(&self, alpha: f64, out: &mut [f64]) {
        for (&k, &v) in self.dofs.iter().zip(&self.values) {
            out[k as usize] += alpha * v;
        }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.dofs
            .iter()
            .zip(&self.values)
            .map(|(&k, &v)| v * x[k as usize])
            .sum()
    }
}

/// A set of coarse basis functions over the interior fine dofs.
#[derive(Clone, Debug)]
pub struct CoarseBasis {
    pub kind: BasisKind,
    /// Localization layers; `None` for the global basis.
    pub layers: Option<usize>,
    pub vectors: Vec<BasisVector>,
    pub patches: Vec<PatchDescriptor>,
    n_dofs: usize,
}

impl CoarseBasis {
    /// Wraps arbitrary vectors, e.g. the fine nodal basis.
    pub fn from_vectors(kind: BasisKind, n_dofs: usize, vectors: Vec<BasisVector>, patches: Vec<PatchDescriptor>) -> Self {
        Self {
            kind,
            layers: None,
            vectors,
            patches,
            n_dofs,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn fine_dim(&self) -> usize {
        self.n_dofs
    }

    pub fn nnz(&self) -> usize {
        self.vectors.iter().map(BasisVector::nnz).sum()
    }

    pub fn dense(&self, i: usize) -> Vec<f64> {
        self.vectors[i].to_dense(self.n_dofs)
    }

    /// `Σ_i coeffs_i φ_i` on the fine interior dofs.
    pub fn prolong(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len());
        let mut out = vec![0.0; self.n_dofs];
        for (v, &c) in self.vectors.iter().zip(coeffs) {
            if c != 0.0 {
                v.add_to(c, &mut out);
            }
        }
        out
    }

    /// `Φᵀ x`.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_dofs);
        self.vectors.iter().map(|v| v.dot(x)).collect()
    }

    /// `Φ` as an `n_dofs x N` sparse matrix.
    pub fn to_operator(&self) -> SparseOperator {
        self.transpose_operator().transpose()
    }

    /// `Φᵀ` as an `N x n_dofs` sparse matrix.
    pub fn transpose_operator(&self) -> SparseOperator {
        let rows = self
            .vectors
            .iter()
            .map(|v| v.dofs.iter().map(|&k| k as usize).zip(v.values.iter().copied()).collect())
            .collect();
        SparseOperator::from_rows(self.n_dofs, rows)
    }

    /// Largest `‖C φ_i − e_i‖_∞` over the basis.
    pub fn constraint_defect(&self, meas: &MeasurementSet) -> f64 {
        let mut worst = 0.0f64;
        for (i, v) in self.vectors.iter().enumerate() {
            let cv = meas.apply(&v.to_dense(self.n_dofs));
            for (j, x) in cv.into_iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - target).abs());
            }
        }
        worst
    }
}

/// Default localization depth, `ceil(2 log2 Nc)` (at least one layer).
pub fn default_layers(nc: usize) -> usize {
    ((2.0 * (nc as f64).log2()).ceil() as usize).max(1)
}

const RHS_BLOCK: usize = 64;

/// Global basis: one saddle-point factorization, `N` right-hand sides.
pub fn compute_global_basis(mesh: &MeshHierarchy, a: &SparseOperator, meas: &MeasurementSet) -> Result<CoarseBasis> {
    let n = a.nrows();
    let m = meas.len();
    let solver = SaddlePointSolver::new(a, &meas.c)?;
    let mut vectors = Vec::with_capacity(m);
    for start in (0..m).step_by(RHS_BLOCK) {
        let end = (start + RHS_BLOCK).min(m);
        let mut rhs = Mat::<f64>::zeros(n + m, end - start);
        for i in start..end {
            rhs[(n + i, i - start)] = 1.0;
        }
        solver.solve_in_place(&mut rhs)?;
        for col in 0..end - start {
            let values: Vec<f64> = (0..n).map(|k| rhs[(k, col)]).collect();
            vectors.push(BasisVector::from_dense(&values));
        }
    }
    let patches = (0..m)
        .map(|i| mesh.full_patch(center_of(meas, i)))
        .collect();
    Ok(CoarseBasis {
        kind: meas.kind,
        layers: None,
        vectors,
        patches,
        n_dofs: n,
    })
}

/// A single global basis function (one factorization, one solve).
pub fn compute_global_basis_function(a: &SparseOperator, meas: &MeasurementSet, i: usize) -> Result<BasisVector> {
    if i >= meas.len() {
        return Err(Error::IndexOutOfRange { index: i, len: meas.len() });
    }
    let solver = SaddlePointSolver::new(a, &meas.c)?;
    let mut g = vec![0.0; meas.len()];
    g[i] = 1.0;
    let (x, _) = solver.solve(&vec![0.0; a.nrows()], &g)?;
    Ok(BasisVector::from_dense(&x))
}

fn center_of(meas: &MeasurementSet, i: usize) -> PatchCenter {
    match meas.kind {
        BasisKind::Rps => PatchCenter::Node(meas.support[i]),
        BasisKind::Grps => PatchCenter::Triangle(meas.support[i]),
    }
}

/// Patch of `layers` coarse layers around measurement `i`.
pub fn patch_for(mesh: &MeshHierarchy, meas: &MeasurementSet, i: usize, layers: usize) -> Result<PatchDescriptor> {
    match meas.kind {
        BasisKind::Rps => mesh.node_patch(meas.support[i], layers),
        BasisKind::Grps => mesh.triangle_patch(meas.support[i], layers),
    }
}

/// Measurements whose coarse entity lies inside the patch, ascending.
fn patch_measurements(mesh: &MeshHierarchy, meas: &MeasurementSet, patch: &PatchDescriptor, dofs: &DofMap) -> Vec<usize> {
    match meas.kind {
        BasisKind::Grps => patch
            .triangles
            .iter()
            .filter_map(|&t| meas.measurement_of(t))
            .collect(),
        BasisKind::Rps => {
            let mut out: Vec<usize> = patch
                .triangles
                .iter()
                .flat_map(|&t| mesh.coarse.triangles[t])
                .filter_map(|v| meas.measurement_of(v))
                .filter(|&j| {
                    let fine = mesh.coarse_to_fine_node[meas.support[j]];
                    dofs.dof(fine).is_some() && patch.interior_fine_dofs.binary_search(&fine).is_ok()
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

/// Localized basis function `i`: energy minimization on the patch interior.
pub fn local_basis_function(
    mesh: &MeshHierarchy,
    dofs: &DofMap,
    a: &SparseOperator,
    meas: &MeasurementSet,
    i: usize,
    layers: usize,
) -> Result<(BasisVector, PatchDescriptor)> {
    let patch = patch_for(mesh, meas, i, layers)?;
    let center = meas.support[i];
    let local: Vec<usize> = patch
        .interior_fine_dofs
        .iter()
        .filter_map(|&v| dofs.dof(v))
        .collect();
    if local.is_empty() {
        return Err(Error::EmptyPatch { center });
    }
    let constrained = patch_measurements(mesh, meas, &patch, dofs);
    let own = constrained.binary_search(&i).map_err(|_| Error::InfeasiblePatch {
        center,
        reason: "own measurement outside patch".into(),
    })?;
    let a_loc = a.submatrix(&local, &local);
    let c_loc = meas.c.submatrix(&constrained, &local);
    let solver = SaddlePointSolver::new(&a_loc, &c_loc).map_err(|e| match e {
        Error::EmptyMeasurement(j) => Error::InfeasiblePatch {
            center,
            reason: format!("measurement {} has no interior support", constrained[j]),
        },
        other => other,
    })?;
    let mut g = vec![0.0; constrained.len()];
    g[own] = 1.0;
    let (x, _) = solver
        .solve(&vec![0.0; local.len()], &g)
        .map_err(|e| Error::InfeasiblePatch {
            center,
            reason: e.to_string(),
        })?;
    let vector = BasisVector {
        dofs: local.iter().map(|&k| k as u32).collect(),
        values: x,
    };
    Ok((vector, patch))
}

/// All localized basis functions with `layers` coarse layers.
pub fn compute_local_basis(
    mesh: &MeshHierarchy,
    dofs: &DofMap,
    a: &SparseOperator,
    meas: &MeasurementSet,
    layers: usize,
) -> Result<CoarseBasis> {
    if layers == 0 {
        return Err(Error::InvalidMesh("localization needs at least one layer".into()));
    }
    let build = |i: usize| local_basis_function(mesh, dofs, a, meas, i, layers);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(BasisVector, PatchDescriptor)>> = {
        use rayon::prelude::*;
        (0..meas.len()).into_par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(BasisVector, PatchDescriptor)>> = (0..meas.len()).map(build).collect();

    let mut vectors = Vec::with_capacity(meas.len());
    let mut patches = Vec::with_capacity(meas.len());
    for r in results {
        let (v, p) = r?;
        vectors.push(v);
        patches.push(p);
    }
    Ok(CoarseBasis {
        kind: meas.kind,
        layers: Some(layers),
        vectors,
        patches,
        n_dofs: dofs.len(),
    })
}

/// `‖φ − ψ‖_a`.
pub fn energy_distance(a: &SparseOperator, phi: &BasisVector, psi: &BasisVector) -> f64 {
    let n = a.nrows();
    let mut d = phi.to_dense(n);
    psi.add_to(-1.0, &mut d);
    a.quadratic_form(&d).max(0.0).sqrt()
}

pub fn energy_norm(a: &SparseOperator, phi: &BasisVector) -> f64 {
    a.quadratic_form(&phi.to_dense(a.nrows())).max(0.0).sqrt()
}

/// Element energies `∫_t a |∇φ|²` for a function given on interior dofs.
pub fn element_energies(mesh: &MeshHierarchy, dofs: &DofMap, coefficient: &[f64], phi: &[f64]) -> Vec<f64> {
    let full = dofs.extend(phi);
    mesh.fine
        .triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let k = element_stiffness(mesh.fine.vertices(t), coefficient[t]);
            let u = [full[tri[0]], full[tri[1]], full[tri[2]]];
            (0..3)
                .map(|i| (0..3).map(|j| u[i] * k[i][j] * u[j]).sum::<f64>())
                .sum::<f64>()
        })
        .collect()
}

/// One point of a decay profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayPoint {
    pub radius: f64,
    /// Fraction of the energy carried by triangles at distance `>= radius`.
    pub tail_fraction: f64,
}

/// Tail energy fractions at radii `0, H, 2H, …` until the ball covers the domain.
pub fn decay_profile(
    mesh: &MeshHierarchy,
    dofs: &DofMap,
    coefficient: &[f64],
    phi: &[f64],
    center: [f64; 2],
) -> Vec<DecayPoint> {
    let energies = element_energies(mesh, dofs, coefficient, phi);
    let total: f64 = energies.iter().sum();
    let dist: Vec<f64> = (0..mesh.fine.n_triangles())
        .map(|t| dist2(mesh.fine.barycenter(t), center).sqrt())
        .collect();
    let h = mesh.coarse_h();
    let reach = dist.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let radius = k as f64 * h;
        let tail: f64 = energies
            .iter()
            .zip(&dist)
            .filter(|(_, &d)| d >= radius)
            .map(|(e, _)| e)
            .sum();
        let tail_fraction = if total > 0.0 { tail / total } else { 0.0 };
        out.push(DecayPoint { radius, tail_fraction });
        if radius > reach {
            break;
        }
        k += 1;
    }
    out
}

/// Values along the fine grid row closest to `y`, as `(x, value)` pairs.
pub fn horizontal_slice(mesh: &MeshHierarchy, dofs: &DofMap, phi: &[f64], y: f64) -> Vec<(f64, f64)> {
    let full = dofs.extend(phi);
    let (fnx, fny) = mesh.fine_cells();
    let rect = mesh.domain();
    let row = (((y - rect.y0) / rect.height()) * fny as f64).round().clamp(0.0, fny as f64) as usize;
    (0..=fnx)
        .map(|i| {
            let v = row * (fnx + 1) + i;
            (mesh.fine.nodes[v][0], full[v])
        })
        .collect()
}

/// Least-squares line `y = α + β x`; returns `(α, β, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (alpha, beta, r2)
}

/// Galerkin projections `Φᵀ A_k Φ` of several fine operators.
///
/// Dense `Φ` with blocked GEMM when the basis fills a sizable part of the fine
/// space, sparse products otherwise.
pub fn galerkin_project(basis: &CoarseBasis, operators: &[&SparseOperator]) -> Vec<SparseOperator> {
    let n = basis.fine_dim();
    let big_n = basis.len();
    let density = basis.nnz() as f64 / (n as f64 * big_n as f64).max(1.0);
    let dense_bytes = 8.0 * n as f64 * big_n as f64;
    if density > 0.05 && dense_bytes < 1.5e9 {
        galerkin_project_dense(basis, operators)
    } else {
        let phi_t = basis.transpose_operator();
        let phi = phi_t.transpose();
        operators
            .iter()
            .map(|op| phi_t.matmul(&op.matmul(&phi)))
            .collect()
    }
}

fn galerkin_project_dense(basis: &CoarseBasis, operators: &[&SparseOperator]) -> Vec<SparseOperator> {
    let n = basis.fine_dim();
    let big_n = basis.len();
    let mut phi = Mat::<f64>::zeros(n, big_n);
    for (j, v) in basis.vectors.iter().enumerate() {
        let col = phi.col_as_slice_mut(j);
        for (&k, &x) in v.dofs.iter().zip(&v.values) {
            col[k as usize] = x;
        }
    }
    const BLOCK: usize = 256;
    operators
        .iter()
        .map(|op| {
            let mut out = vec![0.0; big_n * big_n];
            for start in (0..big_n).step_by(BLOCK) {
                let end = (start + BLOCK).min(big_n);
                let mut w = Mat::<f64>::zeros(n, end - start);
                for j in start..end {
                    op.mul_vec_into(phi.col_as_slice(j), w.col_as_slice_mut(j - start));
                }
                let block: Mat<f64> = phi.transpose() * &w;
                for j in start..end {
                    out[j * big_n..(j + 1) * big_n].copy_from_slice(block.col_as_slice(j - start));
                }
            }
            SparseOperator::from_dense_col_major(big_n, big_n, &out)
        })
        .collect()
}

/// Coarse Galerkin solution of `A z = b`, returned on the fine interior dofs.
pub fn galerkin_solve(basis: &CoarseBasis, a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    let s = galerkin_project(basis, &[a]).pop().expect("one operator");
    let rhs = basis.restrict(b);
    let coeffs = Cholesky::new(&s)?.solve(&rhs);
    Ok(basis.prolong(&coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{constant, trig_coefficient};
    use crate::fem::assemble_stiffness;

    #[test]
    fn measurement_counts() {
        let mesh = MeshHierarchy::unit_square(32, 0).unwrap();
        assert_eq!(build_measurements(&mesh, BasisKind::Rps).len(), 961);
        assert_eq!(build_measurements(&mesh, BasisKind::Grps).len(), 2048);
        assert_eq!(BasisKind::Rps.coarse_dof(32), 961);
        assert_eq!(BasisKind::Grps.coarse_dof(32), 2048);
    }

    #[test]
    fn grps_rows_average_constants_to_one() {
        let mesh = MeshHierarchy::unit_square(3, 2).unwrap();
        let meas = build_measurements(&mesh, BasisKind::Grps);
        let ones = vec![1.0; mesh.fine.n_nodes()];
        assert!(meas.apply_full(&ones).iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn rps_rows_pick_coarse_node_values() {
        let mesh = MeshHierarchy::unit_square(4, 2).unwrap();
        let meas = build_measurements(&mesh, BasisKind::Rps);
        let z: Vec<f64> = (0..mesh.fine.n_nodes()).map(|v| v as f64).collect();
        let picked = meas.apply_full(&z);
        for (i, &node) in meas.support.iter().enumerate() {
            assert_eq!(picked[i], mesh.coarse_to_fine_node[node] as f64);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("GRPS".parse::<BasisKind>().unwrap(), BasisKind::Grps);
        assert!("lod".parse::<BasisKind>().is_err());
    }

    #[test]
    fn global_basis_meets_constraints() {
        let mesh = MeshHierarchy::unit_square(2, 2).unwrap();
        let a = assemble_stiffness(&mesh, &trig_coefficient()).unwrap();
        for kind in [BasisKind::Rps, BasisKind::Grps] {
            let meas = build_measurements(&mesh, kind);
            let basis = compute_global_basis(&mesh, &a, &meas).unwrap();
            assert!(basis.constraint_defect(&meas) < 1e-10, "{kind}");
        }
    }

    #[test]
    fn degenerate_grps_is_rejected() {
        // One interior fine node cannot carry two triangle averages.
        let mesh = MeshHierarchy::unit_square(1, 1).unwrap();
        let a = assemble_stiffness(&mesh, &constant(1.0).unwrap()).unwrap();
        let meas = build_measurements(&mesh, BasisKind::Grps);
        let err = compute_global_basis(&mesh, &a, &meas).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }), "{err}");
    }

    #[test]
    fn saturated_local_basis_equals_global() {
        let mesh = MeshHierarchy::unit_square(4, 2).unwrap();
        let dofs = DofMap::interior(&mesh);
        let a = assemble_stiffness(&mesh, &trig_coefficient()).unwrap();
        for kind in [BasisKind::Rps, BasisKind::Grps] {
            let meas = build_measurements(&mesh, kind);
            let global = compute_global_basis(&mesh, &a, &meas).unwrap();
            let local = compute_local_basis(&mesh, &dofs, &a, &meas, 20).unwrap();
            for i in 0..meas.len() {
                let d = energy_distance(&a, &global.vectors[i], &local.vectors[i]);
                assert!(d < 1e-8 * energy_norm(&a, &global.vectors[i]), "{kind} {i}: {d}");
            }
        }
    }

    #[test]
    fn local_basis_is_supported_in_patch() {
        // J = 2 leaves fine nodes strictly inside every coarse triangle.
        let mesh = MeshHierarchy::unit_square(8, 2).unwrap();
        let dofs = DofMap::interior(&mesh);
        let a = assemble_stiffness(&mesh, &constant(1.0).unwrap()).unwrap();
        let meas = build_measurements(&mesh, BasisKind::Grps);
        let basis = compute_local_basis(&mesh, &dofs, &a, &meas, 1).unwrap_or_else(|e| panic!("{e}"));
        for (v, p) in basis.vectors.iter().zip(&basis.patches) {
            for &k in &v.dofs {
                let node = dofs.nodes()[k as usize];
                assert!(p.interior_fine_dofs.binary_search(&node).is_ok());
            }
        }
        assert!(basis.constraint_defect(&meas) < 1e-8);
    }

    #[test]
    fn decay_profile_endpoints() {
        let mesh = MeshHierarchy::unit_square(4, 2).unwrap();
        let dofs = DofMap::interior(&mesh);
        let coeff = constant(1.0).unwrap();
        let a = assemble_stiffness(&mesh, &coeff).unwrap();
        let meas = build_measurements(&mesh, BasisKind::Rps);
        let i = meas.nearest(&mesh, [0.5, 0.5]);
        let phi = compute_global_basis_function(&a, &meas, i).unwrap();
        let samples = vec![1.0; mesh.fine.n_triangles()];
        let profile = decay_profile(&mesh, &dofs, &samples, &phi.values, meas.center(&mesh, i));
        assert_eq!(profile[0].tail_fraction, 1.0);
        assert_eq!(profile.last().unwrap().tail_fraction, 0.0);
        let energy: f64 = element_energies(&mesh, &dofs, &samples, &phi.values).iter().sum();
        assert!((energy - a.quadratic_form(&phi.values)).abs() < 1e-10 * energy);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (a, b, r2) = linear_fit(&xs, &ys);
        assert!((a - 2.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_and_sparse_projection_agree() {
        let mesh = MeshHierarchy::unit_square(4, 2).unwrap();
        let a = assemble_stiffness(&mesh, &trig_coefficient()).unwrap();
        let meas = build_measurements(&mesh, BasisKind::Grps);
        let basis = compute_global_basis(&mesh, &a, &meas).unwrap();
        let dense = galerkin_project_dense(&basis, &[&a]).pop().unwrap();
        let phi_t = basis.transpose_operator();
        let sparse = phi_t.matmul(&a.matmul(&phi_t.transpose()));
        let (d, s) = (dense.to_dense(), sparse.to_dense());
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                assert!((d[i][j] - s[i][j]).abs() < 1e-10);
            }
        }
    }
}
