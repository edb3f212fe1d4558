//! Sparse storage and the direct solvers used throughout the crate.
//!
//! Everything numeric lives in [`SparseOperator`], a plain CSR matrix. The
//! factorizations are thin wrappers over `faer`'s supernodal Cholesky:
//! [`Cholesky`] for SPD systems and [`SaddlePointSolver`] for the
//! equality-constrained energy minimizations that define the coarse bases.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LdltRef, LltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Mat, Par, Side};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend(
                cols[counts[i]..counts[i + 1]]
                    .iter()
                    .copied()
                    .zip(vals[counts[i]..counts[i + 1]].iter().copied()),
            );
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Builds a matrix from sorted, duplicate-free rows.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                debug_assert!(c < ncols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Dense column-major `nrows x ncols` block converted to CSR, dropping exact zeros.
    pub fn from_dense_col_major(nrows: usize, ncols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), nrows * ncols);
        let rows = (0..nrows)
            .map(|i| {
                (0..ncols)
                    .filter_map(|j| {
                        let v = data[j * nrows + i];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(ncols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "operand length");
        assert_eq!(y.len(), self.nrows, "output length");
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `y = Aᵀ x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "operand length");
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xi;
            }
        }
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&c, &v)| v * y[c]).sum::<f64>()
            })
            .sum()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                indices[next[c]] = i;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Extracts `A[rows, cols]`, renumbering both index sets by position.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let new_rows = rows
            .iter()
            .map(|&r| {
                let (cs, vs) = self.row(r);
                let mut row: Vec<(usize, f64)> = cs
                    .iter()
                    .zip(vs)
                    .filter_map(|(&c, &v)| {
                        let k = col_map[c];
                        (k != usize::MAX).then_some((k, v))
                    })
                    .collect();
                row.sort_unstable_by_key(|&(c, _)| c);
                row
            })
            .collect();
        Self::from_rows(cols.len(), new_rows)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `A + B` for matrices of equal shape.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|i| {
                let (ca, va) = self.row(i);
                let (cb, vb) = other.row(i);
                let mut out = Vec::with_capacity(ca.len() + cb.len());
                let (mut p, mut q) = (0, 0);
                while p < ca.len() || q < cb.len() {
                    if q == cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                        out.push((ca[p], va[p]));
                        p += 1;
                    } else if p == ca.len() || cb[q] < ca[p] {
                        out.push((cb[q], vb[q]));
                        q += 1;
                    } else {
                        out.push((ca[p], va[p] + vb[q]));
                        p += 1;
                        q += 1;
                    }
                }
                out
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    /// Sparse product `A B` (row-wise Gustavson).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions");
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut pattern = Vec::new();
        let rows = (0..self.nrows)
            .map(|i| {
                pattern.clear();
                let (ca, va) = self.row(i);
                for (&k, &a) in ca.iter().zip(va) {
                    let (cb, vb) = other.row(k);
                    for (&j, &b) in cb.iter().zip(vb) {
                        if mark[j] != i {
                            mark[j] = i;
                            acc[j] = 0.0;
                            pattern.push(j);
                        }
                        acc[j] += a * b;
                    }
                }
                pattern.sort_unstable();
                pattern.iter().map(|&j| (j, acc[j])).collect()
            })
            .collect();
        Self::from_rows(other.ncols, rows)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row-major dense copy; intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// The CSR arrays of a symmetric matrix double as its CSC arrays.
    fn as_symmetric_csc(&self) -> SparseColMatRef<'_, usize, f64> {
        let symbolic = SymbolicSparseColMatRef::new_checked(
            self.nrows,
            self.ncols,
            &self.indptr,
            None,
            &self.indices,
        );
        SparseColMatRef::new(symbolic, &self.values)
    }
}

/// Sparse `L Lᵀ` factorization of an SPD matrix.
pub struct Cholesky {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    matrix: SparseOperator,
}

impl Cholesky {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let csc = a.as_symmetric_csc();
        let symbolic = factorize_symbolic_cholesky(
            csc.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut buf = MemBuffer::new(
            symbolic.factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()),
        );
        symbolic
            .factorize_numeric_llt(
                &mut values,
                csc,
                Side::Lower,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| match e {
                faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index } => {
                    Error::NotPositiveDefinite { pivot: index }
                }
            })?;
        Ok(Self {
            symbolic,
            values,
            matrix: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn solve_raw(&self, rhs: &mut Mat<f64>) {
        let mut buf =
            MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(rhs.ncols(), Par::Seq));
        LltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            rhs.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
    }

    /// Solves `A x = b` with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x = Mat::from_fn(n, 1, |i, _| b[i]);
        self.solve_raw(&mut x);
        let xs: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let ax = self.matrix.mul_vec(&xs);
        let mut r = Mat::from_fn(n, 1, |i, _| b[i] - ax[i]);
        self.solve_raw(&mut r);
        (0..n).map(|i| xs[i] + r[(i, 0)]).collect()
    }
}

/// Solver for `[A Cᵀ; C 0] (x, λ) = (f, g)` with `A` SPD and `C` of full row rank.
///
/// The quasi-definite matrix `[A Cᵀ; C -δI]` is factored by sparse `LDLᵀ`
/// under a fill-reducing ordering (quasi-definite matrices are factorizable
/// under any symmetric permutation), then iterative refinement against the
/// exact saddle matrix removes the `δ` perturbation.
pub struct SaddlePointSolver {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    a: SparseOperator,
    c: SparseOperator,
    ct: SparseOperator,
    delta: f64,
}

const REFINEMENT_STEPS: usize = 12;

impl SaddlePointSolver {
    pub fn new(a: &SparseOperator, c: &SparseOperator) -> Result<Self> {
        let n = a.nrows();
        let m = c.nrows();
        if a.ncols() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "saddle system with A {}x{} and C {}x{}",
                a.nrows(),
                a.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        let mut min_row_norm = f64::INFINITY;
        for i in 0..m {
            let norm2: f64 = c.row(i).1.iter().map(|v| v * v).sum();
            if norm2 == 0.0 {
                return Err(Error::EmptyMeasurement(i));
            }
            min_row_norm = min_row_norm.min(norm2);
        }
        let max_diag = a.diag().into_iter().fold(0.0f64, f64::max);
        if max_diag <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: 0 });
        }
        // Schur complement C A⁻¹ Cᵀ ≳ |c_i|² / λ_max(A); keep δ well below it.
        let delta = if m == 0 {
            0.0
        } else {
            1e-8 * min_row_norm / max_diag
        };

        let ct = c.transpose();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n + m);
        for i in 0..n {
            let (ca, va) = a.row(i);
            let (cc, vc) = ct.row(i);
            let mut row: Vec<(usize, f64)> = ca.iter().copied().zip(va.iter().copied()).collect();
            row.extend(cc.iter().map(|&j| j + n).zip(vc.iter().copied()));
            rows.push(row);
        }
        for i in 0..m {
            let (cc, vc) = c.row(i);
            let mut row: Vec<(usize, f64)> = cc.iter().copied().zip(vc.iter().copied()).collect();
            row.push((n + i, -delta));
            rows.push(row);
        }
        let kkt = SparseOperator::from_rows(n + m, rows);

        let csc = kkt.as_symmetric_csc();
        let symbolic = factorize_symbolic_cholesky(
            csc.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut buf = MemBuffer::new(
            symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()),
        );
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                csc,
                Side::Lower,
                LdltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| Error::Linalg(format!("saddle factorization: {e:?}")))?;
        Ok(Self {
            symbolic,
            values,
            a: a.clone(),
            c: c.clone(),
            ct,
            delta,
        })
    }

    pub fn primal_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn dual_dim(&self) -> usize {
        self.c.nrows()
    }

    fn solve_regularized(&self, rhs: &mut Mat<f64>) {
        let mut buf =
            MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(rhs.ncols(), Par::Seq));
        LdltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            rhs.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
    }

    /// Residual of the exact saddle system, column `j` of `x` against `b`.
    fn residual(&self, b: &Mat<f64>, x: &Mat<f64>, j: usize) -> Vec<f64> {
        let n = self.primal_dim();
        let m = self.dual_dim();
        let xs: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
        let ls: Vec<f64> = (0..m).map(|i| x[(n + i, j)]).collect();
        let ax = self.a.mul_vec(&xs);
        let ctl = self.ct.mul_vec(&ls);
        let cx = self.c.mul_vec(&xs);
        let mut r = Vec::with_capacity(n + m);
        r.extend((0..n).map(|i| b[(i, j)] - ax[i] - ctl[i]));
        r.extend((0..m).map(|i| b[(n + i, j)] - cx[i]));
        r
    }

    /// Solves for every column of `rhs` (length `n + m` each) in place.
    ///
    /// Fails with [`Error::RankDeficient`] when a column's constraints cannot
    /// be met after refinement.
    pub fn solve_in_place(&self, rhs: &mut Mat<f64>) -> Result<()> {
        let n = self.primal_dim();
        let m = self.dual_dim();
        assert_eq!(rhs.nrows(), n + m);
        let b = rhs.clone();
        self.solve_regularized(rhs);
        if self.delta == 0.0 {
            return Ok(());
        }
        let k = rhs.ncols();
        let scale: Vec<f64> = (0..k)
            .map(|j| (0..n + m).map(|i| b[(i, j)].abs()).fold(0.0, f64::max).max(1e-300))
            .collect();
        let mut last = vec![f64::INFINITY; k];
        let mut active: Vec<usize> = (0..k).collect();
        for _ in 0..REFINEMENT_STEPS {
            if active.is_empty() {
                break;
            }
            let mut corr = Mat::<f64>::zeros(n + m, active.len());
            let mut still = Vec::with_capacity(active.len());
            for (slot, &j) in active.iter().enumerate() {
                let r = self.residual(&b, rhs, j);
                let rn = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / scale[j];
                // Stop once converged or stagnating.
                if rn < 1e-15 || rn > 0.5 * last[j] {
                    last[j] = last[j].min(rn);
                    continue;
                }
                last[j] = rn;
                for (i, v) in r.into_iter().enumerate() {
                    corr[(i, slot)] = v;
                }
                still.push((slot, j));
            }
            if still.is_empty() {
                break;
            }
            self.solve_regularized(&mut corr);
            for &(slot, j) in &still {
                for i in 0..n + m {
                    rhs[(i, j)] += corr[(i, slot)];
                }
            }
            active = still.into_iter().map(|(_, j)| j).collect();
        }

        for j in 0..k {
            let xs: Vec<f64> = (0..n).map(|i| rhs[(i, j)]).collect();
            let cx = self.c.mul_vec(&xs);
            let target_scale = (0..m).map(|i| b[(n + i, j)].abs()).fold(1.0, f64::max);
            if let Some((worst, res)) = (0..m)
                .map(|i| (i, (cx[i] - b[(n + i, j)]).abs()))
                .max_by(|p, q| p.1.total_cmp(&q.1))
            {
                if !(res <= 1e-9 * target_scale) {
                    return Err(Error::RankDeficient {
                        measurement: worst,
                        residual: res,
                    });
                }
            }
        }
        Ok(())
    }

    /// Solves one system, returning `(x, λ)`.
    pub fn solve(&self, f: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.primal_dim();
        let m = self.dual_dim();
        assert_eq!(f.len(), n);
        assert_eq!(g.len(), m);
        let mut rhs = Mat::from_fn(n + m, 1, |i, _| if i < n { f[i] } else { g[i - n] });
        self.solve_in_place(&mut rhs)?;
        let x = (0..n).map(|i| rhs[(i, 0)]).collect();
        let l = (0..m).map(|i| rhs[(n + i, 0)]).collect();
        Ok((x, l))
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseOperator::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseOperator::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn transpose_and_matmul_agree_with_dense() {
        let a = SparseOperator::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = a.transpose();
        let p = a.matmul(&b).to_dense();
        assert_eq!(p, vec![vec![5.0, 0.0], vec![0.0, 9.0]]);
        assert_eq!(a.mul_transpose_vec(&[1.0, 1.0]), vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn cholesky_solves_laplacian() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = Cholesky::new(&a).unwrap().solve(&b);
        let r = a.mul_vec(&x);
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SparseOperator::diagonal(&[1.0, -1.0]);
        assert!(matches!(Cholesky::new(&a), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn saddle_point_meets_constraints() {
        let n = 30;
        let a = laplacian_1d(n);
        let c = SparseOperator::from_triplets(2, n, &[(0, 5, 1.0), (1, 20, 0.5), (1, 21, 0.5)]);
        let solver = SaddlePointSolver::new(&a, &c).unwrap();
        let (x, l) = solver.solve(&vec![0.0; n], &[1.0, -2.0]).unwrap();
        let cx = c.mul_vec(&x);
        assert!((cx[0] - 1.0).abs() < 1e-12 && (cx[1] + 2.0).abs() < 1e-12);
        let mut stat = a.mul_vec(&x);
        for (s, t) in stat.iter_mut().zip(c.mul_transpose_vec(&l)) {
            *s += t;
        }
        assert!(norm_inf(&stat) < 1e-10);
    }

    #[test]
    fn saddle_point_flags_rank_deficiency() {
        let n = 10;
        let a = laplacian_1d(n);
        let c = SparseOperator::from_triplets(2, n, &[(0, 3, 1.0), (1, 3, 1.0)]);
        let solver = SaddlePointSolver::new(&a, &c).unwrap();
        let err = solver.solve(&vec![0.0; n], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }), "{err}");
    }

    #[test]
    fn saddle_point_rejects_empty_row() {
        let a = laplacian_1d(4);
        let c = SparseOperator::from_rows(4, vec![vec![(1, 1.0)], vec![]]);
        assert!(matches!(SaddlePointSolver::new(&a, &c), Err(Error::EmptyMeasurement(1))));
    }
}
