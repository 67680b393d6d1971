//! Sparse storage and the direct/iterative solvers used by the network and
//! finite element layers.
//!
//! Matrices are assembled into a small compressed-row type owned by this
//! crate; factorizations are delegated to `faer`.

use crate::error::{Error, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat, Triplet};
use faer::{Col, Conj, Mat, Par, Side};

/// Compressed sparse row matrix with sorted column indices and no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Entries whose sum is exactly zero are kept so that the sparsity
    /// pattern depends only on the index set.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
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

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates `(col, value)` over the stored entries of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[row]..self.indptr[row + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates `(row, col, value)` over all stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Position of entry `(row, col)` in the value array, if stored.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.indptr[row]..self.indptr[row + 1];
        self.indices[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `selfᵀ · y`
    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (r, c, v) in self.iter() {
            out[c] += v * y[r];
        }
        out
    }

    /// `xᵀ · self · x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets)
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            out[r][c] = v;
        }
        out
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Solver(format!("matrix conversion: {e:?}")))
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct SpdFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl SpdFactor {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Solver("Cholesky needs a square matrix".into()));
        }
        let m = matrix.to_faer()?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorization: {e:?}")))?;
        Ok(Self {
            llt,
            n: matrix.nrows(),
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        solve_with(&self.llt, self.n, rhs)
    }
}

/// LU factorization for a fixed `(row, col)` index list whose values change
/// between factorizations. The symbolic analysis is done once.
pub struct PatternLu {
    n: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic_lu: SymbolicLu<usize>,
}

impl PatternLu {
    pub fn new(n: usize, pattern: &[(usize, usize)]) -> Result<Self> {
        let pairs: Vec<_> = pattern.iter().map(|&(r, c)| Pair::new(r, c)).collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::Solver(format!("pattern: {e:?}")))?;
        let symbolic_lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| Error::Solver(format!("symbolic LU: {e:?}")))?;
        Ok(Self {
            n,
            symbolic,
            argsort,
            symbolic_lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Numeric factorization; `values[k]` belongs to `pattern[k]`.
    pub fn factor(&self, values: &[f64]) -> Result<LuFactor> {
        let m = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values)
            .map_err(|e| Error::Solver(format!("matrix fill: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), m.as_ref())
            .map_err(|e| Error::Solver(format!("LU factorization: {e:?}")))?;
        Ok(LuFactor { lu, n: self.n })
    }
}

pub struct LuFactor {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LuFactor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        solve_with(&self.lu, self.n, rhs)
    }
}

/// Sparse `LDLᵀ` without pivoting for symmetric matrices given by their
/// lower triangle, with a fixed index list. Suited to quasi-definite
/// matrices, where every symmetric ordering admits the factorization.
pub struct PatternLdlt {
    n: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    cholesky: SymbolicCholesky<usize>,
}

impl PatternLdlt {
    /// `pattern` lists lower-triangle positions `(row ≥ col)`.
    pub fn new(n: usize, pattern: &[(usize, usize)]) -> Result<Self> {
        if pattern.iter().any(|&(r, c)| r < c) {
            return Err(Error::Solver(
                "LDLᵀ pattern must be lower triangular".into(),
            ));
        }
        let pairs: Vec<_> = pattern.iter().map(|&(r, c)| Pair::new(r, c)).collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::Solver(format!("pattern: {e:?}")))?;
        let cholesky = factorize_symbolic_cholesky(
            symbolic.as_ref(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Solver(format!("symbolic LDLᵀ: {e:?}")))?;
        Ok(Self {
            n,
            symbolic,
            argsort,
            cholesky,
        })
    }

    pub fn factor(&self, values: &[f64]) -> Result<LdltFactor<'_>> {
        let m = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values)
            .map_err(|e| Error::Solver(format!("matrix fill: {e:?}")))?;
        let mut l = vec![0.0; self.cholesky.len_val()];
        let par = Par::Seq;
        let mut buf = MemBuffer::new(
            self.cholesky
                .factorize_numeric_ldlt_scratch::<f64>(par, Default::default()),
        );
        self.cholesky
            .factorize_numeric_ldlt(
                &mut l,
                m.as_ref(),
                Side::Lower,
                LdltRegularization::default(),
                par,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| Error::Solver(format!("LDLᵀ factorization: {e:?}")))?;
        check_finite(&l)?;
        Ok(LdltFactor { owner: self, l })
    }
}

pub struct LdltFactor<'a> {
    owner: &'a PatternLdlt,
    l: Vec<f64>,
}

impl LdltFactor<'_> {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.owner.n;
        assert_eq!(rhs.len(), n);
        let sym = &self.owner.cholesky;
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let mut buf = MemBuffer::new(sym.solve_in_place_scratch::<f64>(1, Par::Seq));
        LdltRef::new(sym, &self.l).solve_in_place_with_conj(
            Conj::No,
            x.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}

/// One-shot LU solve of a general square system.
pub fn solve_general(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let pattern: Vec<_> = matrix.iter().map(|(r, c, _)| (r, c)).collect();
    let lu = PatternLu::new(matrix.nrows(), &pattern)?;
    let x = lu.factor(matrix.values())?.solve(rhs);
    check_finite(&x)?;
    Ok(x)
}

fn solve_with<S: Solve<f64>>(factor: &S, n: usize, rhs: &[f64]) -> Vec<f64> {
    assert_eq!(rhs.len(), n);
    let b = Col::<f64>::from_fn(n, |i| rhs[i]);
    let x = factor.solve(&b);
    (0..n).map(|i| x[i]).collect()
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Solver(
            "solution contains non-finite entries (singular system?)".into(),
        ))
    }
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
///
/// Stops when `‖r‖ ≤ tol · ‖b‖`.
pub fn conjugate_gradient(
    matrix: &CsrMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let diag: Vec<f64> = (0..n).map(|i| matrix.get(i, i)).collect();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Solver("CG needs a positive diagonal".into()));
    }
    let bnorm = norm2(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = matrix.mul_vec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "CG did not converge in {max_iter} iterations"
    )))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m =
            CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, -1.0), (0, 0, 0.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert!(m.position(0, 0).is_some());
    }

    #[test]
    fn cholesky_lu_and_cg_agree() {
        let m = laplacian_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let x1 = SpdFactor::new(&m).unwrap().solve(&b);
        let x2 = solve_general(&m, &b).unwrap();
        let x3 = conjugate_gradient(&m, &b, 1e-13, 1000).unwrap();
        let r = m.mul_vec(&x1);
        for i in 0..30 {
            assert!((r[i] - b[i]).abs() < 1e-12);
            assert!((x1[i] - x2[i]).abs() < 1e-10);
            assert!((x1[i] - x3[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn pattern_lu_refactors_with_new_values() {
        let pattern = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
        let lu = PatternLu::new(2, &pattern).unwrap();
        let x = lu.factor(&[2.0, 1.0, 1.0, 3.0]).unwrap().solve(&[3.0, 4.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let x = lu.factor(&[0.0, 1.0, 1.0, 0.0]).unwrap().solve(&[3.0, 4.0]);
        assert!((x[0] - 4.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn ldlt_solves_quasi_definite_system() {
        let full = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 4.0),
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, 2.0),
                (2, 0, 1.0),
                (2, 1, 2.0),
                (2, 2, -1.0),
            ],
        );
        let lower: Vec<_> = full.iter().filter(|&(r, c, _)| r >= c).collect();
        let pattern: Vec<_> = lower.iter().map(|&(r, c, _)| (r, c)).collect();
        let values: Vec<f64> = lower.iter().map(|&(_, _, v)| v).collect();
        let ldlt = PatternLdlt::new(3, &pattern).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = ldlt.factor(&values).unwrap().solve(&b);
        let y = solve_general(&full, &b).unwrap();
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-13);
        }
        assert!(PatternLdlt::new(2, &[(0, 1)]).is_err());
    }

    #[test]
    fn transpose_products() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        assert_eq!(m.transpose_mul_vec(&[1.0, 2.0]), vec![1.0, 6.0, 2.0]);
        assert_eq!(m.transpose().mul_vec(&[1.0, 2.0]), vec![1.0, 6.0, 2.0]);
        let sq = CsrMatrix::from_triplets(2, 2, &[(0, 1, 2.0), (1, 0, -1.0), (1, 1, 4.0)]);
        assert_eq!(sq.max_asymmetry(), 3.0);
    }
}
