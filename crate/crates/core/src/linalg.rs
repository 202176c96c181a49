//! Sparse symmetric matrices, a reusable sparse Cholesky, and dense symmetric
//! eigen-decompositions. Factorizations are delegated to `faer`.

use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::{Mat, Side};
use faer::prelude::Solve;

use crate::dense::RowMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix, used for products and quadratic forms.
#[derive(Clone, Debug)]
pub struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds an `n × n` matrix from (row, col, value) triplets, summing
    /// duplicates. Column indices within a row are sorted.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `self · x` for a dense `n × m` matrix.
    pub fn mul(&self, x: &RowMatrix) -> RowMatrix {
        assert_eq!(x.rows(), self.n);
        let m = x.cols();
        let mut out = RowMatrix::zeros(self.n, m);
        crate::par::for_each_row_mut(out.as_mut_slice(), m, |i, dst| {
            for (j, v) in self.row(i) {
                for (d, s) in dst.iter_mut().zip(x.row(j)) {
                    *d += v * s;
                }
            }
        });
        out
    }

    /// `tr(xᵀ · self · x)`.
    pub fn quad_form(&self, x: &RowMatrix) -> f64 {
        assert_eq!(x.rows(), self.n);
        (0..self.n)
            .map(|i| {
                let xi = x.row(i);
                self.row(i)
                    .map(|(j, v)| v * crate::dense::dot(xi, x.row(j)))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Max |A_ij − A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Lower-triangular (including diagonal) column pattern, as CSC. Every
    /// diagonal entry is present even when the matrix stores no value there.
    pub fn lower_pattern(&self) -> SymmetricPattern {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            cols[i].push(i);
            for (j, _) in self.row(i) {
                if j < i {
                    cols[j].push(i);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(self.n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut c in cols {
            c.sort_unstable();
            c.dedup();
            row_idx.extend(c);
            col_ptr.push(row_idx.len());
        }
        SymmetricPattern {
            n: self.n,
            col_ptr,
            row_idx,
        }
    }
}

/// Fixed lower-triangular sparsity pattern of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SymmetricPattern {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Storage slot of entry `(i, j)` (either triangle), if it is in the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[range.clone()]
            .binary_search(&r)
            .ok()
            .map(|k| range.start + k)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }
}

/// Symmetric positive-definite system on a fixed pattern. The symbolic
/// analysis (ordering, elimination tree) is computed once and reused for
/// every numeric factorization.
pub struct SpdSolver {
    pattern: SymmetricPattern,
    symbolic: SymbolicLlt<usize>,
}

impl SpdSolver {
    pub fn new(pattern: SymmetricPattern) -> Result<Self> {
        let symbolic = SymbolicLlt::try_new(pattern.symbolic(), Side::Lower)
            .map_err(|e| Error::Numerical(format!("symbolic cholesky: {e:?}")))?;
        Ok(Self { pattern, symbolic })
    }

    pub fn pattern(&self) -> &SymmetricPattern {
        &self.pattern
    }

    /// Factorizes the matrix whose lower-triangle values are `values`
    /// (indexed by [`SymmetricPattern::slot`]).
    pub fn factorize(&self, values: &[f64]) -> Result<Factor> {
        if values.len() != self.pattern.nnz() {
            return Err(Error::Dimension(format!(
                "{} values for pattern with {} entries",
                values.len(),
                self.pattern.nnz()
            )));
        }
        let mat = SparseColMatRef::new(self.pattern.symbolic(), values);
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::Numerical(format!("cholesky factorization failed: {e:?}")))?;
        Ok(Factor {
            n: self.pattern.n,
            llt,
        })
    }
}

/// A numeric Cholesky factor.
pub struct Factor {
    n: usize,
    llt: Llt<usize, f64>,
}

impl Factor {
    /// Solves `A · X = B` column by column.
    pub fn solve(&self, rhs: &RowMatrix) -> RowMatrix {
        assert_eq!(rhs.rows(), self.n);
        let m = rhs.cols();
        let mut b = Mat::<f64>::from_fn(self.n, m, |i, j| rhs[(i, j)]);
        self.llt.solve_in_place(b.as_mut());
        RowMatrix::from_fn(self.n, m, |i, j| b[(i, j)])
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let b = RowMatrix::from_vec(rhs.len(), 1, rhs.to_vec()).expect("column");
        self.solve(&b).into_vec()
    }
}

/// Accumulates values on a [`SymmetricPattern`].
pub struct PatternValues<'a> {
    pattern: &'a SymmetricPattern,
    values: Vec<f64>,
}

impl<'a> PatternValues<'a> {
    pub fn new(pattern: &'a SymmetricPattern) -> Self {
        Self {
            pattern,
            values: vec![0.0; pattern.nnz()],
        }
    }

    /// Adds `v` at `(i, j)`; for `i != j` the mirrored entry is implied.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        match self.pattern.slot(i, j) {
            Some(s) => {
                self.values[s] += v;
                Ok(())
            }
            None => Err(Error::Dimension(format!("entry ({i}, {j}) outside pattern"))),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Eigen-decomposition of a dense symmetric matrix given row-major.
/// Eigenvalues ascending; eigenvector `k` is column `k` of the returned
/// row-major `n × n` matrix.
pub fn sym_eigen(n: usize, a: &[f64]) -> Result<(Vec<f64>, RowMatrix)> {
    assert_eq!(a.len(), n * n);
    let mat = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
    let evd = mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigen-decomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let vals = (0..n).map(|i| s[i]).collect();
    Ok((vals, RowMatrix::from_fn(n, n, |i, j| u[(i, j)])))
}

/// Lowest `k` eigenpairs of the generalized problem `W ψ = λ M ψ` with `M`
/// diagonal and positive, by shift-invert block subspace iteration.
/// Eigenvectors are `M`-orthonormal; eigenvalues ascending.
pub fn lowest_generalized_eigenpairs(
    w: &Csr,
    mass: &[f64],
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, RowMatrix)> {
    let n = w.n();
    if k > n {
        return Err(Error::InvalidInput(format!("{k} eigenpairs requested for n = {n}")));
    }
    if n <= 1200 {
        return dense_generalized(w, mass, k);
    }
    let block = (k + k / 2 + 8).min(n);
    // Shift so that W + σM is positive definite even though W annihilates constants.
    let scale = (0..n).map(|i| w.get(i, i) / mass[i]).fold(0.0, f64::max);
    let sigma = 1e-6 * scale.max(1.0);
    let pattern = w.lower_pattern();
    let solver = SpdSolver::new(pattern)?;
    let mut vals = PatternValues::new(solver.pattern());
    for i in 0..n {
        for (j, v) in w.row(i) {
            if j <= i {
                vals.add(i, j, v)?;
            }
        }
        vals.add(i, i, sigma * mass[i])?;
    }
    let factor = solver.factorize(&vals.into_values())?;

    let mut rng_state = 0x9E37_79B9_7F4A_7C15u64;
    let mut q = RowMatrix::from_fn(n, block, |_, _| {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    let mut prev: Vec<f64> = vec![f64::INFINITY; k];
    for _ in 0..max_iter {
        let mut mq = q.clone();
        mq.scale_rows(mass);
        let z = factor.solve(&mq);
        let (ritz, vecs) = rayleigh_ritz(w, mass, &z)?;
        q = vecs;
        let converged = ritz
            .iter()
            .zip(&prev)
            .take(k)
            .all(|(a, b)| (a - b).abs() <= tol * a.abs().max(1.0));
        prev = ritz;
        if converged {
            break;
        }
    }
    let basis = RowMatrix::from_fn(n, k, |i, j| q[(i, j)]);
    prev.truncate(k);
    Ok((prev, basis))
}

/// Rayleigh–Ritz on the span of `z`: returns ascending Ritz values and
/// M-orthonormal Ritz vectors.
fn rayleigh_ritz(w: &Csr, mass: &[f64], z: &RowMatrix) -> Result<(Vec<f64>, RowMatrix)> {
    let n = z.rows();
    let b = z.cols();
    let wz = w.mul(z);
    let mut mz = z.clone();
    mz.scale_rows(mass);
    let gram = |x: &RowMatrix, y: &RowMatrix| {
        let mut g = vec![0.0; b * b];
        for i in 0..n {
            let xr = x.row(i);
            let yr = y.row(i);
            for p in 0..b {
                for q in 0..b {
                    g[p * b + q] += xr[p] * yr[q];
                }
            }
        }
        g
    };
    let kw = gram(z, &wz);
    let km = gram(z, &mz);
    // Whiten with respect to the mass Gram matrix, dropping near-null directions.
    let (mvals, mvecs) = sym_eigen(b, &km)?;
    let top = mvals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..b).filter(|&i| mvals[i] > 1e-12 * top).collect();
    let r = keep.len();
    let tmat = RowMatrix::from_fn(b, r, |i, c| mvecs[(i, keep[c])] / mvals[keep[c]].sqrt());
    let mut reduced = vec![0.0; r * r];
    for p in 0..r {
        for q in 0..r {
            let mut s = 0.0;
            for a in 0..b {
                for c in 0..b {
                    s += tmat[(a, p)] * kw[a * b + c] * tmat[(c, q)];
                }
            }
            reduced[p * r + q] = s;
        }
    }
    let (vals, vecs) = sym_eigen(r, &reduced)?;
    let coeff = RowMatrix::from_fn(b, r, |a, c| (0..r).map(|p| tmat[(a, p)] * vecs[(p, c)]).sum());
    let out = RowMatrix::from_fn(n, r, |i, c| {
        let zi = z.row(i);
        (0..b).map(|a| zi[a] * coeff[(a, c)]).sum()
    });
    Ok((vals, out))
}

fn dense_generalized(w: &Csr, mass: &[f64], k: usize) -> Result<(Vec<f64>, RowMatrix)> {
    let n = w.n();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in w.row(i) {
            a[i * n + j] = v * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let (vals, vecs) = sym_eigen(n, &a)?;
    let basis = RowMatrix::from_fn(n, k, |i, c| vecs[(i, c)] * inv_sqrt[i]);
    Ok((vals[..k].to_vec(), basis))
}
