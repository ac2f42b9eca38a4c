//! Dense and sparse direct solvers.
//!
//! Dense blocks use partial-pivot LU from `nalgebra` with an explicit
//! relative pivot threshold. The global system is stored column-compressed.
//! Symmetric systems are factorized with the supernodal `LBL^T` from `faer`
//! (AMD ordering, Bunch-Kaufman pivoting inside supernodes); general ones
//! with its sparse LU.

use faer::linalg::solvers::Solve;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::SupernodalThreshold;
use faer::{Par, Side};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;

/// Relative pivot threshold for dense factorizations.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Square or rectangular matrix in compressed sparse column form.
///
/// Row indices are sorted within each column and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix with a fixed sparsity pattern; `columns[j]` lists the
    /// (not necessarily sorted) row indices of column `j`.
    pub fn from_pattern(nrows: usize, columns: Vec<Vec<usize>>) -> SparseMatrix {
        let ncols = columns.len();
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for mut rows in columns {
            rows.sort_unstable();
            rows.dedup();
            assert!(rows.last().is_none_or(|&r| r < nrows), "row index out of range");
            row_idx.extend_from_slice(&rows);
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; row_idx.len()];
        SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Matrix from raw compressed-column arrays; rows must be strictly
    /// increasing within each column.
    pub fn from_csc(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<SparseMatrix, SolveError> {
        let bad = |msg: &str| Err(SolveError::Factorization(format!("invalid CSC arrays: {msg}")));
        if col_ptr.len() != ncols + 1 || col_ptr[0] != 0 || col_ptr[ncols] != row_idx.len() {
            return bad("column pointers");
        }
        if values.len() != row_idx.len() {
            return bad("value count");
        }
        for j in 0..ncols {
            if col_ptr[j] > col_ptr[j + 1] {
                return bad("column pointers decrease");
            }
            let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            if rows.windows(2).any(|w| w[0] >= w[1]) || rows.last().is_some_and(|&r| r >= nrows) {
                return bad("row indices unsorted or out of range");
            }
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
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

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of entry `(row, col)` in the value array, if stored.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()]
            .binary_search(&row)
            .ok()
            .map(|p| range.start + p)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.values[p])
    }

    /// Adds `value` to a stored entry. Panics if the entry is not in the pattern.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let p = self
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside the sparsity pattern"));
        self.values[p] += value;
    }

    /// Adds a dense block at the given global row and column indices.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], block: &DMatrix<f64>) {
        for (j, &c) in cols.iter().enumerate() {
            let range = self.col_ptr[c]..self.col_ptr[c + 1];
            let col_rows = &self.row_idx[range.clone()];
            for (i, &r) in rows.iter().enumerate() {
                let p = col_rows
                    .binary_search(&r)
                    .unwrap_or_else(|_| panic!("entry ({r}, {c}) outside the sparsity pattern"));
                self.values[range.start + p] += block[(i, j)];
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, xj) in x.iter().enumerate() {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.nrows];
        for (p, v) in self.values.iter().enumerate() {
            rows[self.row_idx[p]] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                d[(self.row_idx[p], j)] += self.values[p];
            }
        }
        d
    }

    fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        let symbolic = SymbolicSparseColMatRef::new_checked(
            self.nrows,
            self.ncols,
            &self.col_ptr,
            None,
            &self.row_idx,
        );
        SparseColMatRef::new(symbolic, &self.values)
    }
}

/// Accumulates `(row, col, value)` entries; duplicates are summed in
/// insertion order when the matrix is finalized.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.nrows && col < self.ncols, "entry ({row}, {col}) out of range");
        self.entries.push((row, col, value));
    }

    pub fn push_block(&mut self, rows: &[usize], cols: &[usize], block: &DMatrix<f64>) {
        for (j, &c) in cols.iter().enumerate() {
            for (i, &r) in rows.iter().enumerate() {
                let v = block[(i, j)];
                if v != 0.0 {
                    self.push(r, c, v);
                }
            }
        }
    }

    pub fn finalize(mut self) -> SparseMatrix {
        // stable: duplicates keep insertion order, so sums are reproducible
        self.entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; self.ncols + 1];
        let mut row_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for j in 0..self.ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Partial-pivot LU of a dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    /// Factorizes `a`; fails when a pivot falls below
    /// [`PIVOT_THRESHOLD`] times the largest entry of `a`.
    pub fn new(a: &DMatrix<f64>) -> Result<DenseLu, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let scale = a.amax();
        let lu = a.clone().lu();
        let u = lu.u();
        for i in 0..a.nrows() {
            let pivot = u[(i, i)].abs();
            if !(pivot > PIVOT_THRESHOLD * scale) {
                return Err(SolveError::Singular {
                    pivot: i,
                    magnitude: pivot,
                });
            }
        }
        Ok(DenseLu { lu })
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(b).expect("factorization checked nonsingular")
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(b).expect("factorization checked nonsingular")
    }
}

/// Solves `A X = B` for a dense square `A`.
pub fn dense_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, SolveError> {
    if b.nrows() != a.nrows() {
        return Err(SolveError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(DenseLu::new(a)?.solve(b))
}

/// Sparse LU factorization, reusable for several right-hand sides.
pub struct SparseLu<'a> {
    matrix: &'a SparseMatrix,
    lu: Lu<usize, f64>,
}

impl<'a> SparseLu<'a> {
    pub fn new(matrix: &'a SparseMatrix) -> Result<SparseLu<'a>, SolveError> {
        if matrix.nrows != matrix.ncols {
            return Err(SolveError::NotSquare {
                rows: matrix.nrows,
                cols: matrix.ncols,
            });
        }
        let a = matrix.as_faer();
        let symbolic = SymbolicLu::try_new(a.symbolic())
            .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic, a).map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => SolveError::Singular {
                pivot: index,
                magnitude: 0.0,
            },
            other => SolveError::Factorization(format!("{other:?}")),
        })?;
        Ok(SparseLu { matrix, lu })
    }

    /// Solves with two steps of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.matrix.nrows;
        refine(self.matrix, rhs, |b| {
            let mut m = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
            self.lu.solve_in_place(m.as_mut());
            (0..n).map(|i| m[(i, 0)]).collect()
        })
    }
}

/// Default limit on the memory taken by a symmetric factor.
pub const DEFAULT_FACTOR_BUDGET_BYTES: usize = 5 << 29;

/// Supernodal `LBL^T` factorization of a symmetric, possibly indefinite
/// matrix. Only the lower triangle is read.
pub struct SparseLblt<'a> {
    matrix: &'a SparseMatrix,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
}

impl<'a> SparseLblt<'a> {
    /// Factorizes `matrix`, refusing when the factor would need more than
    /// `budget` bytes.
    pub fn new(matrix: &'a SparseMatrix, budget: usize) -> Result<SparseLblt<'a>, SolveError> {
        let n = matrix.nrows;
        if n != matrix.ncols {
            return Err(SolveError::NotSquare {
                rows: n,
                cols: matrix.ncols,
            });
        }
        let a = matrix.as_faer();
        let symbolic = factorize_symbolic_cholesky(
            a.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
                ..Default::default()
            },
        )
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        let required = symbolic.len_val() * std::mem::size_of::<f64>();
        if required > budget {
            return Err(SolveError::MemoryBudget { required, budget });
        }
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut perm_fwd = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let par = Par::Seq;
        let mut mem = MemBuffer::try_new(
            symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()),
        )
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut perm_fwd,
            &mut perm_inv,
            a,
            Side::Lower,
            par,
            MemStack::new(&mut mem),
            Default::default(),
        );
        Ok(SparseLblt {
            matrix,
            symbolic,
            values,
            subdiag,
            perm_fwd,
            perm_inv,
        })
    }

    /// Bytes held by the factor values.
    pub fn factor_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }

    /// Solves with two steps of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.matrix.nrows;
        let perm = PermRef::new_checked(&self.perm_fwd, &self.perm_inv, n);
        let lblt = IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        refine(self.matrix, rhs, |b| {
            let mut m = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
            lblt.solve_in_place_with_conj(faer::Conj::No, m.as_mut(), Par::Seq, MemStack::new(&mut mem));
            (0..n).map(|i| m[(i, 0)]).collect()
        })
    }
}

/// Direct solve followed by two steps of iterative refinement.
fn refine(matrix: &SparseMatrix, rhs: &[f64], mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Vec<f64>, SolveError> {
    let n = matrix.nrows;
    if rhs.len() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut x = apply(rhs);
    for _ in 0..2 {
        let ax = matrix.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = apply(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(SolveError::Singular {
            pivot: i,
            magnitude: f64::NAN,
        });
    }
    Ok(x)
}

/// Solves `M x = rhs` with a sparse direct factorization.
pub fn sparse_lu_solve(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    SparseLu::new(m)?.solve(rhs)
}

/// Relative residual `|M x - b|_inf / (|M|_inf |x|_inf + |b|_inf)`.
pub fn relative_residual(m: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = m.mul_vec(x);
    let r = ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let denom = m.norm_inf() * xn + bn;
    if denom == 0.0 {
        0.0
    } else {
        r / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = dense_solve(&DMatrix::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn hilbert_against_exact_inverse() {
        // exact inverse of the 4x4 Hilbert matrix (integer entries)
        let inv = DMatrix::from_row_slice(
            4,
            4,
            &[
                16.0, -120.0, 240.0, -140.0, -120.0, 1200.0, -2700.0, 1680.0, 240.0, -2700.0, 6480.0,
                -4200.0, -140.0, 1680.0, -4200.0, 2800.0,
            ],
        );
        let h = DMatrix::from_fn(4, 4, |i, j| 1.0 / (i + j + 1) as f64);
        let b = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
        let x = dense_solve(&h, &b).unwrap();
        let exact = &inv * &b;
        assert!((x - &exact).amax() < 1e-8 * exact.amax());
    }

    #[test]
    fn singular_dense_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = dense_solve(&a, &DMatrix::identity(2, 1));
        assert!(matches!(r, Err(SolveError::Singular { .. })));
    }

    #[test]
    fn dense_residual_bound() {
        let a = DMatrix::from_fn(6, 6, |i, j| if i == j { 4.0 } else { 1.0 / (1.0 + (i + 2 * j) as f64) });
        let b = DMatrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let x = dense_solve(&a, &b).unwrap();
        for c in 0..3 {
            let r = (&a * x.column(c) - b.column(c)).amax();
            assert!(r <= 1e-10 * a.amax() * x.column(c).amax());
        }
    }

    #[test]
    fn triplets_sum_duplicates() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 2.0);
        t.push(0, 0, 3.0);
        t.push(1, 1, 5.0);
        let m = t.finalize();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.row_idx(), &[0, 1, 1]);
    }

    #[test]
    fn diagonal_sparse_solve() {
        let mut t = TripletBuilder::new(4, 4);
        for i in 0..4 {
            t.push(i, i, (i + 1) as f64);
        }
        let m = t.finalize();
        let x = sparse_lu_solve(&m, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_tridiagonal_matches_dense() {
        let n = 10;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
                t.push(i - 1, i, -1.0);
            }
        }
        let m = t.finalize();
        let rhs = vec![1.0; n];
        let x = sparse_lu_solve(&m, &rhs).unwrap();
        let xd = dense_solve(&m.to_dense(), &DMatrix::from_column_slice(n, 1, &rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[(i, 0)]).abs() < 1e-12);
            // exact solution i (n + 1 - i) / 2 with 1-based i
            let e = ((i + 1) * (n - i)) as f64 / 2.0;
            assert!((x[i] - e).abs() < 1e-11);
        }
        assert!(relative_residual(&m, &x, &rhs) < 1e-15);
    }

    #[test]
    fn pattern_accumulation() {
        let mut m = SparseMatrix::from_pattern(3, vec![vec![0, 2], vec![1], vec![2, 0]]);
        m.add_block(&[0, 2], &[0, 2], &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        m.add(1, 1, 7.0);
        assert_eq!(m.to_dense(), DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 7.0, 0.0, 3.0, 0.0, 4.0]));
    }

    #[test]
    fn symmetric_indefinite_saddle_point() {
        // [[I, B^T], [B, 0]] with a zero diagonal block
        let n = 6;
        let mut t = TripletBuilder::new(n + 2, n + 2);
        for i in 0..n {
            t.push(i, i, 1.0 + i as f64);
        }
        for (r, cols) in [(n, [0, 2, 4]), (n + 1, [1, 3, 5])] {
            for c in cols {
                t.push(r, c, 1.0);
                t.push(c, r, 1.0);
            }
        }
        let m = t.finalize();
        let b: Vec<f64> = (0..n + 2).map(|i| (i as f64).sin()).collect();
        let f = SparseLblt::new(&m, DEFAULT_FACTOR_BUDGET_BYTES).unwrap();
        let x = f.solve(&b).unwrap();
        let y = sparse_lu_solve(&m, &b).unwrap();
        assert!(relative_residual(&m, &x, &b) < 1e-14);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn factor_budget_is_enforced() {
        let n = 50;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let m = t.finalize();
        assert!(matches!(SparseLblt::new(&m, 16), Err(SolveError::MemoryBudget { .. })));
        assert!(SparseLblt::new(&m, 1 << 20).unwrap().factor_bytes() <= 1 << 20);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut t = TripletBuilder::new(3, 3);
        t.push(0, 0, 2.0);
        t.push(1, 1, 3.0);
        t.push(2, 2, 1.0);
        t.push(0, 2, 1.0);
        let x = sparse_lu_solve(&t.finalize(), &[0.0; 3]).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }
}
