//! Dense row-major matrices with the handful of factorizations the
//! analyzers need: partially pivoted LU for solves and Cholesky for
//! definiteness tests. Everything is f64; shapes are validated at
//! construction and asserted on arithmetic.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixError {
    /// rows == 0 or cols == 0.
    EmptyShape,
    /// data length does not match rows * cols.
    BadLength { expected: usize, got: usize },
    /// NaN or infinity in the data.
    NonFinite,
    NotSquare,
    /// Pivot below the singularity threshold during LU.
    Singular { column: usize, pivot: f64 },
    /// Cholesky pivot not positive: the matrix is not positive definite.
    NotPositiveDefinite { index: usize, pivot: f64 },
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixError::EmptyShape => write!(f, "matrix must have at least one row and column"),
            MatrixError::BadLength { expected, got } => {
                write!(f, "data length {got} does not match shape ({expected} entries)")
            }
            MatrixError::NonFinite => write!(f, "matrix entries must be finite"),
            MatrixError::NotSquare => write!(f, "operation requires a square matrix"),
            MatrixError::Singular { column, pivot } => {
                write!(f, "matrix is singular to working precision (column {column}, pivot {pivot:e})")
            }
            MatrixError::NotPositiveDefinite { index, pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot:e} at index {index})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MatrixError {}

/// Dense row-major matrix. Always at least 1x1, entries always finite.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:.6}", self[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyShape);
        }
        if data.len() != rows * cols {
            return Err(MatrixError::BadLength { expected: rows * cols, got: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::EmptyShape);
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatrixError::BadLength { expected: cols, got: 0 });
        }
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        assert!(!entries.is_empty(), "empty diagonal");
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matvec");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// v^T M as a vector of length cols.
    pub fn vecmat(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "shape mismatch in vecmat");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let s = v[i];
            if s == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                out[j] += s * self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(math::abs(x)))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| math::abs(*x)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| math::abs(self[(i, j)])).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Stack blocks horizontally. All blocks must share the row count.
    pub fn hstack(blocks: &[&Matrix]) -> Matrix {
        assert!(!blocks.is_empty());
        let rows = blocks[0].rows;
        assert!(blocks.iter().all(|b| b.rows == rows), "row mismatch in hstack");
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out[(i, off + j)] = b[(i, j)];
                }
            }
            off += b.cols;
        }
        out
    }

    /// Stack blocks vertically. All blocks must share the column count.
    pub fn vstack(blocks: &[&Matrix]) -> Matrix {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        assert!(blocks.iter().all(|b| b.cols == cols), "column mismatch in vstack");
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..cols {
                    out[(off + i, j)] = b[(i, j)];
                }
            }
            off += b.rows;
        }
        out
    }

    /// Copy `block` into self with its (0,0) entry at (r, c).
    pub fn set_block(&mut self, r: usize, c: usize, block: &Matrix) {
        assert!(r + block.rows <= self.rows && c + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r + i, c + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r: usize, c: usize, rows: usize, cols: usize) -> Matrix {
        assert!(r + rows <= self.rows && c + cols <= self.cols, "block out of range");
        Matrix::from_fn(rows, cols, |i, j| self[(r + i, c + j)])
    }

    /// Sum of a list of equally shaped matrices.
    pub fn sum(terms: &[&Matrix]) -> Matrix {
        assert!(!terms.is_empty());
        let mut acc = terms[0].clone();
        for t in &terms[1..] {
            acc = acc.add(t);
        }
        acc
    }

    /// All entries >= -tol.
    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.data.iter().all(|&x| x >= -tol)
    }

    /// Off-diagonal entries >= -tol (square only).
    pub fn is_metzler(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self[(i, j)] < -tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square(), "symmetrize requires square");
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Positive diagonal scaling D. Used for similarity scalings D M D^-1 and
/// as the diagonal blocks of LMI witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagScaling {
    entries: Vec<f64>,
}

impl DiagScaling {
    pub fn new(entries: Vec<f64>) -> Result<Self, MatrixError> {
        if entries.is_empty() {
            return Err(MatrixError::EmptyShape);
        }
        if entries.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(MatrixError::NonFinite);
        }
        Ok(DiagScaling { entries })
    }

    pub fn identity(n: usize) -> Self {
        DiagScaling { entries: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::diag(&self.entries)
    }

    /// D M D^-1.
    pub fn similarity(&self, m: &Matrix) -> Matrix {
        assert!(m.is_square() && m.rows() == self.dim(), "scaling dim mismatch");
        Matrix::from_fn(m.rows(), m.cols(), |i, j| self.entries[i] * m[(i, j)] / self.entries[j])
    }

    /// D M (rows scaled).
    pub fn scale_rows(&self, m: &Matrix) -> Matrix {
        assert_eq!(m.rows(), self.dim(), "scaling dim mismatch");
        Matrix::from_fn(m.rows(), m.cols(), |i, j| self.entries[i] * m[(i, j)])
    }

    /// M D^-1 (columns scaled).
    pub fn scale_cols_inv(&self, m: &Matrix) -> Matrix {
        assert_eq!(m.cols(), self.dim(), "scaling dim mismatch");
        Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] / self.entries[j])
    }
}

/// Result of a linear solve: the solution and the achieved residual
/// max-norm, so callers can judge conditioning without re-multiplying.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Matrix,
    pub residual: f64,
}

/// Solve A X = B by LU with partial pivoting. Singularity is declared when
/// a pivot falls below 1e-13 * n * max|A|.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<SolveResult, MatrixError> {
    if !a.is_square() {
        return Err(MatrixError::NotSquare);
    }
    let n = a.rows();
    assert_eq!(b.rows(), n, "shape mismatch in solve");
    let threshold = 1e-13 * n as f64 * a.max_abs_entry().max(f64::MIN_POSITIVE);

    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = math::abs(lu[(k, k)]);
        for i in k + 1..n {
            let v = math::abs(lu[(i, k)]);
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < threshold {
            return Err(MatrixError::Singular { column: k, pivot: best });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }

    let mut x = Matrix::zeros(n, b.cols());
    for col in 0..b.cols() {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[(perm[i], col)];
            for j in 0..i {
                acc -= lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= lu[(i, j)] * x[(j, col)];
            }
            x[(i, col)] = acc / lu[(i, i)];
        }
    }

    let residual = a.mul(&x).sub(b).max_abs_entry();
    Ok(SolveResult { x, residual })
}

/// Cholesky factorization; fails unless the (symmetrized) input is
/// positive definite.
pub fn cholesky(s: &Matrix) -> Result<Matrix, MatrixError> {
    if !s.is_square() {
        return Err(MatrixError::NotSquare);
    }
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.5 * (s[(i, j)] + s[(j, i)]);
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(acc > 0.0) || !acc.is_finite() {
                    return Err(MatrixError::NotPositiveDefinite { index: i, pivot: acc });
                }
                l[(i, i)] = math::sqrt(acc);
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// True iff S (symmetrized) satisfies S + margin*I < 0, decided by a
/// Cholesky factorization of -(S + margin*I).
pub fn symmetric_negdef_check(s: &Matrix, margin: f64) -> Result<bool, MatrixError> {
    if !s.is_square() {
        return Err(MatrixError::NotSquare);
    }
    let n = s.rows();
    let shifted = Matrix::from_fn(n, n, |i, j| {
        let v = -0.5 * (s[(i, j)] + s[(j, i)]);
        if i == j {
            v - margin
        } else {
            v
        }
    });
    Ok(cholesky(&shifted).is_ok())
}

/// Largest eigenvalue of a symmetric matrix, by bisection on the
/// definiteness test: lambda_max(S) < t iff tI - S is positive definite.
/// Accurate to `tol` absolute; never fails on valid symmetric input.
pub fn sym_lambda_max(s: &Matrix, tol: f64) -> f64 {
    assert!(s.is_square(), "lambda_max requires square");
    let sym = s.symmetrized();
    let r = sym.norm_inf();
    let mut lo = -r - 1.0;
    let mut hi = r + 1.0;
    // invariant: lambda_max < hi, lambda_max >= lo
    let shift_pd = |t: f64| -> bool {
        let n = sym.rows();
        let m = Matrix::from_fn(n, n, |i, j| {
            let v = -sym[(i, j)];
            if i == j {
                v + t
            } else {
                v
            }
        });
        cholesky(&m).is_ok()
    };
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if shift_pd(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metzler_accepts_negative_diagonal() {
        let m = Matrix::from_rows(&[vec![-1.0, 0.5], vec![0.2, -2.0]]).unwrap();
        assert!(m.is_metzler(0.0));
        assert!(!m.is_nonnegative(0.0));
    }

    #[test]
    fn metzler_tolerance_absorbs_rounding() {
        let m = Matrix::from_rows(&[vec![-1.0, -1e-12], vec![0.0, -1.0]]).unwrap();
        assert!(m.is_metzler(1e-9));
        assert!(!m.is_metzler(1e-15));
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(matches!(Matrix::new(0, 1, vec![]), Err(MatrixError::EmptyShape)));
        assert!(matches!(Matrix::new(1, 1, vec![f64::NAN]), Err(MatrixError::NonFinite)));
        assert!(matches!(Matrix::new(2, 2, vec![0.0; 3]), Err(MatrixError::BadLength { .. })));
    }

    #[test]
    fn solve_against_hand_inverse() {
        // A = [[-2,0],[1,-1]], B = I: X = A^-1 = [[-0.5,0],[-0.5,-1]].
        let a = Matrix::from_rows(&[vec![-2.0, 0.0], vec![1.0, -1.0]]).unwrap();
        let x = solve_linear(&a, &Matrix::identity(2)).unwrap();
        assert!((x.x[(0, 0)] - -0.5).abs() < 1e-14);
        assert!((x.x[(0, 1)] - 0.0).abs() < 1e-14);
        assert!((x.x[(1, 0)] - -0.5).abs() < 1e-14);
        assert!((x.x[(1, 1)] - -1.0).abs() < 1e-14);
        assert!(x.residual < 1e-14);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve_linear(&a, &Matrix::identity(2)), Err(MatrixError::Singular { .. })));
    }

    #[test]
    fn negdef_check_is_strict() {
        let nd = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(symmetric_negdef_check(&nd, 0.0).unwrap());
        // singular direction: not strictly negative definite
        let sing = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(!symmetric_negdef_check(&sing, 0.0).unwrap());
    }

    #[test]
    fn negdef_margin_shifts_the_test() {
        let m = Matrix::from_rows(&[vec![-0.5, 0.0], vec![0.0, -2.0]]).unwrap();
        assert!(symmetric_negdef_check(&m, 0.4).unwrap());
        assert!(!symmetric_negdef_check(&m, 0.6).unwrap());
    }

    #[test]
    fn lambda_max_matches_hand_eigature() {
        // [[-3,1],[1,-1]]: eigenvalues -2 +- sqrt(2).
        let s = Matrix::from_rows(&[vec![-3.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let want = -2.0 + 2.0_f64.sqrt();
        assert!((sym_lambda_max(&s, 1e-12) - want).abs() < 1e-10);
    }

    #[test]
    fn scaling_similarity() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap();
        let d = DiagScaling::new(vec![1.0, 2.0]).unwrap();
        let s = d.similarity(&m);
        assert!((s[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((s[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stacking_round_trips() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let v = Matrix::vstack(&[&a, &b]);
        assert_eq!(v.rows(), 2);
        assert_eq!(v[(1, 0)], 3.0);
        let h = Matrix::hstack(&[&a, &b]);
        assert_eq!(h.cols(), 4);
        assert_eq!(h[(0, 3)], 4.0);
    }
}
