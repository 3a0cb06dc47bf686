//! Dense linear algebra used by the proximal operators and the solvers.
//!
//! [`DenseMatrix`] stores entries in row-major order. Factorizations are
//! delegated to `nalgebra` and re-sorted so that eigenvalues and singular
//! values always come out in descending order.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative symmetry defect accepted by [`sym_eig`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Iteration cap of [`spectral_radius_gram`].
pub const POWER_ITERATION_CAP: usize = 5000;

/// A dense real matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries supplied for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// A single-column matrix.
    pub fn column_vector(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copies the columns `range` into a new matrix.
    pub fn select_columns(&self, range: std::ops::Range<usize>) -> Self {
        Self::from_fn(self.rows, range.len(), |i, j| self[(i, range.start + j)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `‖M − Mᵀ‖_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - self[(j, i)];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Mᵀ y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_t dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `U diag(d) Vᵀ` for `U` of shape `r×k`, `V` of shape `c×k`.
    pub fn from_factors(u: &Self, d: &[f64], v: &Self) -> Self {
        assert_eq!(u.cols, d.len());
        assert_eq!(v.cols, d.len());
        let mut out = Self::zeros(u.rows, v.rows);
        for (k, &dk) in d.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            for i in 0..u.rows {
                let a = u[(i, k)] * dk;
                if a == 0.0 {
                    continue;
                }
                for j in 0..v.rows {
                    out.data[i * v.rows + j] += a * v[(j, k)];
                }
            }
        }
        out
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky.
    pub fn spd_inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let chol = nalgebra::Cholesky::new(self.symmetrized().to_nalgebra())
            .ok_or_else(|| Error::Argument("matrix is not positive definite".into()))?;
        Ok(Self::from_nalgebra(&chol.inverse()))
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky_lower(&self) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(self.symmetrized().to_nalgebra())
            .ok_or_else(|| Error::Argument("matrix is not positive definite".into()))?;
        Ok(Self::from_nalgebra(&chol.l()))
    }

    /// `log det` of a symmetric matrix, or `None` when it is not positive definite.
    pub fn spd_log_det(&self) -> Option<f64> {
        if !self.is_square() || !self.is_finite() {
            return None;
        }
        let chol = nalgebra::Cholesky::new(self.symmetrized().to_nalgebra())?;
        let l = chol.l();
        Some((0..self.rows).map(|i| 2.0 * l[(i, i)].ln()).sum())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

fn zip_with(a: &DenseMatrix, b: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
    assert_eq!(a.shape(), b.shape(), "elementwise shape mismatch");
    DenseMatrix { rows: a.rows, cols: a.cols, data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect() }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        zip_with(self, rhs, |a, b| a + b)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        zip_with(self, rhs, |a, b| a - b)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: f64) -> DenseMatrix {
        self.scale(rhs)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// Eigendecomposition `M = U diag(σ) Uᵀ` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigResult {
    /// Orthogonal eigenvector basis, one eigenvector per column.
    pub basis: DenseMatrix,
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
}

impl SymEigResult {
    /// `U diag(f(σ)) Uᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d: Vec<f64> = self.eigenvalues.iter().map(|&s| f(s)).collect();
        DenseMatrix::from_factors(&self.basis, &d, &self.basis)
    }
}

/// Thin singular value decomposition `M = U diag(Σ) Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub left: DenseMatrix,
    /// Nonnegative, descending.
    pub singulars: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d: Vec<f64> = self.singulars.iter().map(|&s| f(s)).collect();
        DenseMatrix::from_factors(&self.left, &d, &self.right)
    }
}

/// Descending permutation; the sort is stable so ties keep factorization order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Symmetric eigendecomposition. The input is symmetrized as `(M + Mᵀ)/2`
/// before factoring.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEigResult> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("sym_eig needs a square matrix, got {}x{}", m.rows, m.cols)));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("sym_eig input"));
    }
    let scale = m.frobenius_norm();
    let defect = m.symmetry_defect();
    if defect > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric(defect / scale));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(SymEigResult { basis: DenseMatrix::zeros(0, 0), eigenvalues: Vec::new() });
    }
    let eig = nalgebra::SymmetricEigen::new(m.symmetrized().to_nalgebra());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&values);
    let basis = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    Ok(SymEigResult { basis, eigenvalues })
}

/// Thin SVD with `r = min(rows, cols)` singular triplets.
pub fn svd(m: &DenseMatrix) -> Result<SvdResult> {
    if m.is_empty() {
        return Err(Error::Dimension("svd of an empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let dec = nalgebra::SVD::new(m.to_nalgebra(), true, true);
    let u = dec.u.as_ref().expect("left vectors requested");
    let vt = dec.v_t.as_ref().expect("right vectors requested");
    let values: Vec<f64> = dec.singular_values.iter().copied().collect();
    let order = descending_order(&values);
    let r = values.len();
    let left = DenseMatrix::from_fn(m.rows, r, |i, j| u[(i, order[j])]);
    let right = DenseMatrix::from_fn(m.cols, r, |i, j| vt[(order[j], i)]);
    let singulars = order.iter().map(|&k| values[k].max(0.0)).collect();
    Ok(SvdResult { left, singulars, right })
}

/// Largest eigenvalue of `AᵀA` by power iteration.
///
/// Starts from the all-ones vector and stops once the Rayleigh quotient
/// changes by less than `tol` relative, or after [`POWER_ITERATION_CAP`]
/// iterations. If the all-ones vector lies in the null space of `A`, the
/// iteration restarts from the unit vector of the heaviest column.
pub fn spectral_radius_gram(a: &DenseMatrix, tol: f64) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Dimension("spectral radius of an empty matrix".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("spectral_radius_gram input"));
    }
    if a.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let n = a.cols();
    let start = vec![1.0 / (n as f64).sqrt(); n];
    let estimate = power_iterate(a, start, tol);
    if estimate > 0.0 {
        return Ok(estimate);
    }
    let heaviest = (0..n).max_by(|&i, &j| norm2(&a.column(i)).total_cmp(&norm2(&a.column(j)))).unwrap_or(0);
    let mut start = vec![0.0; n];
    start[heaviest] = 1.0;
    Ok(power_iterate(a, start, tol))
}

fn power_iterate(a: &DenseMatrix, mut v: Vec<f64>, tol: f64) -> f64 {
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_CAP {
        let av = a.matvec(&v);
        // Rayleigh quotient vᵀAᵀAv with ‖v‖ = 1.
        let next = dot(&av, &av);
        let w = a.matvec_t(&av);
        let wn = norm2(&w);
        if wn == 0.0 || next == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        let change = (next - estimate).abs();
        estimate = next;
        if change <= tol * estimate {
            break;
        }
    }
    // One more Rayleigh quotient on the final direction.
    let av = a.matvec(&v);
    dot(&av, &av).max(estimate)
}
