//! Dense complex linear algebra for small dimensions.
//!
//! Vectors and matrices are thin wrappers over `nalgebra` storage. Sizes stay
//! small (local operators are d×d, bipartite operators d²×d² with d up to
//! about 16), so everything is dense and eagerly evaluated.
//!
//! Numerical rank follows one rule everywhere: a singular value counts as zero
//! when it is at most `rank_tol` times the largest singular value.

use std::f64::consts::PI;
use std::ops::Index;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Numerical thresholds shared by every certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative threshold for numerical rank and nullspace membership.
    pub rank_tol: f64,
    /// Absolute threshold for unitarity and Hermiticity residuals.
    pub unit_tol: f64,
    /// Eigenvalues above `-psd_tol` count as nonnegative.
    pub psd_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            unit_tol: 1e-12,
            psd_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn new(rank_tol: f64, unit_tol: f64, psd_tol: f64) -> Result<Self> {
        for (name, value) in [
            ("rank_tol", rank_tol),
            ("unit_tol", unit_tol),
            ("psd_tol", psd_tol),
        ] {
            if !(value > 0.0 && value < 1e-3) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(Self {
            rank_tol,
            unit_tol,
            psd_tol,
        })
    }
}

/// `exp(2πi·k/d)`, with `k` reduced modulo `d` first so large products of
/// indices do not lose precision.
pub fn root_of_unity(k: i64, d: usize) -> C64 {
    let r = k.rem_euclid(d as i64);
    if r == 0 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar(1.0, 2.0 * PI * r as f64 / d as f64)
}

fn check_finite(values: &[C64]) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn to_pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

/// A column vector of complex amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorRepr", into = "VectorRepr")]
pub struct CVector(DVector<C64>);

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    dim: usize,
    amps: Vec<[f64; 2]>,
}

impl TryFrom<VectorRepr> for CVector {
    type Error = Error;

    fn try_from(repr: VectorRepr) -> Result<Self> {
        if repr.amps.len() != repr.dim {
            return Err(Error::DimensionMismatch {
                expected: repr.dim,
                found: repr.amps.len(),
            });
        }
        CVector::from_amplitudes(from_pairs(&repr.amps))
    }
}

impl From<CVector> for VectorRepr {
    fn from(v: CVector) -> Self {
        VectorRepr {
            dim: v.dim(),
            amps: to_pairs(v.amps()),
        }
    }
}

impl CVector {
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty("vector"));
        }
        check_finite(&amps)?;
        Ok(Self(DVector::from_vec(amps)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amps(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.0.dotc(&other.0))
    }

    pub fn scale(&self, factor: C64) -> CVector {
        CVector(&self.0 * factor)
    }

    /// `self + factor·other`.
    pub fn add_scaled(&self, factor: C64, other: &CVector) -> Result<CVector> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(CVector(&self.0 + &other.0 * factor))
    }

    /// Unit vector in the same direction; the zero vector is returned unchanged.
    pub fn normalized(&self) -> CVector {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            CVector(&self.0 / C64::new(n, 0.0))
        }
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &CVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl Index<usize> for CVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

/// A dense complex matrix. Serialized row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CMatrix(DMatrix<C64>);

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        CMatrix::from_row_major(repr.rows, repr.cols, from_pairs(&repr.entries))
    }
}

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        MatrixRepr {
            rows: m.rows(),
            cols: m.cols(),
            entries: to_pairs(&m.row_major()),
        }
    }
}

impl CMatrix {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("matrix"));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        check_finite(&entries)?;
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let first = columns.first().ok_or(Error::Empty("column list"))?;
        let rows = first.dim();
        if let Some(bad) = columns.iter().find(|c| c.dim() != rows) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: bad.dim(),
            });
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    /// Rank-one operator `|a⟩⟨b|`.
    pub fn outer(a: &CVector, b: &CVector) -> Self {
        Self(a.as_dvector() * b.as_dvector().adjoint())
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector(self.0.column(j).into_owned())
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix(self.0.adjoint())
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        CMatrix(&self.0 * factor)
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: other.rows(),
            });
        }
        Ok(CMatrix(&self.0 * &other.0))
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_shape(other)?;
        Ok(CMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_shape(other)?;
        Ok(CMatrix(&self.0 - &other.0))
    }

    fn same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows() != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: other.rows(),
            });
        }
        if self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: other.cols(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if self.cols() != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: v.dim(),
            });
        }
        Ok(CVector(&self.0 * v.as_dvector()))
    }

    /// `A ⊗ B`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        CMatrix(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `‖M − M†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint()).norm()
    }

    /// `‖M†M − I‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        (self.0.adjoint() * &self.0 - DMatrix::<C64>::identity(n, n)).norm()
    }

    pub fn is_unitary(&self, tol: &Tolerances) -> bool {
        self.unitarity_residual() <= tol.unit_tol
    }
}

/// `a ⊗ b`: entry `i·b.dim + j` holds `a[i]·b[j]`.
pub fn tensor_product(a: &CVector, b: &CVector) -> CVector {
    CVector(a.as_dvector().kronecker(b.as_dvector()))
}

/// `G[a][b] = ⟨v_a|v_b⟩`.
pub fn gram_matrix(vs: &[CVector]) -> Result<CMatrix> {
    let columns = CMatrix::from_columns(vs)?;
    Ok(CMatrix(columns.0.adjoint() * &columns.0))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `Q·diag(λ)·Q†`.
    pub fn reconstruct(&self) -> CMatrix {
        let q = &self.vectors.0;
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| C64::new(x, 0.0)),
        ));
        CMatrix(q * lambda * q.adjoint())
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

pub fn hermitian_eigen(m: &CMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let residual = m.hermiticity_residual();
    if residual > tol.unit_tol * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let symmetric = (&m.0 + m.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(symmetric);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.rows();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        values,
        vectors: CMatrix(vectors),
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    hermitian_eigen(m, tol).map(|e| e.values)
}

/// Right nullspace of a matrix together with its numerical rank.
#[derive(Debug, Clone)]
pub struct Nullspace {
    pub dim: usize,
    pub rank: usize,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Orthonormal basis of the nullspace.
    pub basis: Vec<CVector>,
}

pub fn nullspace(m: &CMatrix, tol: &Tolerances) -> Nullspace {
    let (rows, cols) = (m.rows(), m.cols());
    // A wide matrix is padded with zero rows so the SVD yields a full set of
    // right singular vectors.
    let a = if rows < cols {
        let mut padded = DMatrix::<C64>::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(&m.0);
        padded
    } else {
        m.0.clone()
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let sigma = svd.singular_values;
    let largest = sigma.iter().copied().fold(0.0, f64::max);
    let threshold = tol.rank_tol * largest;
    let mut basis = Vec::new();
    let mut rank = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if largest > 0.0 && s > threshold {
            rank += 1;
        } else {
            let v = v_t.row(i).adjoint();
            basis.push(CVector(v));
        }
    }
    let mut singular_values: Vec<f64> = sigma.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    singular_values.truncate(rows.min(cols));
    Nullspace {
        dim: cols - rank,
        rank,
        singular_values,
        basis,
    }
}

pub fn numerical_rank(m: &CMatrix, tol: &Tolerances) -> usize {
    nullspace(m, tol).rank
}

pub fn determinant(m: &CMatrix) -> Result<C64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(m.0.clone().determinant())
}

/// The unnormalized Fourier matrix `F[k][p] = exp(2πi·kp/d)`.
pub fn fourier_matrix(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |k, p| root_of_unity((k * p) as i64, d))
}
