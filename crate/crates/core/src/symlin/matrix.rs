use nalgebra::{DMatrix, DVector};

use super::{inf_norm, tol};
use crate::error::{check_dim, Error, Result};

/// A real symmetric matrix, stored exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Accepts `m` if it is square, finite and symmetric to within
    /// [`tol::SYM`] relative to its ∞-norm; stores `(m + mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("matrix has dimension 0"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let asym = inf_norm(&(&m - m.transpose()));
        if asym > tol::SYM * inf_norm(&m) {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without a tolerance check, for products that are
    /// symmetric in exact arithmetic.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "row of length {} in a {n}-row matrix",
                bad.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 + &other.0))
    }

    /// uᵀ S u
    pub fn quadratic_form(&self, u: &UnitVector) -> Result<f64> {
        check_dim(self.dim(), u.dim())?;
        Ok(u.as_vector().dot(&(&self.0 * u.as_vector())))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// A unit-norm direction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    /// Accepts `v` if its norm is 1 within [`tol::UNIT`].
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("vector has dimension 0"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vector has non-finite entries"));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > tol::UNIT {
            return Err(Error::invalid(format!("vector norm {norm} is not 1")));
        }
        Ok(Self(v))
    }

    /// Scales a nonzero vector to unit length.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("vector is empty or non-finite"));
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(Self(v / norm))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    /// The standard basis vector `e_i` of ℝⁿ.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid(format!("basis index {i} out of range for dim {n}")));
        }
        Ok(Self(DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })))
    }

    pub(crate) fn from_unit_unchecked(v: DVector<f64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.dot(&other.0)
    }

    /// uuᵀ
    pub fn outer(&self) -> DMatrix<f64> {
        &self.0 * self.0.transpose()
    }

    /// u ⊗ v, a unit vector of the joint space.
    pub fn kron(&self, other: &UnitVector) -> UnitVector {
        Self(self.0.kronecker(&other.0))
    }
}
