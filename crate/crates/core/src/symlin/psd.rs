use nalgebra::{DMatrix, DVector};

use super::functions::{eigendecompose, sign_normalize};
use super::{tol, OrthonormalBasis, SymmetricMatrix, UnitVector};
use crate::error::{Error, Result};

/// Symmetric positive semidefinite matrix with its spectral data.
///
/// Eigenvalues are sorted descending; those at or below the rank threshold
/// `τ_rank · max(1, λ_max)` are stored as exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    base: SymmetricMatrix,
    eigvals: DVector<f64>,
    eigvecs: OrthonormalBasis,
    rank: usize,
    range: OrthonormalBasis,
}

impl PsdMatrix {
    pub fn new(s: SymmetricMatrix) -> Result<Self> {
        let eig = eigendecompose(&s)?;
        let mut values = eig.values;
        let scale = tol::spectral_scale(values[0]);
        let min = values[values.len() - 1];
        if min < -tol::PSD * scale {
            return Err(Error::invalid(format!(
                "matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        let rank = clamp_and_rank(&mut values);
        let range = OrthonormalBasis::from_cols_unchecked(eig.vectors.columns().columns(0, rank).into_owned());
        Ok(Self {
            base: s,
            eigvals: values,
            eigvecs: eig.vectors,
            rank,
            range,
        })
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymmetricMatrix::new(m)?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymmetricMatrix::from_rows(rows)?)
    }

    /// Σ λᵢ vᵢvᵢᵀ from `k` nonnegative values and `n × k` orthonormal
    /// columns; the zero eigenspace is filled in by orthonormal completion.
    pub(crate) fn from_spectrum(values: &[f64], vectors: &DMatrix<f64>) -> Result<Self> {
        let n = vectors.nrows();
        debug_assert_eq!(values.len(), vectors.ncols());
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("spectrum is negative or non-finite"));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        let mut full = DMatrix::zeros(n, n);
        let mut vals = DVector::zeros(n);
        for (slot, &i) in order.iter().enumerate() {
            full.set_column(slot, &vectors.column(i));
            vals[slot] = values[i];
        }
        let k = values.len();
        let partial = OrthonormalBasis::from_cols_unchecked(full.columns(0, k).into_owned());
        let rest = partial.complement();
        full.columns_mut(k, n - k).copy_from(rest.columns());
        sign_normalize(&mut full);
        let rank = clamp_and_rank(&mut vals);
        let top = full.columns(0, rank);
        let scaled = DMatrix::from_fn(n, rank, |i, j| top[(i, j)] * vals[j]);
        let base = SymmetricMatrix::symmetrize(scaled * top.transpose());
        Ok(Self {
            base,
            eigvals: vals,
            range: OrthonormalBasis::from_cols_unchecked(top.into_owned()),
            eigvecs: OrthonormalBasis::from_cols_unchecked(full),
            rank,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_spectrum(&vec![1.0; n], &DMatrix::identity(n, n)).expect("identity spectrum")
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_spectrum(&[], &DMatrix::zeros(n, 0)).expect("empty spectrum")
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(SymmetricMatrix::from_diagonal(d)?)
    }

    /// The dyad uuᵀ.
    pub fn dyad(u: &UnitVector) -> Self {
        let v = DMatrix::from_column_slice(u.dim(), 1, u.as_slice());
        Self::from_spectrum(&[1.0], &v).expect("dyad spectrum")
    }

    pub fn as_symmetric(&self) -> &SymmetricMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.base.matrix()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Eigenvalues, descending.
    pub fn eigvals(&self) -> &[f64] {
        self.eigvals.as_slice()
    }

    /// Full eigenbasis, columns ordered as [`eigvals`](Self::eigvals).
    pub fn eigvecs(&self) -> &OrthonormalBasis {
        &self.eigvecs
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn range(&self) -> &OrthonormalBasis {
        &self.range
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn trace(&self) -> f64 {
        self.base.trace()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigvals[0]
    }

    pub fn determinant(&self) -> f64 {
        self.eigvals.iter().product()
    }

    /// `c · A` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("scale factor {c} must be positive")));
        }
        let vals: Vec<f64> = self.eigvals.iter().take(self.rank).map(|v| v * c).collect();
        Self::from_spectrum(&vals, self.range.columns())
    }

    /// True if `range(self) ⊆ range(other)`.
    pub fn range_within(&self, other: &PsdMatrix) -> bool {
        self.range.iter().all(|u| other.range.contains(u.as_vector()))
    }
}

fn clamp_and_rank(values: &mut DVector<f64>) -> usize {
    let cutoff = tol::RANK * tol::spectral_scale(values[0]);
    let mut rank = 0;
    for v in values.iter_mut() {
        if *v > cutoff {
            rank += 1;
        } else {
            *v = 0.0;
        }
    }
    rank
}
