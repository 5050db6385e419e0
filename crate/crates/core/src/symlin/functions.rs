use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{tol, OrthonormalBasis, PsdMatrix, SymmetricMatrix};
use crate::error::{Error, Result};

/// Eigenvalues (descending) and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: OrthonormalBasis,
}

impl Eigen {
    /// V diag(f(λ)) Vᵀ
    fn map(&self, f: impl Fn(f64) -> f64) -> Result<SymmetricMatrix> {
        let v = self.vectors.columns();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        if mapped.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix function is not finite on the spectrum"));
        }
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * mapped[j]);
        Ok(SymmetricMatrix::symmetrize(scaled * v.transpose()))
    }
}

/// Makes the largest-magnitude entry of every column positive (first index
/// wins ties).
pub(crate) fn sign_normalize(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col.len() > 0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

pub fn eigendecompose(s: &SymmetricMatrix) -> Result<Eigen> {
    let m = s.matrix();
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (slot, &i) in order.iter().enumerate() {
        vectors.set_column(slot, &eig.eigenvectors.column(i));
    }
    sign_normalize(&mut vectors);
    Ok(Eigen {
        values,
        vectors: OrthonormalBasis::from_cols_unchecked(vectors),
    })
}

/// V diag(f(λ)) Vᵀ; fails if `f` is not finite on the spectrum.
pub fn matrix_function(s: &SymmetricMatrix, f: impl Fn(f64) -> f64) -> Result<SymmetricMatrix> {
    eigendecompose(s)?.map(f)
}

pub fn expm(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    matrix_function(s, f64::exp)
}

/// Matrix logarithm of a strictly positive definite matrix.
pub fn logm(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = eigendecompose(s)?;
    let n = eig.values.len();
    let min = eig.values[n - 1];
    if min <= tol::RANK * tol::spectral_scale(eig.values[0]) {
        return Err(Error::SingularLog { eigenvalue: min });
    }
    eig.map(f64::ln)
}

/// `A^r` on the range of `A`; zero eigenvalues stay zero.
pub fn powm(a: &PsdMatrix, r: f64) -> Result<PsdMatrix> {
    let k = a.rank();
    let vals: Vec<f64> = a.eigvals()[..k].iter().map(|l| l.powf(r)).collect();
    PsdMatrix::from_spectrum(&vals, a.range().columns())
}

/// Logarithm on the range of `A`, zero on its null space.
pub fn logm_plus(a: &PsdMatrix) -> SymmetricMatrix {
    let r = a.range().columns();
    let vals: Vec<f64> = a.eigvals()[..a.rank()].iter().map(|l| l.ln()).collect();
    let scaled = DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * vals[j]);
    SymmetricMatrix::symmetrize(scaled * r.transpose())
}

/// R Rᵀ
pub fn projector(r: &OrthonormalBasis) -> PsdMatrix {
    PsdMatrix::from_spectrum(&vec![1.0; r.k()], r.columns()).expect("unit spectrum")
}

/// Moore-Penrose pseudoinverse: λ ↦ 1/λ on the range.
pub fn pseudoinverse(a: &PsdMatrix) -> PsdMatrix {
    let vals: Vec<f64> = a.eigvals()[..a.rank()].iter().map(|l| 1.0 / l).collect();
    PsdMatrix::from_spectrum(&vals, a.range().columns()).expect("inverted positive spectrum")
}
