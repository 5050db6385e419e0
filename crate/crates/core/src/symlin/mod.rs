//! Symmetric-matrix linear algebra: eigendecomposition, spectral matrix
//! functions, range bases and their intersections.

mod basis;
mod functions;
mod matrix;
mod psd;

pub use basis::{intersect_ranges, OrthonormalBasis};
pub use functions::{
    eigendecompose, expm, logm, logm_plus, matrix_function, powm, projector, pseudoinverse, Eigen,
};
pub use matrix::{SymmetricMatrix, UnitVector};
pub use psd::PsdMatrix;

/// Numerical tolerances shared by every module.
pub mod tol {
    /// Relative asymmetry accepted by [`SymmetricMatrix::new`](super::SymmetricMatrix::new).
    pub const SYM: f64 = 1e-8;
    pub const ORTH: f64 = 1e-8;
    pub const UNIT: f64 = 1e-8;
    /// Negative-eigenvalue allowance, relative to `max(1, λ_max)`.
    pub const PSD: f64 = 1e-10;
    /// Rank cutoff, relative to `max(1, λ_max)`; also the basis-completion cutoff.
    pub const RANK: f64 = 1e-10;
    /// Conditioning denominators at or below this are null events.
    pub const PROB: f64 = 1e-12;

    pub fn recon(dim: usize) -> f64 {
        1e-9 * dim as f64
    }

    pub(crate) fn spectral_scale(lambda_max: f64) -> f64 {
        lambda_max.max(1.0)
    }
}

pub(crate) fn inf_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
