//! Seeded random instances: rotations, spectra, densities and joints.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::symlin::{OrthonormalBasis, PsdMatrix, SymmetricMatrix, UnitVector};
use crate::tensor::{independent_join, kron, JointDensity};

/// Smallest nonzero eigenvalue drawn by the spectral samplers.
pub const MIN_EIGENVALUE: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal moved into Q.
pub fn orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let qr = gaussian(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn basis(rng: &mut impl Rng, n: usize) -> OrthonormalBasis {
    OrthonormalBasis::new(orthogonal(rng, n)).expect("QR factor is orthonormal")
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> UnitVector {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        if let Ok(u) = UnitVector::normalize(v) {
            return u;
        }
    }
}

/// Unit vector inside the span of `basis`.
pub fn unit_in(rng: &mut impl Rng, basis: &OrthonormalBasis) -> Result<UnitVector> {
    if basis.is_empty() {
        return Err(Error::invalid("cannot draw from the zero subspace"));
    }
    let c = unit_vector(rng, basis.k());
    UnitVector::normalize(basis.columns() * c.as_vector())
}

/// Rotated spectrum `Q diag(values) Qᵀ` with Haar `Q`.
pub fn rotated(rng: &mut impl Rng, values: &[f64]) -> DMatrix<f64> {
    let q = orthogonal(rng, values.len());
    &q * DMatrix::from_diagonal(&DVector::from_column_slice(values)) * q.transpose()
}

/// Symmetric matrix with spectrum uniform in `[-radius, radius]`.
pub fn symmetric(rng: &mut impl Rng, n: usize, radius: f64) -> SymmetricMatrix {
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..=radius)).collect();
    SymmetricMatrix::new(rotated(rng, &values)).expect("rotated spectrum is symmetric")
}

/// `rank` eigenvalues uniform in `[MIN_EIGENVALUE, 1]`, the rest zero.
pub fn spectrum(rng: &mut impl Rng, n: usize, rank: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i < rank { rng.random_range(MIN_EIGENVALUE..=1.0) } else { 0.0 })
        .collect()
}

pub fn psd(rng: &mut impl Rng, n: usize, rank: usize) -> PsdMatrix {
    assert!(rank <= n, "rank {rank} exceeds dimension {n}");
    let values = spectrum(rng, n, rank);
    PsdMatrix::new(SymmetricMatrix::symmetrize(rotated(rng, &values))).expect("rotated spectrum is PSD")
}

pub fn psd_full(rng: &mut impl Rng, n: usize) -> PsdMatrix {
    psd(rng, n, n)
}

/// Rank drawn uniformly from `1..n`; rank-deficient whenever `n > 1`.
pub fn psd_deficient(rng: &mut impl Rng, n: usize) -> PsdMatrix {
    let rank = if n > 1 { rng.random_range(1..n) } else { 1 };
    psd(rng, n, rank)
}

/// Probability vector, uniform on the simplex (normalized Exp(1) draws).
pub fn probability_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

pub fn density(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    DensityMatrix::normalize(&psd_full(rng, n)).expect("full-rank sample has positive trace")
}

pub fn density_of_rank(rng: &mut impl Rng, n: usize, rank: usize) -> DensityMatrix {
    DensityMatrix::normalize(&psd(rng, n, rank)).expect("sample has positive trace")
}

pub fn diagonal_density(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    DensityMatrix::from_diagonal(&probability_vector(rng, n)).expect("probability vector")
}

/// Log-uniform eigenvalues in `[e^{-spread}, 1]`.
pub fn spread_spectrum(rng: &mut impl Rng, n: usize, spread: f64) -> Vec<f64> {
    (0..n).map(|_| (-rng.random_range(0.0..=spread)).exp()).collect()
}

/// Spread of the log-uniform spectrum behind [`generic_joint`].
pub const GENERIC_SPREAD: f64 = 8.0;

/// Full-rank joint with a Haar eigensystem and a log-uniform spectrum:
/// almost surely not decoupled, and clearly so, since the decoupling gap
/// shrinks as the spectrum flattens towards `I/n`.
pub fn generic_joint(rng: &mut impl Rng, na: usize, nb: usize) -> JointDensity {
    let values = spread_spectrum(rng, na * nb, GENERIC_SPREAD);
    let m = rotated(rng, &values);
    JointDensity::from_matrix(&m / m.trace(), (na, nb)).expect("valid joint")
}

/// Joint whose eigensystem is `W_A ⊗ W_B`, with eigenvalues `ω_{i,j}`
/// drawn from `[MIN_EIGENVALUE, 1]` and normalized.
pub fn decoupled_joint(rng: &mut impl Rng, na: usize, nb: usize) -> JointDensity {
    let w = kron(&orthogonal(rng, na), &orthogonal(rng, nb));
    let omega = DVector::from_vec(spectrum(rng, na * nb, na * nb));
    let m = &w * DMatrix::from_diagonal(&omega) * w.transpose() / omega.sum();
    JointDensity::from_matrix(m, (na, nb)).expect("valid decoupled joint")
}

pub fn product_joint(rng: &mut impl Rng, na: usize, nb: usize) -> JointDensity {
    independent_join(&density(rng, na), &density(rng, nb))
}

/// Diagonal joint: a conventional table `P(i, j)` laid out on the diagonal.
pub fn diagonal_joint(rng: &mut impl Rng, na: usize, nb: usize) -> JointDensity {
    JointDensity::new(diagonal_density(rng, na * nb), (na, nb)).expect("dimensions agree")
}
