//! Joint spaces `ℝ^{n_A} ⊗ ℝ^{n_B}`: Kronecker products, partial traces and
//! joint densities.
//!
//! A joint matrix is an `n_A × n_A` grid of `n_B × n_B` blocks; block
//! `(i, j)` occupies rows `i·n_B..(i+1)·n_B` and columns `j·n_B..(j+1)·n_B`.

use nalgebra::DMatrix;

use crate::density::{prob_dyad, DensityMatrix};
use crate::error::{check_dim, Error, Result};
use crate::symlin::{PsdMatrix, SymmetricMatrix, UnitVector};

/// One factor of a two-factor joint space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    A,
    B,
}

/// E ⊗ F
pub fn kron(e: &DMatrix<f64>, f: &DMatrix<f64>) -> DMatrix<f64> {
    e.kronecker(f)
}

/// Traces out `traced`: `Factor::A` sums the diagonal blocks (leaving an
/// `n_B × n_B` matrix), `Factor::B` replaces each block by its trace
/// (leaving `n_A × n_A`).
pub fn partial_trace(g: &DMatrix<f64>, dims: (usize, usize), traced: Factor) -> Result<DMatrix<f64>> {
    let (na, nb) = dims;
    check_dim(na * nb, g.nrows())?;
    check_dim(na * nb, g.ncols())?;
    Ok(match traced {
        Factor::A => DMatrix::from_fn(nb, nb, |k, l| (0..na).map(|i| g[(i * nb + k, i * nb + l)]).sum()),
        Factor::B => DMatrix::from_fn(na, na, |i, j| (0..nb).map(|k| g[(i * nb + k, j * nb + k)]).sum()),
    })
}

/// Reorders a joint matrix from `A ⊗ B` to `B ⊗ A` layout.
pub fn swap_factors(g: &DMatrix<f64>, dims: (usize, usize)) -> Result<DMatrix<f64>> {
    let (na, nb) = dims;
    check_dim(na * nb, g.nrows())?;
    check_dim(na * nb, g.ncols())?;
    // index (i, k) in A⊗B is i·nb + k; in B⊗A it is k·na + i
    let src = |p: usize| (p % na) * nb + p / na;
    Ok(DMatrix::from_fn(na * nb, na * nb, |p, q| g[(src(p), src(q))]))
}

fn psd_of(m: DMatrix<f64>) -> Result<PsdMatrix> {
    PsdMatrix::new(SymmetricMatrix::symmetrize(m))
}

/// Density matrix over `ℝ^{n_A} ⊗ ℝ^{n_B}` with its factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    density: DensityMatrix,
    dims: (usize, usize),
}

impl JointDensity {
    pub fn new(density: DensityMatrix, dims: (usize, usize)) -> Result<Self> {
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::invalid("joint factor dimensions must be positive"));
        }
        check_dim(dims.0 * dims.1, density.dim())?;
        Ok(Self { density, dims })
    }

    pub fn from_matrix(m: DMatrix<f64>, dims: (usize, usize)) -> Result<Self> {
        Self::new(DensityMatrix::from_matrix(m)?, dims)
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn psd(&self) -> &PsdMatrix {
        self.density.psd()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.density.matrix()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim_of(&self, f: Factor) -> usize {
        match f {
            Factor::A => self.dims.0,
            Factor::B => self.dims.1,
        }
    }

    /// The same joint over `ℝ^{n_B} ⊗ ℝ^{n_A}`.
    pub fn swapped(&self) -> Self {
        let m = swap_factors(self.matrix(), self.dims).expect("dims checked at construction");
        let density = DensityMatrix::new(psd_of(m).expect("permutation of a PSD matrix")).expect("trace preserved");
        Self {
            density,
            dims: (self.dims.1, self.dims.0),
        }
    }
}

/// The marginal density of factor `keep`: `D(𝔸) = tr_B J` or `D(𝔹) = tr_A J`.
pub fn marginal(j: &JointDensity, keep: Factor) -> DensityMatrix {
    let traced = match keep {
        Factor::A => Factor::B,
        Factor::B => Factor::A,
    };
    let m = partial_trace(j.matrix(), j.dims(), traced).expect("dims checked at construction");
    DensityMatrix::new(psd_of(m).expect("partial trace of a PSD matrix")).expect("partial trace keeps the trace")
}

/// D(a, b) = tr(J (aaᵀ ⊗ bbᵀ))
pub fn joint_prob(j: &JointDensity, a: &UnitVector, b: &UnitVector) -> Result<f64> {
    check_dim(j.dims.0, a.dim())?;
    check_dim(j.dims.1, b.dim())?;
    prob_dyad(&j.density, &a.kron(b))
}

/// D(𝔸, b) = tr_B(J (I ⊗ bbᵀ)), a PSD matrix over 𝔸 with trace D(b).
pub fn joint_slice(j: &JointDensity, b: &UnitVector) -> Result<PsdMatrix> {
    let (na, nb) = j.dims;
    check_dim(nb, b.dim())?;
    let event = kron(&DMatrix::identity(na, na), &b.outer());
    psd_of(partial_trace(&(j.matrix() * event), j.dims, Factor::B)?)
}

/// D(a, 𝔹) = tr_A(J (aaᵀ ⊗ I)), a PSD matrix over 𝔹 with trace D(a).
pub fn joint_slice_a(j: &JointDensity, a: &UnitVector) -> Result<PsdMatrix> {
    let (na, nb) = j.dims;
    check_dim(na, a.dim())?;
    let event = kron(&a.outer(), &DMatrix::identity(nb, nb));
    psd_of(partial_trace(&(j.matrix() * event), j.dims, Factor::A)?)
}

/// W_A ⊗ W_B
pub fn independent_join(wa: &DensityMatrix, wb: &DensityMatrix) -> JointDensity {
    let m = kron(wa.matrix(), wb.matrix());
    let density = DensityMatrix::new(psd_of(m).expect("product of PSD factors")).expect("trace is multiplicative");
    JointDensity {
        density,
        dims: (wa.dim(), wb.dim()),
    }
}
