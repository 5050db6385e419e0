//! The ⊙ product `A ⊙ B = expm(logm A + logm B)`, extended to semidefinite
//! arguments by restriction to the intersection of ranges.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::symlin::{eigendecompose, intersect_ranges, logm_plus, powm, PsdMatrix, SymmetricMatrix};

/// Largest accepted exponent `k` in `odot_limit(.., 2^k)`.
pub const MAX_LIMIT_LOG2: u32 = 20;

pub fn odot(a: &PsdMatrix, b: &PsdMatrix) -> Result<PsdMatrix> {
    check_dim(a.dim(), b.dim())?;
    let sum = logm_plus(a).matrix() + logm_plus(b).matrix();
    if a.is_full_rank() && b.is_full_rank() {
        let eig = eigendecompose(&SymmetricMatrix::symmetrize(sum))?;
        let vals: Vec<f64> = eig.values.iter().map(|x| x.exp()).collect();
        return PsdMatrix::from_spectrum(&vals, eig.vectors.columns());
    }
    let r = intersect_ranges(a.range(), b.range())?;
    if r.is_empty() {
        return Ok(PsdMatrix::zeros(a.dim()));
    }
    let rc = r.columns();
    let compressed = SymmetricMatrix::symmetrize(rc.transpose() * sum * rc);
    let eig = eigendecompose(&compressed)?;
    let vals: Vec<f64> = eig.values.iter().map(|x| x.exp()).collect();
    PsdMatrix::from_spectrum(&vals, &(rc * eig.vectors.columns()))
}

/// Left fold of [`odot`]; an empty list is rejected.
pub fn odot_all(factors: &[&PsdMatrix]) -> Result<PsdMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::invalid("odot of an empty list"))?;
    rest.iter().try_fold((*first).clone(), |acc, f| odot(&acc, f))
}

/// `(A^{1/n} B^{1/n})^n` for `n = 2^k`, by repeated squaring. The result is
/// generally not symmetric for finite `n`.
pub fn odot_limit(a: &PsdMatrix, b: &PsdMatrix, n: u64) -> Result<DMatrix<f64>> {
    check_dim(a.dim(), b.dim())?;
    if !n.is_power_of_two() || n.trailing_zeros() > MAX_LIMIT_LOG2 {
        return Err(Error::invalid(format!(
            "limit order {n} is not a power of two up to 2^{MAX_LIMIT_LOG2}"
        )));
    }
    let r = 1.0 / n as f64;
    let mut p = powm(a, r)?.matrix() * powm(b, r)?.matrix();
    for _ in 0..n.trailing_zeros() {
        p = &p * &p;
    }
    Ok(p)
}

/// (M + Mᵀ)/2
pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::UnitVector;
    use approx::assert_relative_eq;

    fn spd3() -> PsdMatrix {
        PsdMatrix::from_rows(&[
            vec![2.0, 0.4, -0.3],
            vec![0.4, 1.0, 0.2],
            vec![-0.3, 0.2, 0.6],
        ])
        .unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let a = spd3();
        let r = odot(&a, &PsdMatrix::identity(3)).unwrap();
        assert!((r.matrix() - a.matrix()).norm() < 1e-13);
        let d = PsdMatrix::from_diagonal(&[0.5, 0.0, 2.0]).unwrap();
        let r = odot(&d, &PsdMatrix::identity(3)).unwrap();
        assert!((r.matrix() - d.matrix()).norm() < 1e-14);
    }

    #[test]
    fn diagonal_product() {
        let a = PsdMatrix::from_diagonal(&[0.5, 2.0, 0.0]).unwrap();
        let b = PsdMatrix::from_diagonal(&[3.0, 0.25, 7.0]).unwrap();
        let r = odot(&a, &b).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.5, 0.5, 0.0]));
        assert!((r.matrix() - expect).norm() < 1e-14);
        assert_eq!(r.rank(), 2);
    }

    #[test]
    fn distinct_dyads_annihilate() {
        let u = PsdMatrix::dyad(&UnitVector::from_slice(&[1.0, 0.0]).unwrap());
        let v = PsdMatrix::dyad(&UnitVector::from_slice(&[0.6, 0.8]).unwrap());
        let r = odot(&u, &v).unwrap();
        assert_eq!(r.rank(), 0);
        assert_eq!(r.matrix(), &DMatrix::<f64>::zeros(2, 2));
        let same = odot(&v, &v).unwrap();
        assert!((same.matrix() - v.matrix()).norm() < 1e-14);
    }

    #[test]
    fn matches_limit_oracle() {
        let a = spd3();
        let b = PsdMatrix::from_rows(&[
            vec![0.7, -0.2, 0.1],
            vec![-0.2, 1.5, 0.3],
            vec![0.1, 0.3, 0.9],
        ])
        .unwrap();
        let exact = odot(&a, &b).unwrap();
        let lim = symmetrized(&odot_limit(&a, &b, 1 << 12).unwrap());
        assert!((lim - exact.matrix()).norm() / exact.matrix().norm() < 1e-3);
    }

    #[test]
    fn limit_edge_cases() {
        let a = spd3();
        let b = PsdMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let one = odot_limit(&a, &b, 1).unwrap();
        assert!((one - a.matrix() * b.matrix()).norm() < 1e-14);
        let c = PsdMatrix::from_diagonal(&[4.0, 0.5, 1.0]).unwrap();
        let l = odot_limit(&c, &b, 64).unwrap();
        assert_relative_eq!(l[(0, 0)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(l[(1, 1)], 1.0, epsilon = 1e-12);
        assert!(odot_limit(&a, &b, 3).is_err());
        assert!(odot_limit(&a, &b, 1 << 21).is_err());
        assert!(odot(&a, &PsdMatrix::identity(2)).is_err());
    }

    #[test]
    fn fold_over_several() {
        let a = spd3();
        let i = PsdMatrix::identity(3);
        let r = odot_all(&[&a, &i, &i]).unwrap();
        assert!((r.matrix() - a.matrix()).norm() < 1e-13);
        assert!(odot_all(&[]).is_err());
    }
}
