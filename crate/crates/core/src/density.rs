//! Density matrices as generalized distributions over unit directions.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::symlin::{eigendecompose, logm_plus, tol, OrthonormalBasis, PsdMatrix, SymmetricMatrix, UnitVector};

/// Trace deviation accepted as-is.
pub const TRACE_TOL: f64 = 1e-9;
/// Trace deviation still repaired by renormalization.
pub const RENORMALIZE_TOL: f64 = 1e-6;
/// Slack on probabilities before they are clamped to `[0, 1]`.
pub const PROB_SLACK: f64 = 1e-10;

/// Positive semidefinite matrix of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(PsdMatrix);

impl DensityMatrix {
    /// Accepts traces within [`RENORMALIZE_TOL`] of one and rescales them to
    /// one.
    pub fn new(psd: PsdMatrix) -> Result<Self> {
        let tr = psd.trace();
        if (tr - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::invalid(format!("density matrix has trace {tr}, expected 1")));
        }
        if tr == 1.0 {
            Ok(Self(psd))
        } else {
            Ok(Self(psd.scaled(1.0 / tr)?))
        }
    }

    /// `A / tr(A)` for a nonzero `A`.
    pub fn normalize(psd: &PsdMatrix) -> Result<Self> {
        let tr = psd.trace();
        if psd.rank() == 0 || tr <= 0.0 {
            return Err(Error::invalid("cannot normalize a zero matrix"));
        }
        Ok(Self(psd.scaled(1.0 / tr)?))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(PsdMatrix::from_matrix(m)?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(PsdMatrix::from_rows(rows)?)
    }

    /// I/n
    pub fn uniform(n: usize) -> Self {
        Self(PsdMatrix::identity(n).scaled(1.0 / n as f64).expect("positive scale"))
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(PsdMatrix::from_diagonal(p)?)
    }

    /// The pure state uuᵀ.
    pub fn pure(u: &UnitVector) -> Self {
        Self(PsdMatrix::dyad(u))
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.0
    }

    pub fn into_psd(self) -> PsdMatrix {
        self.0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// A projector: eigenvalues in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMatrix(PsdMatrix);

impl EventMatrix {
    pub fn new(psd: PsdMatrix) -> Result<Self> {
        let bad = psd
            .eigvals()
            .iter()
            .find(|&&l| l.abs() > tol::RANK && (l - 1.0).abs() > tol::RANK);
        match bad {
            Some(l) => Err(Error::invalid(format!("event has eigenvalue {l}, expected 0 or 1"))),
            None => Ok(Self(psd)),
        }
    }

    /// Projector onto the span of `basis`.
    pub fn from_basis(basis: &OrthonormalBasis) -> Self {
        Self(crate::symlin::projector(basis))
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

fn clamp_prob(p: f64) -> Result<f64> {
    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// tr(W uuᵀ) = uᵀWu
pub fn prob_dyad(w: &DensityMatrix, u: &UnitVector) -> Result<f64> {
    clamp_prob(w.psd().as_symmetric().quadratic_form(u)?)
}

/// tr(W P)
pub fn prob_event(w: &DensityMatrix, p: &EventMatrix) -> Result<f64> {
    check_dim(w.dim(), p.dim())?;
    clamp_prob(trace_of_product(w.matrix(), p.psd().matrix()))
}

/// tr(W S), the expected value of the observable `S`.
pub fn expectation(w: &DensityMatrix, s: &SymmetricMatrix) -> Result<f64> {
    check_dim(w.dim(), s.dim())?;
    Ok(trace_of_product(w.matrix(), s.matrix()))
}

/// Outcome probabilities `sᵢᵀ W sᵢ` of measuring `S`, paired with the
/// eigenvectors `sᵢ` of `S` the state collapses to.
pub fn collapse(w: &DensityMatrix, s: &SymmetricMatrix) -> Result<Vec<(f64, UnitVector)>> {
    check_dim(w.dim(), s.dim())?;
    let eig = eigendecompose(s)?;
    eig.vectors
        .iter()
        .map(|u| Ok((prob_dyad(w, &u)?, u)))
        .collect()
}

/// Σᵢ ωᵢ wᵢwᵢᵀ
pub fn mixture_to_density(weights: &[f64], vectors: &[UnitVector]) -> Result<DensityMatrix> {
    if weights.len() != vectors.len() || weights.is_empty() {
        return Err(Error::invalid(format!(
            "{} weights for {} vectors",
            weights.len(),
            vectors.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("mixture weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > TRACE_TOL {
        return Err(Error::invalid(format!("mixture weights sum to {total}")));
    }
    let n = vectors[0].dim();
    let mut m = DMatrix::zeros(n, n);
    for (w, u) in weights.iter().zip(vectors) {
        check_dim(n, u.dim())?;
        m += u.outer() * *w;
    }
    DensityMatrix::new(PsdMatrix::new(SymmetricMatrix::symmetrize(m))?)
}

/// tr(A (logm⁺A − logm⁺B)), or +∞ unless `range(A) ⊆ range(B)`.
pub fn relative_entropy(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if !a.psd().range_within(b.psd()) {
        return Ok(f64::INFINITY);
    }
    let diff = logm_plus(a.psd()).matrix() - logm_plus(b.psd()).matrix();
    Ok(trace_of_product(a.matrix(), &diff).max(0.0))
}

/// −Σ λᵢ ln λᵢ
pub fn von_neumann_entropy(w: &DensityMatrix) -> f64 {
    -w.psd()
        .eigvals()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|l| l * l.ln())
        .sum::<f64>()
}

/// tr(A ⊙ uuᵀ) = exp(uᵀ logm⁺A u) for `u` in the range of `A`, else 0.
pub fn remote_pinch(a: &PsdMatrix, u: &UnitVector) -> Result<f64> {
    check_dim(a.dim(), u.dim())?;
    if !a.range().contains(u.as_vector()) {
        return Ok(0.0);
    }
    Ok(logm_plus(a).quadratic_form(u)?.exp())
}

/// [`remote_pinch`] against every direction of a complete orthonormal basis.
pub fn remote_pinching(a: &PsdMatrix, basis: &OrthonormalBasis) -> Result<DVector<f64>> {
    check_dim(a.dim(), basis.ambient_dim())?;
    if !basis.is_full() {
        return Err(Error::invalid(format!(
            "remote pinching needs a complete basis, got {} of {} directions",
            basis.k(),
            basis.ambient_dim()
        )));
    }
    let log = logm_plus(a);
    let vals = basis.iter().map(|u| {
        if a.range().contains(u.as_vector()) {
            log.quadratic_form(&u).map(f64::exp)
        } else {
            Ok(0.0)
        }
    });
    Ok(DVector::from_vec(vals.collect::<Result<Vec<_>>>()?))
}

/// tr(XY) without forming the product.
pub(crate) fn trace_of_product(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.component_mul(&y.transpose()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig_vectors() -> Vec<UnitVector> {
        let s = 2f64.sqrt() / 2.0;
        vec![
            UnitVector::from_slice(&[1.0, 0.0]).unwrap(),
            UnitVector::from_slice(&[s, s]).unwrap(),
            UnitVector::from_slice(&[0.0, 1.0]).unwrap(),
        ]
    }

    #[test]
    fn construction_checks_trace() {
        assert!(DensityMatrix::from_diagonal(&[0.5, 0.5]).is_ok());
        let r = DensityMatrix::from_diagonal(&[0.5, 0.5 + 5e-7]).unwrap();
        assert!((r.psd().trace() - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::from_diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::normalize(&PsdMatrix::zeros(2)).is_err());
    }

    #[test]
    fn dyad_probabilities() {
        let w = DensityMatrix::uniform(2);
        let u = UnitVector::from_slice(&[0.6, 0.8]).unwrap();
        assert_relative_eq!(prob_dyad(&w, &u).unwrap(), 0.5, epsilon = 1e-15);
        let w = DensityMatrix::from_rows(&[vec![0.35, 0.15], vec![0.15, 0.65]]).unwrap();
        assert_relative_eq!(prob_dyad(&w, &UnitVector::basis(2, 0).unwrap()).unwrap(), 0.35, epsilon = 1e-15);
        let w = DensityMatrix::pure(&u);
        let v = UnitVector::from_slice(&[-0.8, 0.6]).unwrap();
        assert!(prob_dyad(&w, &v).unwrap().abs() < 1e-15);
        assert!(prob_dyad(&w, &UnitVector::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn event_probabilities() {
        let w = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let all = EventMatrix::from_basis(&OrthonormalBasis::standard(4));
        assert_relative_eq!(prob_event(&w, &all).unwrap(), 1.0, epsilon = 1e-15);
        let none = EventMatrix::from_basis(&OrthonormalBasis::empty(4));
        assert_eq!(prob_event(&w, &none).unwrap(), 0.0);
        assert!(EventMatrix::new(PsdMatrix::from_diagonal(&[1.0, 0.5]).unwrap()).is_err());
    }

    #[test]
    fn event_on_eigenvectors_sums_eigenvalues() {
        let w = DensityMatrix::from_rows(&[
            vec![0.30, 0.05, 0.02, 0.01],
            vec![0.05, 0.25, 0.03, 0.00],
            vec![0.02, 0.03, 0.25, 0.04],
            vec![0.01, 0.00, 0.04, 0.20],
        ])
        .unwrap();
        let v = w.psd().eigvecs().columns();
        let two = OrthonormalBasis::new(v.columns(1, 2).into_owned()).unwrap();
        let p = prob_event(&w, &EventMatrix::from_basis(&two)).unwrap();
        let eig = w.psd().eigvals();
        assert_relative_eq!(p, eig[1] + eig[2], epsilon = 1e-14);
    }

    #[test]
    fn expectations() {
        let w = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        assert_relative_eq!(expectation(&w, &SymmetricMatrix::identity(3)).unwrap(), 1.0, epsilon = 1e-15);
        let s = SymmetricMatrix::from_diagonal(&[1.0, -2.0, 4.0]).unwrap();
        assert_relative_eq!(expectation(&w, &s).unwrap(), 0.2 - 0.6 + 2.0, epsilon = 1e-15);
    }

    #[test]
    fn hadamard_observable_averages_its_spectrum() {
        let h = OrthonormalBasis::hadamard(4).unwrap();
        let sigma = [4.0, 1.0, -0.5, 2.5];
        let s = SymmetricMatrix::symmetrize(
            h.columns() * DMatrix::from_diagonal(&DVector::from_column_slice(&sigma)) * h.columns().transpose(),
        );
        let w = DensityMatrix::from_diagonal(&[0.7, 0.1, 0.15, 0.05]).unwrap();
        assert_relative_eq!(expectation(&w, &s).unwrap(), 7.0 / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn collapse_onto_eigenbasis() {
        let s = SymmetricMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.3], vec![0.0, 0.3, -1.0]]).unwrap();
        let out = collapse(&DensityMatrix::uniform(3), &s).unwrap();
        for (p, _) in &out {
            assert_relative_eq!(*p, 1.0 / 3.0, epsilon = 1e-14);
        }
        let s1 = eigendecompose(&s).unwrap().vectors.column(1);
        let out = collapse(&DensityMatrix::pure(&s1), &s).unwrap();
        assert_relative_eq!(out[1].0, 1.0, epsilon = 1e-14);
        assert!(out[0].0 < 1e-14 && out[2].0 < 1e-14);
    }

    #[test]
    fn two_mixtures_one_density() {
        let w = mixture_to_density(&[0.2, 0.3, 0.5], &fig_vectors()).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.35, 0.15, 0.15, 0.65]);
        assert!((w.matrix() - expect).abs().max() <= 1e-12);
        let u = &fig_vectors()[1];
        let p = mixture_to_density(&[1.0], std::slice::from_ref(u)).unwrap();
        assert!((p.matrix() - u.outer()).norm() < 1e-15);
        assert!(mixture_to_density(&[0.5, 0.6], &fig_vectors()[..2]).is_err());
        assert!(mixture_to_density(&[1.5, -0.5], &fig_vectors()[..2]).is_err());
        assert!(mixture_to_density(&[1.0], &fig_vectors()[..2]).is_err());
    }

    #[test]
    fn relative_entropy_cases() {
        let a = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.4, 0.4, 0.2]).unwrap();
        assert!(relative_entropy(&a, &a).unwrap().abs() < 1e-15);
        let kl: f64 = [(0.2, 0.4), (0.3, 0.4), (0.5, 0.2)]
            .iter()
            .map(|(p, q): &(f64, f64)| p * (p / q).ln())
            .sum();
        assert_relative_eq!(relative_entropy(&a, &b).unwrap(), kl, epsilon = 1e-14);
        let c = DensityMatrix::from_diagonal(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(relative_entropy(&a, &c).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&c, &a).unwrap().is_finite());
    }

    #[test]
    fn entropy_extremes() {
        let u = UnitVector::from_slice(&[0.6, 0.8]).unwrap();
        assert_eq!(von_neumann_entropy(&DensityMatrix::pure(&u)), 0.0);
        assert_relative_eq!(von_neumann_entropy(&DensityMatrix::uniform(5)), 5f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn pinching_cases() {
        let a = PsdMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let v = remote_pinching(&a, a.eigvecs()).unwrap();
        assert_relative_eq!(v[0], a.eigvals()[0], epsilon = 1e-14);
        assert_relative_eq!(v[1], a.eigvals()[1], epsilon = 1e-14);
        let ones = remote_pinching(&PsdMatrix::identity(3), &OrthonormalBasis::standard(3)).unwrap();
        assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-15));
        let h = OrthonormalBasis::hadamard(2).unwrap();
        let prod: f64 = remote_pinching(&a, &h).unwrap().iter().product();
        assert_relative_eq!(prod, a.determinant(), epsilon = 1e-14);
        let partial = OrthonormalBasis::from_columns(2, &[vec![1.0, 0.0]]).unwrap();
        assert!(remote_pinching(&a, &partial).is_err());
        let d = PsdMatrix::from_diagonal(&[2.0, 0.0]).unwrap();
        let p = remote_pinching(&d, &OrthonormalBasis::standard(2)).unwrap();
        assert_relative_eq!(p[0], 2.0, epsilon = 1e-15);
        assert_eq!(p[1], 0.0);
        assert_eq!(remote_pinch(&d, &h.column(0)).unwrap(), 0.0);
    }
}
