use nalgebra::{DMatrix, DVector};

use super::{tol, UnitVector};
use crate::error::{check_dim, Error, Result};

/// Column-orthonormal `n × k` matrix; `k = 0` is the basis of `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    cols: DMatrix<f64>,
}

impl OrthonormalBasis {
    /// Accepts `cols` if `colsᵀ cols = I_k` within [`tol::ORTH`].
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        let (n, k) = cols.shape();
        if n == 0 {
            return Err(Error::invalid("basis has ambient dimension 0"));
        }
        if k > n {
            return Err(Error::invalid(format!("{k} columns in ambient dimension {n}")));
        }
        if cols.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("basis has non-finite entries"));
        }
        let gram = cols.transpose() * &cols - DMatrix::<f64>::identity(k, k);
        let err = gram.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if err > tol::ORTH {
            return Err(Error::invalid(format!(
                "columns are not orthonormal (error {err:e})"
            )));
        }
        Ok(Self { cols })
    }

    /// Builds from a list of columns.
    pub fn from_columns(ambient: usize, cols: &[Vec<f64>]) -> Result<Self> {
        let mut m = DMatrix::zeros(ambient, cols.len());
        for (j, c) in cols.iter().enumerate() {
            check_dim(ambient, c.len())?;
            m.set_column(j, &DVector::from_column_slice(c));
        }
        Self::new(m)
    }

    pub(crate) fn from_cols_unchecked(cols: DMatrix<f64>) -> Self {
        Self { cols }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            cols: DMatrix::zeros(n, 0),
        }
    }

    /// The standard basis of ℝⁿ.
    pub fn standard(n: usize) -> Self {
        Self {
            cols: DMatrix::identity(n, n),
        }
    }

    /// Sylvester-Hadamard matrix scaled by `1/√n`; `n` must be a power of two.
    pub fn hadamard(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("Hadamard order {n} is not a power of two")));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let cols = DMatrix::from_fn(n, n, |i, j| {
            if (i & j).count_ones() % 2 == 0 {
                scale
            } else {
                -scale
            }
        });
        Ok(Self { cols })
    }

    pub fn ambient_dim(&self) -> usize {
        self.cols.nrows()
    }

    pub fn k(&self) -> usize {
        self.cols.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.k() == 0
    }

    pub fn is_full(&self) -> bool {
        self.k() == self.ambient_dim()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn column(&self, j: usize) -> UnitVector {
        UnitVector::from_unit_unchecked(self.cols.column(j).into_owned())
    }

    pub fn iter(&self) -> impl Iterator<Item = UnitVector> + '_ {
        (0..self.k()).map(|j| self.column(j))
    }

    /// R Rᵀ as a plain matrix.
    pub fn projector_matrix(&self) -> DMatrix<f64> {
        &self.cols * self.cols.transpose()
    }

    /// Distance of `v` from the span, relative to `‖v‖`.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let coeffs = self.cols.transpose() * v;
        (v - &self.cols * coeffs).norm() / norm
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        self.residual(v) <= tol::ORTH
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Self {
        let n = self.ambient_dim();
        let start: Vec<DVector<f64>> = self.cols.column_iter().map(|c| c.into_owned()).collect();
        let added = pivoted_extend(&start, &DMatrix::identity(n, n), n - self.k());
        stack(n, &added)
    }

    /// The columns as nested vectors, one entry per column.
    pub fn cols_vec(&self) -> Vec<Vec<f64>> {
        self.cols
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    }
}

/// Greedy column-pivoted Gram-Schmidt: extends the orthonormal set `start`
/// by up to `max_new` directions taken from `candidates`, each time choosing
/// the candidate with the largest residual; stops once residuals fall to
/// [`tol::RANK`].
fn pivoted_extend(
    start: &[DVector<f64>],
    candidates: &DMatrix<f64>,
    max_new: usize,
) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = start.to_vec();
    let mut residuals: Vec<DVector<f64>> = candidates
        .column_iter()
        .map(|c| c.into_owned())
        .filter(|c| c.norm() > 0.0)
        .map(|c| {
            let n = c.norm();
            c / n
        })
        .collect();
    for r in residuals.iter_mut() {
        for q in &basis {
            orthogonalize(r, q);
        }
    }
    let mut added = Vec::new();
    while added.len() < max_new && !residuals.is_empty() {
        let (best, norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= tol::RANK {
            break;
        }
        let mut q = residuals.swap_remove(best) / norm;
        // second pass restores orthogonality lost to cancellation
        for b in &basis {
            orthogonalize(&mut q, b);
        }
        let qn = q.norm();
        q /= qn;
        for r in residuals.iter_mut() {
            orthogonalize(r, &q);
        }
        basis.push(q.clone());
        added.push(q);
    }
    added
}

fn orthogonalize(v: &mut DVector<f64>, q: &DVector<f64>) {
    let c = q.dot(v);
    v.axpy(-c, q, 1.0);
}

fn stack(n: usize, cols: &[DVector<f64>]) -> OrthonormalBasis {
    let mut m = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    OrthonormalBasis::from_cols_unchecked(m)
}

/// Orthonormal basis of `span(Ra) ∩ span(Rb)`, computed as the complement of
/// `span(Ra)^⊥ + span(Rb)^⊥`.
pub fn intersect_ranges(ra: &OrthonormalBasis, rb: &OrthonormalBasis) -> Result<OrthonormalBasis> {
    check_dim(ra.ambient_dim(), rb.ambient_dim())?;
    let n = ra.ambient_dim();
    if ra.is_full() {
        return Ok(rb.clone());
    }
    if rb.is_full() {
        return Ok(ra.clone());
    }
    let ca = ra.complement();
    let cb = rb.complement();
    let mut both = DMatrix::zeros(n, ca.k() + cb.k());
    both.columns_mut(0, ca.k()).copy_from(ca.columns());
    both.columns_mut(ca.k(), cb.k()).copy_from(cb.columns());
    let union = stack(n, &pivoted_extend(&[], &both, n));
    Ok(union.complement())
}
