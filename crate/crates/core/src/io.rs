//! JSON formats shared by the library and the command line.
//!
//! Matrices are `{"dim": n, "rows": [[...], ...]}` in row-major order; joints
//! add `"dims": [nA, nB]`. Bases are `{"ambient": n, "k": k, "cols": [...]}`
//! with one inner list per column. Vectors are `{"dim": n, "entries": [...]}`
//! or a bare array.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::symlin::{OrthonormalBasis, PsdMatrix, SymmetricMatrix, UnitVector};
use crate::tensor::JointDensity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisJson {
    pub ambient: usize,
    pub k: usize,
    pub cols: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorJson {
    Tagged { dim: usize, entries: Vec<f64> },
    Bare(Vec<f64>),
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let rows = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self { dim: m.nrows(), rows, dims: None }
    }

    pub fn from_joint(j: &JointDensity) -> Self {
        let (na, nb) = j.dims();
        Self { dims: Some([na, nb]), ..Self::from_matrix(j.matrix()) }
    }

    /// Checks the declared dimension against the rows, without any
    /// symmetry or definiteness test.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.dim;
        if self.rows.len() != n {
            return Err(Error::invalid(format!("\"dim\" is {n} but there are {} rows", self.rows.len())));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::invalid(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.rows[i][j]))
    }

    pub fn to_symmetric(&self) -> Result<SymmetricMatrix> {
        SymmetricMatrix::new(self.to_matrix()?)
    }

    pub fn to_psd(&self) -> Result<PsdMatrix> {
        PsdMatrix::new(self.to_symmetric()?)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_psd()?)
    }

    /// Uses `dims` when given, else the embedded `"dims"` field.
    pub fn to_joint(&self, dims: Option<(usize, usize)>) -> Result<JointDensity> {
        let dims = match (dims, self.dims) {
            (Some(d), Some([na, nb])) if d != (na, nb) => {
                return Err(Error::invalid(format!(
                    "dims {}x{} disagree with the file's {na}x{nb}",
                    d.0, d.1
                )))
            }
            (Some(d), _) => d,
            (None, Some([na, nb])) => (na, nb),
            (None, None) => return Err(Error::invalid("joint dims missing")),
        };
        JointDensity::new(self.to_density()?, dims)
    }
}

impl BasisJson {
    pub fn from_basis(b: &OrthonormalBasis) -> Self {
        Self { ambient: b.ambient_dim(), k: b.k(), cols: b.cols_vec() }
    }

    pub fn to_basis(&self) -> Result<OrthonormalBasis> {
        if self.cols.len() != self.k {
            return Err(Error::invalid(format!("\"k\" is {} but there are {} columns", self.k, self.cols.len())));
        }
        OrthonormalBasis::from_columns(self.ambient, &self.cols)
    }
}

impl VectorJson {
    pub fn entries(&self) -> Result<&[f64]> {
        match self {
            VectorJson::Tagged { dim, entries } if *dim != entries.len() => Err(Error::invalid(format!(
                "\"dim\" is {dim} but there are {} entries",
                entries.len()
            ))),
            VectorJson::Tagged { entries, .. } | VectorJson::Bare(entries) => Ok(entries),
        }
    }

    pub fn to_vector(&self) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(self.entries()?))
    }

    /// Requires unit norm; see [`UnitVector::new`].
    pub fn to_unit(&self) -> Result<UnitVector> {
        UnitVector::new(self.to_vector()?)
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed JSON: {e}")))
}

pub fn read<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn to_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("JSON of plain numbers")
}

pub fn to_string_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("JSON of plain numbers")
}
