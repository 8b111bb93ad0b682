//! JSON matrix files: `{"n": int, "data": [n² numbers, row-major]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix<T: Real>(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::MatrixFormat(format!("{}x{} matrix is not square", m.rows(), m.cols())));
        }
        Ok(Self {
            n: m.rows(),
            data: m.data().iter().map(|x| x.as_f64()).collect(),
        })
    }

    pub fn into_matrix<T: Real>(self) -> Result<Matrix<T>> {
        if self.n == 0 {
            return Err(Error::MatrixFormat("n must be at least 1".into()));
        }
        let expected = self.n.checked_mul(self.n).ok_or_else(|| Error::MatrixFormat("n too large".into()))?;
        if self.data.len() != expected {
            return Err(Error::MatrixFormat(format!(
                "n = {} needs {expected} entries, got {}",
                self.n,
                self.data.len()
            )));
        }
        if let Some(i) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::MatrixFormat(format!("entry {i} is not finite")));
        }
        let m = Matrix::from_row_major(self.n, self.n, self.data)?;
        Ok(m.cast())
    }
}

pub fn parse_matrix_json<T: Real>(text: &str) -> Result<Matrix<T>> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::MatrixFormat(e.to_string()))?;
    file.into_matrix()
}

pub fn read_matrix_file<T: Real>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MatrixFormat(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_json(&text)
}

pub fn matrix_to_json<T: Real>(m: &Matrix<T>) -> Result<String> {
    serde_json::to_string(&MatrixFile::from_matrix(m)?).map_err(|e| Error::MatrixFormat(e.to_string()))
}
