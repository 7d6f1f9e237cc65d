//! JSON encoding of complex arrays as `[re, im]` pairs.
//!
//! Matrices are written row by row as nested arrays; vectors as flat arrays.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMatrix, CVector};

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn from_pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged complex matrix".into());
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| from_pair(rows[i][j])))
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        matrix_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        matrix_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&z| pair(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let items = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_iterator(items.len(), items.into_iter().map(from_pair)))
    }
}
