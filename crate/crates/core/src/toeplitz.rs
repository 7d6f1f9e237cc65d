//! Two-level (block-Toeplitz with Toeplitz blocks) Hermitian matrices stored
//! by their generator.
//!
//! Rows and columns are indexed by `(m, p)` ↦ `m·N_y + p` with `m` the x
//! (outer) level and `p` the y (inner) level, matching the atom layout. The
//! dense element law is
//!
//! ```text
//! dense[(m,p),(n,q)] = gen(n − m, p − q)
//! ```
//!
//! which is what `Σ c_k b_k b_k^H` produces when atoms conjugate the x-arm
//! steering vector: `gen(s, t) = Σ c_k exp(jπ(s cos α_k + t cos β_k))`.

use num_complex::Complex64;
use serde::Serialize;

use crate::array_model::check_angle;
use crate::cjson;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoLevelToeplitz {
    n_x: usize,
    n_y: usize,
    /// Row-major over `s ∈ [−(N_x−1), N_x−1]` then `t ∈ [−(N_y−1), N_y−1]`.
    gen: Vec<Complex64>,
}

impl TwoLevelToeplitz {
    pub fn zeros(n_x: usize, n_y: usize) -> Self {
        assert!(n_x >= 1 && n_y >= 1, "levels must be non-empty");
        Self { n_x, n_y, gen: vec![Complex64::new(0.0, 0.0); (2 * n_x - 1) * (2 * n_y - 1)] }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Side length of the dense realization, `N_x N_y`.
    pub fn size(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Real numbers held by the storage layout: every generator entry is
    /// complex except the real `gen(0, 0)`.
    pub fn stored_real_parameters(&self) -> usize {
        2 * self.gen.len() - 1
    }

    /// Real degrees of freedom once Hermitian symmetry is accounted for.
    pub fn free_real_parameters(&self) -> usize {
        self.gen.len()
    }

    #[inline]
    fn idx(&self, s: isize, t: isize) -> usize {
        let ws = 2 * self.n_y - 1;
        (s + self.n_x as isize - 1) as usize * ws + (t + self.n_y as isize - 1) as usize
    }

    #[inline]
    pub fn get(&self, s: isize, t: isize) -> Complex64 {
        self.gen[self.idx(s, t)]
    }

    /// Sets `gen(s, t)` and its mirror `gen(−s, −t) = conj(gen(s, t))`.
    pub fn set(&mut self, s: isize, t: isize, value: Complex64) {
        let (i, j) = (self.idx(s, t), self.idx(-s, -t));
        if i == j {
            self.gen[i] = Complex64::new(value.re, 0.0);
        } else {
            self.gen[i] = value;
            self.gen[j] = value.conj();
        }
    }

    pub fn generator(&self) -> &[Complex64] {
        &self.gen
    }

    /// Offsets `(s, t)` in storage order.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let (nx, ny) = (self.n_x as isize, self.n_y as isize);
        (-(nx - 1)..nx).flat_map(move |s| (-(ny - 1)..ny).map(move |t| (s, t)))
    }

    pub fn from_atoms(n_x: usize, n_y: usize, atoms: &[(f64, f64, f64)]) -> Result<Self> {
        let mut cos = Vec::with_capacity(atoms.len());
        for &(alpha, beta, c) in atoms {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Domain(format!("atom coefficient must be positive, got {c}")));
            }
            let (a, b) = (check_angle(alpha)?, check_angle(beta)?);
            cos.push((a.cos(), b.cos(), c));
        }
        Ok(Self::from_cosines(n_x, n_y, &cos))
    }

    /// Same as [`from_atoms`](Self::from_atoms) with atoms given as
    /// `(cos α, cos β, c)`.
    pub fn from_cosines(n_x: usize, n_y: usize, atoms: &[(f64, f64, f64)]) -> Self {
        let pi = std::f64::consts::PI;
        let mut out = Self::zeros(n_x, n_y);
        let offsets: Vec<_> = out.offsets().collect();
        for (slot, (s, t)) in out.gen.iter_mut().zip(offsets) {
            *slot = atoms
                .iter()
                .map(|&(ux, uy, c)| Complex64::from_polar(c, pi * (s as f64 * ux + t as f64 * uy)))
                .sum();
        }
        let g00 = out.idx(0, 0);
        out.gen[g00].im = 0.0;
        out
    }

    /// Dense `N_xN_y × N_xN_y` realization.
    pub fn dense(&self) -> CMatrix {
        let n = self.size();
        let ny = self.n_y;
        CMatrix::from_fn(n, n, |row, col| {
            let (m, p) = ((row / ny) as isize, (row % ny) as isize);
            let (nn, q) = ((col / ny) as isize, (col % ny) as isize);
            self.get(nn - m, p - q)
        })
    }

    /// Writes the realization into the lower-right block of `out` starting at
    /// `(offset, offset)`.
    pub(crate) fn write_dense(&self, out: &mut CMatrix, offset: usize) {
        let ny = self.n_y;
        let n = self.size();
        for col in 0..n {
            let (nn, q) = ((col / ny) as isize, (col % ny) as isize);
            for row in 0..n {
                let (m, p) = ((row / ny) as isize, (row % ny) as isize);
                out[(offset + row, offset + col)] = self.get(nn - m, p - q);
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.size() as f64 * self.get(0, 0).re
    }

    /// Frobenius-nearest two-level Toeplitz matrix to a Hermitian matrix.
    pub fn project_structure(dense: &CMatrix, n_x: usize, n_y: usize) -> Result<Self> {
        let n = n_x * n_y;
        if dense.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "expected a {n}x{n} matrix for {n_x}x{n_y} levels, got {:?}",
                dense.shape()
            )));
        }
        Ok(Self::project_block(dense, 0, n_x, n_y))
    }

    /// Projection of the `N_xN_y` square block of `m` at `(offset, offset)`.
    ///
    /// Each offset class `(s, t)` is averaged together with the conjugates of
    /// class `(−s, −t)`; both classes hold `(N_x−|s|)(N_y−|t|)` entries.
    pub(crate) fn project_block(m: &CMatrix, offset: usize, n_x: usize, n_y: usize) -> Self {
        let mut out = Self::zeros(n_x, n_y);
        let n = n_x * n_y;
        for col in 0..n {
            let (nn, q) = ((col / n_y) as isize, (col % n_y) as isize);
            for row in 0..n {
                let (mm, p) = ((row / n_y) as isize, (row % n_y) as isize);
                let v = m[(offset + row, offset + col)];
                let i = out.idx(nn - mm, p - q);
                out.gen[i] += v;
                let j = out.idx(mm - nn, q - p);
                out.gen[j] += v.conj();
            }
        }
        let offsets: Vec<_> = out.offsets().collect();
        for (slot, (s, t)) in out.gen.iter_mut().zip(offsets) {
            let count = (n_x - s.unsigned_abs()) * (n_y - t.unsigned_abs());
            *slot /= 2.0 * count as f64;
        }
        let g00 = out.idx(0, 0);
        out.gen[g00].im = 0.0;
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { n_x: self.n_x, n_y: self.n_y, gen: self.gen.iter().map(|z| z * k).collect() }
    }

    /// Generator as a `(2N_x−1) × (2N_y−1)` array of `[re, im]` pairs, rows
    /// indexed by the x offset.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        self.gen.chunks(2 * self.n_y - 1).map(|r| r.iter().map(|&z| cjson::pair(z)).collect()).collect()
    }
}

impl Serialize for TwoLevelToeplitz {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TwoLevelToeplitz", 3)?;
        st.serialize_field("n_x", &self.n_x)?;
        st.serialize_field("n_y", &self.n_y)?;
        st.serialize_field("generator", &self.to_rows())?;
        st.end()
    }
}

/// `𝕋 = Σ c_k b_k b_k^H` with recovered atoms and positive coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VandermondeDecomposition {
    /// `(α, β)` in degrees.
    pub atoms: Vec<(f64, f64)>,
    pub coeffs: Vec<f64>,
    /// Relative generator residual `‖gen − Σ c_k e_k‖ / ‖gen‖`.
    pub residual: f64,
}
