//! Small dense complex linear-algebra helpers shared by the estimator modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// The input is symmetrized first, so small asymmetries from round-off do
/// not leak into the spectrum.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(DVector<f64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), CMatrix::zeros(0, 0)));
    }
    let h = hermitian_part(m);
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite entries in Hermitian matrix:\n{h:.6e}"
        )));
    }
    let eig = nalgebra::SymmetricEigen::try_new(h.clone(), EIGEN_EPS, EIGEN_MAX_SWEEPS)
        .ok_or_else(|| Error::Numeric(format!("Hermitian eigensolver did not converge:\n{h:.6e}")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// `V diag(f(λ)) V^H` for a Hermitian eigendecomposition.
pub fn spectral_map(values: &DVector<f64>, vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let w = f(values[j]);
        scaled.column_mut(j).scale_mut(w);
    }
    &scaled * vectors.adjoint()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Column-major vectorization, matching `vec(R)` stacked column by column.
pub fn vec_col_major(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col_major`].
pub fn unvec_col_major(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm2(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues and right eigenvectors of a general complex square matrix.
///
/// Uses the complex Schur form `A = Q T Q^H` and back-substitution on the
/// triangular factor. Columns of the returned matrix are unit-norm.
pub fn general_eigen(a: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension("general eigendecomposition needs a square matrix".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let schur = nalgebra::Schur::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_SWEEPS)
        .ok_or_else(|| Error::Numeric(format!("Schur decomposition did not converge:\n{a:.6e}")))?;
    let (q, t) = schur.unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < 1e-14 * scale {
                denom = Complex64::new(1e-14 * scale, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut v = q * y;
    for k in 0..n {
        let nrm = v.column(k).norm();
        if nrm > 0.0 {
            v.column_mut(k).unscale_mut(nrm);
        }
    }
    Ok((values, v))
}

/// Least-squares solution of `A X = B`: Householder QR when `A` has full
/// column rank, truncated SVD otherwise.
pub fn lstsq(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() >= a.ncols() && a.ncols() > 0 {
        let qr = a.clone().qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].norm()).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if dmax > 0.0 && dmin > 1e-10 * dmax {
            let rhs = qr.q().adjoint() * b;
            if let Some(x) = r.solve_upper_triangular(&rhs) {
                return Ok(x);
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, smax * 1e-13)
        .map_err(|e| Error::Numeric(format!("least-squares solve failed: {e}")))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}
