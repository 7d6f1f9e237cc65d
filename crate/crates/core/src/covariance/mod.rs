//! Sample cross-covariance, sparse-array selection, and the asymptotic error
//! model used by the whitened estimator.

mod chi2;

pub use chi2::{chi2_cdf, chi2_quantile, ln_gamma, regularized_gamma};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::array_model::{ArrayGeometry, Snapshots};
use crate::cjson;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, spectral_map, vec_col_major, CMatrix, CVector};

/// Relative diagonal loading applied to plug-in arm covariances.
pub const DIAGONAL_LOADING: f64 = 1e-8;
/// Eigenvalue floor (relative to the largest) used when inverting `Q`.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCovariance {
    /// `R̂ = Y X^H / L`, `M_y × M_x`.
    #[serde(with = "cjson::matrix")]
    pub r_hat_mat: CMatrix,
    /// Column-major `vec(R̂)`.
    #[serde(with = "cjson::vector")]
    pub r_hat: CVector,
    pub l: usize,
}

pub fn sample_ccm(snapshots: &Snapshots) -> Result<CrossCovariance> {
    snapshots.validate()?;
    let l = snapshots.l;
    let r = (&snapshots.y * snapshots.x.adjoint()).unscale(l as f64);
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite entries in sample cross-covariance".into()));
    }
    Ok(CrossCovariance { r_hat: vec_col_major(&r), r_hat_mat: r, l })
}

/// Selection matrices `Γ_x` (`M_x × N_x`) and `Γ_y` (`M_y × N_y`).
pub fn selection_operator(geometry: &ArrayGeometry) -> (DMatrix<f64>, DMatrix<f64>) {
    let build = |omega: &[usize], n: usize| {
        let mut g = DMatrix::zeros(omega.len(), n);
        for (m, &o) in omega.iter().enumerate() {
            g[(m, o - 1)] = 1.0;
        }
        g
    };
    (build(&geometry.omega_x, geometry.n_x), build(&geometry.omega_y, geometry.n_y))
}

/// `(Γ_x ⊗ Γ_y) r`, i.e. `vec(Γ_y R Γ_x^H)`, applied by index gathering.
pub fn select_observed(geometry: &ArrayGeometry, full: &CVector) -> Result<CVector> {
    if full.len() != geometry.full_len() {
        return Err(Error::Dimension(format!(
            "full vector has length {}, expected {}",
            full.len(),
            geometry.full_len()
        )));
    }
    let idx = geometry.observed_indices();
    Ok(CVector::from_iterator(idx.len(), idx.iter().map(|&i| full[i])))
}

/// Asymptotic covariance of the cross-covariance estimation error and the
/// derived whitening transform and chi-square radius.
#[derive(Clone, Debug)]
pub struct ErrorModel {
    /// `Q = (1/L) R_x^T ⊗ R_y`, `M_xM_y` square.
    pub q: CMatrix,
    /// `Q^(−1/2)`.
    pub whitener: CMatrix,
    /// `β = sqrt(chi2_quantile(1 − κ, M_xM_y))`.
    pub beta_bound: f64,
    pub kappa: f64,
    /// Ascending eigenvalues of `Q` after flooring.
    pub q_eigenvalues: DVector<f64>,
    pub q_eigenvectors: CMatrix,
}

impl Serialize for ErrorModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ErrorModel", 4)?;
        st.serialize_field("q", &cjson::matrix_rows(&self.q))?;
        st.serialize_field("whitener", &cjson::matrix_rows(&self.whitener))?;
        st.serialize_field("beta_bound", &self.beta_bound)?;
        st.serialize_field("kappa", &self.kappa)?;
        st.end()
    }
}

impl ErrorModel {
    /// Builds the model from explicit arm covariances (true or estimated).
    pub fn from_arm_covariances(rx: &CMatrix, ry: &CMatrix, l: usize, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 0.5) {
            return Err(Error::Domain(format!("kappa must lie in (0, 0.5], got {kappa}")));
        }
        if l == 0 {
            return Err(Error::Dimension("snapshot count must be at least 1".into()));
        }
        let q = rx.transpose().kronecker(ry).unscale(l as f64);
        let q = crate::linalg::hermitian_part(&q);
        Self::from_q(q, kappa)
    }

    pub fn from_q(q: CMatrix, kappa: f64) -> Result<Self> {
        let (mut values, vectors) = hermitian_eigen(&q)?;
        let lmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lmax.is_finite() && lmax > f64::MIN_POSITIVE) {
            return Err(Error::SingularCovariance(format!(
                "largest eigenvalue of Q is {lmax:e}; check that the snapshots carry signal or noise"
            )));
        }
        let floor = EIGEN_FLOOR * lmax;
        values.iter_mut().for_each(|v| *v = v.max(floor));
        let whitener = spectral_map(&values, &vectors, |v| 1.0 / v.sqrt());
        let dof = q.nrows();
        let beta_bound = chi2_quantile(1.0 - kappa, dof)?.sqrt();
        Ok(Self { q, whitener, beta_bound, kappa, q_eigenvalues: values, q_eigenvectors: vectors })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }
}

/// Plug-in error model: arm covariances are replaced by diagonally loaded
/// sample covariances `X X^H / L` and `Y Y^H / L`.
pub fn estimate_error_model(snapshots: &Snapshots, kappa: f64) -> Result<ErrorModel> {
    snapshots.validate()?;
    let l = snapshots.l as f64;
    let arm = |d: &CMatrix| {
        let mut r = (d * d.adjoint()).unscale(l);
        let m = r.nrows();
        let load = DIAGONAL_LOADING * r.trace().re / m as f64;
        for i in 0..m {
            r[(i, i)] += Complex64::new(load, 0.0);
        }
        r
    };
    ErrorModel::from_arm_covariances(&arm(&snapshots.x), &arm(&snapshots.y), snapshots.l, kappa)
}

/// `Q^(−1/2) · residual`.
pub fn whiten(model: &ErrorModel, residual: &CVector) -> Result<CVector> {
    if residual.len() != model.dim() {
        return Err(Error::Dimension(format!(
            "residual length {} does not match error model dimension {}",
            residual.len(),
            model.dim()
        )));
    }
    Ok(&model.whitener * residual)
}
