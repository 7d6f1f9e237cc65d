//! Structured SDP solver for the atomic-norm problems
//!
//! ```text
//! minimize   (t + tr 𝕋) / (2 sqrt(N_x N_y))
//! subject to [[t, r^H], [r, 𝕋]] ⪰ 0,  𝕋 two-level Toeplitz,
//!            r restricted by a data-fit set on the observed entries
//! ```
//!
//! solved by ADMM between the structured block `(t, r, 𝕋)` and an
//! unstructured PSD copy `Z` of the bordered matrix.

mod admm;
mod projections;

pub use projections::{ball_project, ellipsoid_project, psd_project, Ellipsoid};

use serde::{Deserialize, Serialize};

use crate::array_model::ArrayGeometry;
use crate::cjson;
use crate::covariance::ErrorModel;
use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::toeplitz::TwoLevelToeplitz;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// `r_Ω = r̂_Ω`.
    Exact,
    /// `‖r̂ − r‖₂ ≤ η` on a full array.
    Ball,
    /// `‖r̂_Ω − r_Ω‖₂ ≤ η` with missing sensors.
    SparseBall,
    /// `‖Q^(−1/2)(r̂_Ω − r_Ω)‖₂ ≤ β`.
    Whitened,
}

#[derive(Clone, Debug)]
pub enum DataFit {
    Exact,
    Ball { eta: f64 },
    Whitened { model: ErrorModel },
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub geometry: ArrayGeometry,
    /// Observed cross-covariance vector, length `M_x M_y`.
    pub r_hat_omega: CVector,
    pub fit: DataFit,
}

impl SdpProblem {
    fn new(geometry: &ArrayGeometry, r_hat_omega: CVector, fit: DataFit) -> Result<Self> {
        geometry.validate()?;
        if r_hat_omega.len() != geometry.observed_len() {
            return Err(Error::Dimension(format!(
                "observed vector has length {}, geometry expects {}",
                r_hat_omega.len(),
                geometry.observed_len()
            )));
        }
        if r_hat_omega.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("observed vector has non-finite entries".into()));
        }
        Ok(Self { geometry: geometry.clone(), r_hat_omega, fit })
    }

    pub fn exact(geometry: &ArrayGeometry, r_hat_omega: CVector) -> Result<Self> {
        Self::new(geometry, r_hat_omega, DataFit::Exact)
    }

    /// Ball-constrained problem. A negative `eta` is accepted and reported
    /// as infeasible by [`solve`].
    pub fn ball(geometry: &ArrayGeometry, r_hat_omega: CVector, eta: f64) -> Result<Self> {
        if eta.is_nan() {
            return Err(Error::Domain("eta is NaN".into()));
        }
        Self::new(geometry, r_hat_omega, DataFit::Ball { eta })
    }

    pub fn whitened(geometry: &ArrayGeometry, r_hat_omega: CVector, model: ErrorModel) -> Result<Self> {
        if model.dim() != geometry.observed_len() {
            return Err(Error::Dimension(format!(
                "error model has dimension {}, geometry expects {}",
                model.dim(),
                geometry.observed_len()
            )));
        }
        Self::new(geometry, r_hat_omega, DataFit::Whitened { model })
    }

    pub fn variant(&self) -> Variant {
        match (&self.fit, self.geometry.is_full()) {
            (DataFit::Exact, _) => Variant::Exact,
            (DataFit::Ball { .. }, true) => Variant::Ball,
            (DataFit::Ball { .. }, false) => Variant::SparseBall,
            (DataFit::Whitened { .. }, _) => Variant::Whitened,
        }
    }

    /// Data-fit violation of a full-size `r`: zero when feasible.
    pub fn fit_violation(&self, r: &CVector) -> Result<f64> {
        let r_omega = crate::covariance::select_observed(&self.geometry, r)?;
        let resid = &self.r_hat_omega - r_omega;
        Ok(match &self.fit {
            DataFit::Exact => resid.norm(),
            DataFit::Ball { eta } => (resid.norm() - eta).max(0.0),
            DataFit::Whitened { model } => {
                ((&model.whitener * resid).norm() - model.beta_bound).max(0.0)
            }
        })
    }
}

fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    20_000
}
fn default_rho() -> f64 {
    1.0
}
fn default_adapt() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Absolute residual tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Relative residual tolerance.
    #[serde(default = "default_tol")]
    pub tol_rel: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_rho")]
    pub rho_init: f64,
    /// Residual-balancing penalty adaptation.
    #[serde(default = "default_adapt")]
    pub adapt: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            tol_rel: default_tol(),
            max_iter: default_max_iter(),
            rho_init: default_rho(),
            adapt: default_adapt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpSolution {
    pub t: f64,
    /// Full-aperture vector, length `N_x N_y`.
    #[serde(with = "cjson::vector")]
    pub r: CVector,
    pub tlt: TwoLevelToeplitz,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: Status,
}

impl SdpSolution {
    fn zero(geometry: &ArrayGeometry, status: Status) -> Self {
        Self {
            t: 0.0,
            r: CVector::zeros(geometry.full_len()),
            tlt: TwoLevelToeplitz::zeros(geometry.n_x, geometry.n_y),
            objective: 0.0,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            status,
        }
    }

    /// The bordered matrix `[[t, r^H], [r, 𝕋]]`.
    pub fn bordered(&self) -> crate::linalg::CMatrix {
        admm::bordered(self.t, &self.r, &self.tlt)
    }
}

/// `(t + tr 𝕋) / (2 sqrt(N_x N_y))`.
pub fn objective(t: f64, tlt: &TwoLevelToeplitz) -> f64 {
    (t + tlt.trace()) / (2.0 * (tlt.size() as f64).sqrt())
}

pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0 && opts.tol_rel >= 0.0 && opts.rho_init > 0.0) {
        return Err(Error::Domain(format!("invalid solver options {opts:?}")));
    }
    if let DataFit::Ball { eta } = problem.fit {
        if eta < 0.0 {
            return Ok(SdpSolution::zero(&problem.geometry, Status::Infeasible));
        }
    }
    // r = 0 satisfies the data fit: the zero solution is optimal.
    if problem.fit_violation(&CVector::zeros(problem.geometry.full_len()))? == 0.0 {
        return Ok(SdpSolution::zero(&problem.geometry, Status::Converged));
    }
    admm::run(problem, opts)
}
