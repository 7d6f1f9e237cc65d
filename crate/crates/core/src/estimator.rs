//! End-to-end pipeline: sample cross-covariance, optional error model,
//! structured SDP, angle retrieval.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::array_model::Snapshots;
use crate::covariance::{estimate_error_model, sample_ccm};
use crate::error::{Error, Result};
use crate::retrieval::{retrieve, DoaEstimate, RetrievalOptions, DEFAULT_TAU};
use crate::solver::{solve, SdpProblem, SdpSolution, SolverOptions, Status};

/// Default tail probability for the chi-square radius.
pub const DEFAULT_KAPPA: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Euclidean ball data fit with user radius `η`.
    CcAnm,
    /// Whitened chi-square data fit.
    MccAnm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::CcAnm => "cc_anm",
            Method::MccAnm => "mcc_anm",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cc_anm" => Ok(Method::CcAnm),
            "mcc_anm" => Ok(Method::MccAnm),
            other => Err(Error::Domain(format!("unknown method {other:?}; expected cc_anm or mcc_anm"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Ball radius, required by `cc_anm`.
    pub eta: Option<f64>,
    pub kappa: f64,
    pub retrieval: RetrievalOptions,
    pub solver: SolverOptions,
}

impl EstimatorConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            eta: None,
            kappa: DEFAULT_KAPPA,
            retrieval: RetrievalOptions { tau: DEFAULT_TAU },
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    pub status: Status,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub solve_seconds: f64,
    #[serde(flatten)]
    pub estimate: DoaEstimate,
}

pub fn build_problem(snapshots: &Snapshots, config: &EstimatorConfig) -> Result<SdpProblem> {
    let ccm = sample_ccm(snapshots)?;
    match config.method {
        Method::CcAnm => {
            let eta = config
                .eta
                .ok_or_else(|| Error::Domain("cc_anm requires a ball radius eta".into()))?;
            SdpProblem::ball(&snapshots.geometry, ccm.r_hat, eta)
        }
        Method::MccAnm => {
            let model = estimate_error_model(snapshots, config.kappa)?;
            SdpProblem::whitened(&snapshots.geometry, ccm.r_hat, model)
        }
    }
}

/// Solves and times the SDP only.
pub fn timed_solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<(SdpSolution, f64)> {
    let start = Instant::now();
    let sol = solve(problem, opts)?;
    Ok((sol, start.elapsed().as_secs_f64()))
}

pub fn estimate(snapshots: &Snapshots, config: &EstimatorConfig) -> Result<EstimateReport> {
    let problem = build_problem(snapshots, config)?;
    let (sol, solve_seconds) = timed_solve(&problem, &config.solver)?;
    let estimate = retrieve(&sol.tlt, &config.retrieval)?;
    Ok(EstimateReport {
        method: config.method,
        status: sol.status,
        objective: sol.objective,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        solve_seconds,
        estimate,
    })
}
