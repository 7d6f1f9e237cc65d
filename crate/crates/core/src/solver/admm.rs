use num_complex::Complex64;

use super::projections::{ball_project, Ellipsoid};
use super::{objective, DataFit, SdpProblem, SdpSolution, SolverOptions, Status};
use crate::error::Result;
use crate::linalg::{frobenius, hermitian_eigen, CMatrix, CVector};
use crate::toeplitz::TwoLevelToeplitz;

const ADAPT_RATIO: f64 = 5.0;
const ADAPT_FACTOR: f64 = 3.0;
const RELAXATION: f64 = 1.6;

pub(super) fn bordered(t: f64, r: &CVector, tlt: &TwoLevelToeplitz) -> CMatrix {
    let n = tlt.size();
    let mut w = CMatrix::zeros(n + 1, n + 1);
    fill_bordered(&mut w, t, r, tlt);
    w
}

fn fill_bordered(w: &mut CMatrix, t: f64, r: &CVector, tlt: &TwoLevelToeplitz) {
    w[(0, 0)] = Complex64::new(t, 0.0);
    for i in 0..r.len() {
        w[(i + 1, 0)] = r[i];
        w[(0, i + 1)] = r[i].conj();
    }
    tlt.write_dense(w, 1);
}

/// Data-fit projection on the observed entries of `r`; unobserved entries
/// are unconstrained.
enum FitProjector {
    Exact,
    Ball(f64),
    Ellipsoid(Ellipsoid, f64),
}

impl FitProjector {
    fn project(&self, center: &CVector, point: &CVector) -> CVector {
        match self {
            FitProjector::Exact => center.clone(),
            FitProjector::Ball(eta) => ball_project(center, point, *eta),
            FitProjector::Ellipsoid(e, beta) => e.project(center, point, *beta).0,
        }
    }
}

/// Positive part of a Hermitian matrix via its eigendecomposition.
fn psd_part(h: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let n = h.nrows();
    let mut out = CMatrix::zeros(n, n);
    for k in (0..n).rev() {
        let lambda = values[k];
        if lambda <= 0.0 {
            break;
        }
        let v = vectors.column(k);
        out.ger_adjoint(lambda, &v, &v);
    }
    Ok(out)
}

trait GerAdjoint {
    fn ger_adjoint(&mut self, alpha: f64, x: &nalgebra::DVectorView<Complex64>, y: &nalgebra::DVectorView<Complex64>);
}

impl GerAdjoint for CMatrix {
    fn ger_adjoint(&mut self, alpha: f64, x: &nalgebra::DVectorView<Complex64>, y: &nalgebra::DVectorView<Complex64>) {
        let n = self.nrows();
        for j in 0..n {
            let yj = y[j].conj() * alpha;
            for i in 0..n {
                self[(i, j)] += x[i] * yj;
            }
        }
    }
}

pub(super) fn run(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let g = &problem.geometry;
    let (n_x, n_y) = (g.n_x, g.n_y);
    let n = g.full_len();
    let dim = n + 1;
    let observed = g.observed_indices();
    let weight = 1.0 / (2.0 * (n as f64).sqrt());

    // Work on data normalized to unit RMS entry; the problem is homogeneous
    // of degree one in (r̂, η, 1/‖W‖).
    let scale = problem.r_hat_omega.norm() / (observed.len() as f64).sqrt();
    let center = problem.r_hat_omega.unscale(scale);
    let fit = match &problem.fit {
        DataFit::Exact => FitProjector::Exact,
        DataFit::Ball { eta } => FitProjector::Ball(eta / scale),
        DataFit::Whitened { model } => FitProjector::Ellipsoid(
            Ellipsoid::from_covariance_spectrum(&model.q_eigenvalues, &model.q_eigenvectors, scale),
            model.beta_bound,
        ),
    };

    let mut rho = opts.rho_init;
    let mut t = 0.0;
    let mut r = CVector::zeros(n);
    let mut tlt = TwoLevelToeplitz::zeros(n_x, n_y);
    let mut w = CMatrix::zeros(dim, dim);
    let mut z = CMatrix::zeros(dim, dim);
    let mut u = CMatrix::zeros(dim, dim);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut status = Status::MaxIter;
    let mut iterations = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let v = &z - &u;

        // t: minimize weight·t + ρ/2 (t − v00)²
        t = v[(0, 0)].re - weight / rho;

        // r: average the two off-diagonal borders, then project the observed
        // entries onto the data-fit set
        for i in 0..n {
            r[i] = 0.5 * (v[(i + 1, 0)] + v[(0, i + 1)].conj());
        }
        let r_obs = CVector::from_iterator(observed.len(), observed.iter().map(|&i| r[i]));
        let r_obs = fit.project(&center, &r_obs);
        for (k, &i) in observed.iter().enumerate() {
            r[i] = r_obs[k];
        }

        // 𝕋: two-level diagonal averaging; the trace term shifts gen(0,0)
        tlt = TwoLevelToeplitz::project_block(&v, 1, n_x, n_y);
        let g00 = tlt.get(0, 0).re - weight / rho;
        tlt.set(0, 0, Complex64::new(g00, 0.0));

        fill_bordered(&mut w, t, &r, &tlt);

        // over-relaxed splitting step
        let w_hat = &w * Complex64::new(RELAXATION, 0.0) + &z * Complex64::new(1.0 - RELAXATION, 0.0);
        let z_prev = std::mem::replace(&mut z, psd_part(&(&w_hat + &u))?);
        u += &w_hat - &z;

        primal = frobenius(&(&w - &z));
        dual = rho * frobenius(&(&z - &z_prev));
        let eps_primal = opts.tol + opts.tol_rel * frobenius(&w).max(frobenius(&z));
        let eps_dual = opts.tol + opts.tol_rel * rho * frobenius(&u);
        if primal <= eps_primal && dual <= eps_dual {
            status = Status::Converged;
            break;
        }

        if opts.adapt {
            if primal > ADAPT_RATIO * dual {
                rho *= ADAPT_FACTOR;
                u.unscale_mut(ADAPT_FACTOR);
            } else if dual > ADAPT_RATIO * primal {
                rho /= ADAPT_FACTOR;
                u.scale_mut(ADAPT_FACTOR);
            }
        }
    }

    // Shift by the most negative eigenvalue so the returned point is PSD;
    // this raises t and gen(0,0) by at most the primal residual.
    let (values, _) = hermitian_eigen(&bordered(t, &r, &tlt))?;
    let lambda_min = values[0];
    if lambda_min < 0.0 {
        t -= lambda_min;
        let g00 = tlt.get(0, 0).re - lambda_min;
        tlt.set(0, 0, Complex64::new(g00, 0.0));
    }

    let t = t * scale;
    let tlt = tlt.scale(scale);
    let r = r.scale(scale);
    Ok(SdpSolution {
        objective: objective(t, &tlt),
        t,
        r,
        tlt,
        iterations,
        primal_residual: primal * scale,
        dual_residual: dual * scale,
        status,
    })
}
