//! Paired angle recovery from a solved two-level Toeplitz matrix.
//!
//! The signal subspace `U_s` of `𝕋 = B C B^H` spans the atoms, so shifting
//! it by one sensor along either level gives least-squares rotation
//! operators `Ψ_x`, `Ψ_y` that share the eigenvector matrix `T^{-1}` with
//! `U_s = B T`. Diagonalizing one of them and reading the other's diagonal
//! in the same basis pairs the angles.
//!
//! Because atoms conjugate the x steering vector, the x-level eigenvalues
//! are `exp(−jπ cos α_k)` while the y-level ones are `exp(+jπ cos β_k)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array_model::electrical_to_physical;
use crate::error::{Error, Result};
use crate::linalg::{general_eigen, hermitian_eigen, lstsq, CMatrix};
use crate::toeplitz::{TwoLevelToeplitz, VandermondeDecomposition};

/// Default relative eigenvalue threshold for solver output.
pub const DEFAULT_TAU: f64 = 1e-3;
/// Threshold for exactly structured synthetic input.
pub const EXACT_TAU: f64 = 1e-8;

/// Minimum eigenvalue gap of `Ψ_x` below which pairing goes through a
/// random combination `Ψ_x + ρ Ψ_y` instead.
const EIGEN_GAP: f64 = 0.05;
const FALLBACK_DRAWS: usize = 5;
const FALLBACK_SEED: u64 = 0x5eed_cafe;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOptions {
    pub tau: f64,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalAngles {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoaEstimate {
    /// `(α, β)` in degrees, sorted by α then β.
    #[serde(rename = "pairs_deg")]
    pub pairs: Vec<(f64, f64)>,
    pub powers: Vec<f64>,
    pub k_hat: usize,
    /// Elevation/azimuth per pair, `None` where no physical direction exists.
    pub physical: Vec<Option<PhysicalAngles>>,
}

/// Number of eigenvalues of `dense(𝕋)` above `tau · λ_max`.
pub fn estimate_rank(tlt: &TwoLevelToeplitz, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("rank threshold must lie in (0, 1), got {tau}")));
    }
    let (values, _) = hermitian_eigen(&tlt.dense())?;
    let lmax = values.iter().cloned().fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|&&v| v > tau * lmax).count())
}

/// Largest `k` the shift-invariance equations can resolve.
pub fn shift_capacity(n_x: usize, n_y: usize) -> usize {
    ((n_x - 1) * n_y).min(n_x * (n_y - 1))
}

fn shifted_rows(n_x: usize, n_y: usize, x_level: bool) -> (Vec<usize>, Vec<usize>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for m in 0..n_x {
        for p in 0..n_y {
            let row = m * n_y + p;
            let (lo_ok, hi_ok) = if x_level { (m + 1 < n_x, m >= 1) } else { (p + 1 < n_y, p >= 1) };
            if lo_ok {
                first.push(row);
            }
            if hi_ok {
                second.push(row);
            }
        }
    }
    (first, second)
}

fn gather_rows(u: &CMatrix, rows: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), u.ncols(), |i, j| u[(rows[i], j)])
}

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Phase (in units of π) mapped to a cosine in `[0, 1]`. Values just past
/// ±π are unwrapped before clamping.
fn phase_to_cosine(u: f64) -> f64 {
    let u = if u < -0.5 { u + 2.0 } else { u };
    u.clamp(0.0, 1.0)
}

/// Rank-`k` Vandermonde decomposition by 2-D ESPRIT.
pub fn decompose(tlt: &TwoLevelToeplitz, k: usize) -> Result<VandermondeDecomposition> {
    let (n_x, n_y) = (tlt.n_x(), tlt.n_y());
    if k == 0 {
        return Ok(VandermondeDecomposition { atoms: vec![], coeffs: vec![], residual: 0.0 });
    }
    let cap = shift_capacity(n_x, n_y);
    if k > cap {
        return Err(Error::Domain(format!(
            "rank {k} exceeds the shift capacity {cap} of a {n_x}x{n_y} two-level Toeplitz matrix"
        )));
    }
    let n = tlt.size();
    let (_, vectors) = hermitian_eigen(&tlt.dense())?;
    let us = vectors.columns(n - k, k).into_owned();

    let rotation = |x_level: bool| -> Result<CMatrix> {
        let (first, second) = shifted_rows(n_x, n_y, x_level);
        lstsq(&gather_rows(&us, &first), &gather_rows(&us, &second))
    };
    let psi_x = rotation(true)?;
    let psi_y = rotation(false)?;

    let (values, mut basis) = general_eigen(&psi_x)?;
    if k > 1 && min_gap(&values) < EIGEN_GAP {
        let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
        let mut best_gap = -1.0;
        for _ in 0..FALLBACK_DRAWS {
            let rho = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let combo = &psi_x + psi_y.map(|z| z * rho);
            let (vals, vecs) = general_eigen(&combo)?;
            let gap = min_gap(&vals);
            if gap > best_gap {
                best_gap = gap;
                basis = vecs;
            }
            if gap >= EIGEN_GAP {
                break;
            }
        }
    }
    let inv = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("ESPRIT eigenvector matrix is singular".into()))?;
    let dx = &inv * &psi_x * &basis;
    let dy = &inv * &psi_y * &basis;

    let cosines: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let ux = phase_to_cosine(-dx[(i, i)].arg() / std::f64::consts::PI);
            let uy = phase_to_cosine(dy[(i, i)].arg() / std::f64::consts::PI);
            (ux, uy)
        })
        .collect();

    let (coeffs, residual) = fit_coefficients(tlt, &cosines);
    let atoms = cosines.iter().map(|&(ux, uy)| (ux.acos().to_degrees(), uy.acos().to_degrees())).collect();
    Ok(VandermondeDecomposition { atoms, coeffs, residual })
}

/// Nonnegative least-squares fit of the generator onto atom generators.
fn fit_coefficients(tlt: &TwoLevelToeplitz, cosines: &[(f64, f64)]) -> (Vec<f64>, f64) {
    let pi = std::f64::consts::PI;
    let offsets: Vec<_> = tlt.offsets().collect();
    let rows = offsets.len();
    let k = cosines.len();
    let mut a = DMatrix::<f64>::zeros(2 * rows, k);
    let mut b = DVector::<f64>::zeros(2 * rows);
    for (i, &(s, t)) in offsets.iter().enumerate() {
        let g = tlt.generator()[i];
        b[i] = g.re;
        b[rows + i] = g.im;
        for (j, &(ux, uy)) in cosines.iter().enumerate() {
            let e = Complex64::from_polar(1.0, pi * (s as f64 * ux + t as f64 * uy));
            a[(i, j)] = e.re;
            a[(rows + i, j)] = e.im;
        }
    }
    let c = nnls(&a, &b);
    let bnorm = b.norm();
    let residual = if bnorm > 0.0 { (&a * &c - &b).norm() / bnorm } else { 0.0 };
    (c.iter().copied().collect(), residual)
}

/// Lawson–Hanson active-set nonnegative least squares.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::zeros(n);
        if idx.is_empty() {
            return z;
        }
        let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])]);
        let sol = sub.svd(true, true).solve(b, 1e-14).unwrap_or_else(|_| DVector::zeros(idx.len()));
        for (j, &col) in idx.iter().enumerate() {
            z[col] = sol[j];
        }
        z
    };

    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            let infeasible: Vec<usize> = (0..n).filter(|&j| passive[j] && z[j] <= 0.0).collect();
            if infeasible.is_empty() {
                x = z;
                break;
            }
            let alpha = infeasible
                .iter()
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x += (&z - &x) * alpha;
            for j in 0..n {
                if passive[j] && x[j] <= 1e-15 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    x
}

/// Rank estimation, decomposition, and sorting into a [`DoaEstimate`].
pub fn retrieve(tlt: &TwoLevelToeplitz, opts: &RetrievalOptions) -> Result<DoaEstimate> {
    let k = estimate_rank(tlt, opts.tau)?;
    let k = k.min(shift_capacity(tlt.n_x(), tlt.n_y()));
    let dec = decompose(tlt, k)?;
    let mut found: Vec<((f64, f64), f64)> = dec
        .atoms
        .into_iter()
        .zip(dec.coeffs)
        .filter(|&(_, c)| c > 0.0)
        .collect();
    found.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    let physical = found
        .iter()
        .map(|&((a, b), _)| electrical_to_physical(a, b).map(|(theta_deg, phi_deg)| PhysicalAngles { theta_deg, phi_deg }))
        .collect();
    Ok(DoaEstimate {
        k_hat: found.len(),
        pairs: found.iter().map(|f| f.0).collect(),
        powers: found.iter().map(|f| f.1).collect(),
        physical,
    })
}
