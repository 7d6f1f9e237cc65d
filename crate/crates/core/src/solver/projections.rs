//! Euclidean projections used by the operator-splitting iteration.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, CVector};

/// Frobenius-nearest PSD matrix: negative eigenvalues are clipped to zero.
pub fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    let n = h.nrows();
    let (values, vectors) = hermitian_eigen(h)?;
    let keep: Vec<usize> = (0..n).filter(|&i| values[i] > 0.0).collect();
    let mut scaled = CMatrix::zeros(n, keep.len());
    let mut basis = CMatrix::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &vectors.column(i));
        scaled.set_column(j, &vectors.column(i).scale(values[i]));
    }
    Ok(scaled * basis.adjoint())
}

/// Projection onto `{v : ‖v − center‖₂ ≤ radius}`.
pub fn ball_project(center: &CVector, point: &CVector, radius: f64) -> CVector {
    let d = point - center;
    let n = d.norm();
    if n <= radius {
        point.clone()
    } else if radius <= 0.0 {
        center.clone()
    } else {
        center + d.scale(radius / n)
    }
}

/// Ellipsoid `{v : ‖W (center − v)‖₂ ≤ radius}` described by the spectral
/// decomposition `W^H W = V diag(w) V^H`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    weights: DVector<f64>,
    vectors: CMatrix,
}

/// Relative tolerance on the boundary condition `‖W d‖ = radius`.
const BOUNDARY_TOL: f64 = 1e-12;

impl Ellipsoid {
    pub fn from_whitener(whitener: &CMatrix) -> Result<Self> {
        if whitener.nrows() != whitener.ncols() {
            return Err(Error::Dimension("whitener must be square".into()));
        }
        let gram = whitener.adjoint() * whitener;
        let (weights, vectors) = hermitian_eigen(&gram)?;
        Ok(Self { weights: weights.map(|w| w.max(0.0)), vectors })
    }

    /// From an orthonormal eigenbasis of `Q` and its eigenvalues, for the
    /// whitener `Q^(−1/2)` scaled by `scale`.
    pub fn from_covariance_spectrum(q_values: &DVector<f64>, q_vectors: &CMatrix, scale: f64) -> Self {
        Self { weights: q_values.map(|l| scale * scale / l), vectors: q_vectors.clone() }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `‖W x‖₂`.
    pub fn norm(&self, x: &CVector) -> f64 {
        let y = self.vectors.adjoint() * x;
        y.iter().zip(self.weights.iter()).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Nearest point to `point` inside the ellipsoid; also returns the
    /// Lagrange multiplier (zero for interior points).
    ///
    /// The minimizer is `center + (I + μ W^H W)^{-1}(point − center)` with
    /// `μ` the root of the decreasing function
    /// `φ(μ) = Σ w_i |y_i|² / (1 + μ w_i)² − radius²`.
    pub fn project(&self, center: &CVector, point: &CVector, radius: f64) -> (CVector, f64) {
        let x = point - center;
        let y = self.vectors.adjoint() * &x;
        let mag: Vec<f64> = y.iter().map(|z| z.norm_sqr()).collect();
        let w = self.weights.as_slice();
        let constraint = |mu: f64| -> f64 {
            mag.iter().zip(w).map(|(m, &wi)| wi * m / (1.0 + mu * wi).powi(2)).sum::<f64>()
        };
        let r2 = radius * radius;
        if constraint(0.0) <= r2 {
            return (point.clone(), 0.0);
        }
        if radius <= 0.0 {
            return (center.clone(), f64::INFINITY);
        }

        let mut lo = 0.0;
        let mut hi = 1.0;
        while constraint(hi) > r2 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                break;
            }
        }
        // Newton on ψ(μ) = 1/sqrt(c(μ)) − 1/radius, which is close to linear.
        let mut mu = 0.5 * (lo + hi);
        for _ in 0..200 {
            let c = constraint(mu);
            let f = 1.0 / c.sqrt() - 1.0 / radius;
            if (c.sqrt() - radius).abs() <= BOUNDARY_TOL * radius {
                break;
            }
            if f < 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            let dc: f64 = mag.iter().zip(w).map(|(m, &wi)| -2.0 * wi * wi * m / (1.0 + mu * wi).powi(3)).sum();
            let df = -0.5 * c.powf(-1.5) * dc;
            let mut next = mu - f / df;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - mu).abs() <= 1e-16 * mu.max(1e-300) {
                mu = next;
                break;
            }
            mu = next;
        }
        let shrink = CVector::from_iterator(
            y.len(),
            y.iter().zip(w).map(|(z, &wi)| z / (1.0 + mu * wi)),
        );
        let mut d = &self.vectors * shrink;
        // land exactly on (or inside) the boundary
        let achieved = self.norm(&d);
        if achieved > radius {
            d.scale_mut(radius / achieved);
        }
        (center + d, mu)
    }
}

/// Projection of `point` onto `{v : ‖whitener (center − v)‖₂ ≤ radius}`.
pub fn ellipsoid_project(center: &CVector, point: &CVector, whitener: &CMatrix, radius: f64) -> Result<CVector> {
    if radius <= 0.0 {
        return Err(Error::Domain(format!("ellipsoid radius must be positive, got {radius}")));
    }
    if center.len() != point.len() || whitener.nrows() != point.len() {
        return Err(Error::Dimension("ellipsoid projection operands disagree in length".into()));
    }
    Ok(Ellipsoid::from_whitener(whitener)?.project(center, point, radius).0)
}
