//! L-shaped array geometry, steering vectors, atoms and snapshot simulation.
//!
//! Sensor positions are 1-based indices along each arm at half-wavelength
//! spacing; index 1 is the origin sensor shared by both arms. Element `n` of
//! a full steering vector is `exp(jπ(n−1)cos θ)` for electrical angle `θ`.
//! Angles cross the API in degrees.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cjson;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GeometryFields")]
pub struct ArrayGeometry {
    pub n_x: usize,
    pub n_y: usize,
    /// 1-based sensor positions on the x arm, strictly increasing.
    pub omega_x: Vec<usize>,
    pub omega_y: Vec<usize>,
}

/// Serialized form; either arm may give its aperture, its index set, or both.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFields {
    n_x: Option<usize>,
    n_y: Option<usize>,
    omega_x: Option<Vec<usize>>,
    omega_y: Option<Vec<usize>>,
}

fn arm(name: &str, n: Option<usize>, omega: Option<Vec<usize>>) -> Result<(usize, Vec<usize>)> {
    match (n, omega) {
        (Some(n), Some(o)) => Ok((n, o)),
        (Some(n), None) => Ok((n, (1..=n).collect())),
        (None, Some(o)) => Ok((o.last().copied().unwrap_or(0), o)),
        (None, None) => Err(Error::Geometry(format!("{name} arm needs n_{name} or omega_{name}"))),
    }
}

impl TryFrom<GeometryFields> for ArrayGeometry {
    type Error = Error;
    fn try_from(f: GeometryFields) -> Result<Self> {
        Self::from_parts(f.n_x, f.n_y, f.omega_x, f.omega_y)
    }
}

impl ArrayGeometry {
    /// Builds a geometry from optional apertures and index sets. A missing
    /// index set means a full ULA; a missing aperture is the outermost sensor.
    pub fn from_parts(
        n_x: Option<usize>,
        n_y: Option<usize>,
        omega_x: Option<Vec<usize>>,
        omega_y: Option<Vec<usize>>,
    ) -> Result<Self> {
        let (n_x, omega_x) = arm("x", n_x, omega_x)?;
        let (n_y, omega_y) = arm("y", n_y, omega_y)?;
        let g = Self { n_x, n_y, omega_x, omega_y };
        g.validate()?;
        Ok(g)
    }

    /// Builds a geometry from the two index sets; apertures are the outermost
    /// sensors.
    pub fn new(omega_x: Vec<usize>, omega_y: Vec<usize>) -> Result<Self> {
        let n_x = omega_x.last().copied().unwrap_or(0);
        let n_y = omega_y.last().copied().unwrap_or(0);
        let g = Self { n_x, n_y, omega_x, omega_y };
        g.validate()?;
        Ok(g)
    }

    pub fn uniform(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new((1..=n_x).collect(), (1..=n_y).collect())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, omega, n) in [("x", &self.omega_x, self.n_x), ("y", &self.omega_y, self.n_y)] {
            if omega.first() != Some(&1) {
                return Err(Error::Geometry(format!(
                    "{name} arm must contain the origin sensor 1, got {omega:?}"
                )));
            }
            if omega.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Geometry(format!(
                    "{name} arm indices must be strictly increasing, got {omega:?}"
                )));
            }
            if omega.last() != Some(&n) {
                return Err(Error::Geometry(format!(
                    "{name} arm aperture {n} does not match outermost sensor {:?}",
                    omega.last()
                )));
            }
        }
        Ok(())
    }

    pub fn m_x(&self) -> usize {
        self.omega_x.len()
    }

    pub fn m_y(&self) -> usize {
        self.omega_y.len()
    }

    /// Length of full-aperture atoms, `N_x N_y`.
    pub fn full_len(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Length of the observed cross-covariance vector, `M_x M_y`.
    pub fn observed_len(&self) -> usize {
        self.m_x() * self.m_y()
    }

    pub fn is_full(&self) -> bool {
        self.m_x() == self.n_x && self.m_y() == self.n_y
    }

    /// Positions in a full column-major `vec` (length `N_x N_y`) of the entries
    /// kept by `Γ_x ⊗ Γ_y`, in the order they appear in the observed vector.
    pub fn observed_indices(&self) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.observed_len());
        for &ox in &self.omega_x {
            for &oy in &self.omega_y {
                idx.push((ox - 1) * self.n_y + (oy - 1));
            }
        }
        idx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

pub(crate) fn check_angle(angle_deg: f64) -> Result<f64> {
    if !(-90.0..90.0).contains(&angle_deg) {
        return Err(Error::AngleOutOfRange(angle_deg));
    }
    Ok(angle_deg.to_radians())
}

/// Spatial phase increment per sensor, `π cos θ`.
pub fn spatial_phase(angle_deg: f64) -> f64 {
    std::f64::consts::PI * angle_deg.to_radians().cos()
}

fn phasor(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Steering vector of one arm. `full` returns all `N` aperture positions,
/// otherwise only the rows selected by the arm's index set.
pub fn steering_vector(axis: Axis, angle_deg: f64, geometry: &ArrayGeometry, full: bool) -> Result<CVector> {
    let theta = check_angle(angle_deg)?;
    let step = std::f64::consts::PI * theta.cos();
    let (n, omega) = match axis {
        Axis::X => (geometry.n_x, &geometry.omega_x),
        Axis::Y => (geometry.n_y, &geometry.omega_y),
    };
    let v = if full {
        CVector::from_iterator(n, (0..n).map(|i| phasor(step * i as f64)))
    } else {
        CVector::from_iterator(omega.len(), omega.iter().map(|&i| phasor(step * (i - 1) as f64)))
    };
    Ok(v)
}

/// One element of the atom set: `b = conj(a_x(α)) ⊗ a_y(β)` over the full
/// aperture.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub b: CVector,
}

pub fn make_atom(alpha_deg: f64, beta_deg: f64, geometry: &ArrayGeometry) -> Result<Atom> {
    let ax = steering_vector(Axis::X, alpha_deg, geometry, true)?;
    let ay = steering_vector(Axis::Y, beta_deg, geometry, true)?;
    let b = ax.map(|z| z.conj()).kronecker(&ay);
    Ok(Atom { alpha_deg, beta_deg, b })
}

/// Atom entries from spatial frequencies directly, without the angle range
/// check. `ux = cos α`, `uy = cos β`.
#[cfg(test)]
pub(crate) fn atom_from_cosines(ux: f64, uy: f64, n_x: usize, n_y: usize) -> CVector {
    let pi = std::f64::consts::PI;
    CVector::from_iterator(
        n_x * n_y,
        (0..n_x).flat_map(|m| (0..n_y).map(move |p| phasor(pi * (p as f64 * uy - m as f64 * ux)))),
    )
}

fn default_powers() -> Vec<f64> {
    Vec::new()
}

/// Ground-truth sources and the noise level for a simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub alpha_deg: Vec<f64>,
    pub beta_deg: Vec<f64>,
    /// Source powers; an empty list means unit power for every source.
    #[serde(default = "default_powers")]
    pub powers: Vec<f64>,
    /// Per-sensor SNR in dB relative to the mean source power. `None` is
    /// noise-free.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SourceConfig {
    pub fn new(alpha_deg: Vec<f64>, beta_deg: Vec<f64>, snr_db: Option<f64>, seed: u64) -> Result<Self> {
        let powers = vec![1.0; alpha_deg.len()];
        let s = Self { alpha_deg, beta_deg, powers, snr_db, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.alpha_deg.len()
    }

    pub fn powers(&self) -> Vec<f64> {
        if self.powers.is_empty() {
            vec![1.0; self.k()]
        } else {
            self.powers.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Sources("at least one source is required".into()));
        }
        if self.beta_deg.len() != k {
            return Err(Error::Sources(format!(
                "{} alpha angles but {} beta angles",
                k,
                self.beta_deg.len()
            )));
        }
        if !self.powers.is_empty() && self.powers.len() != k {
            return Err(Error::Sources(format!("{} sources but {} powers", k, self.powers.len())));
        }
        if self.powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Sources("source powers must be positive and finite".into()));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::Sources("snr_db is NaN".into()));
            }
        }
        for &a in self.alpha_deg.iter().chain(&self.beta_deg) {
            check_angle(a)?;
        }
        Ok(())
    }

    /// Per-sensor noise variance `σ² = 10^(−SNR/10) · mean(p)`.
    pub fn noise_variance(&self) -> f64 {
        match self.snr_db {
            None => 0.0,
            Some(snr) if snr == f64::INFINITY => 0.0,
            Some(snr) => {
                let p = self.powers();
                let mean = p.iter().sum::<f64>() / p.len() as f64;
                10f64.powf(-snr / 10.0) * mean
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshots {
    pub geometry: ArrayGeometry,
    /// x-arm outputs, `M_x × L`.
    #[serde(with = "cjson::matrix")]
    pub x: CMatrix,
    /// y-arm outputs, `M_y × L`.
    #[serde(with = "cjson::matrix")]
    pub y: CMatrix,
    pub l: usize,
    pub truth: SourceConfig,
}

impl Snapshots {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let (mx, my) = (self.geometry.m_x(), self.geometry.m_y());
        if self.l == 0 {
            return Err(Error::Dimension("snapshot count must be at least 1".into()));
        }
        if self.x.shape() != (mx, self.l) || self.y.shape() != (my, self.l) {
            return Err(Error::Dimension(format!(
                "expected X {}x{} and Y {}x{}, got X {:?} and Y {:?}",
                mx,
                self.l,
                my,
                self.l,
                self.x.shape(),
                self.y.shape()
            )));
        }
        Ok(())
    }
}

/// Manifold of the observed sensors of one arm for all sources, `M × K`.
pub fn manifold(axis: Axis, angles_deg: &[f64], geometry: &ArrayGeometry) -> Result<CMatrix> {
    let m = match axis {
        Axis::X => geometry.m_x(),
        Axis::Y => geometry.m_y(),
    };
    let mut a = CMatrix::zeros(m, angles_deg.len());
    for (k, &ang) in angles_deg.iter().enumerate() {
        a.set_column(k, &steering_vector(axis, ang, geometry, false)?);
    }
    Ok(a)
}

fn complex_gaussian(rng: &mut ChaCha8Rng, std_per_component: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * std_per_component, im * std_per_component)
}

/// Draws `L` snapshots of `X = A_x S + V_x`, `Y = A_y S + V_y`.
///
/// Sources are i.i.d. circular Gaussian with variance `p_k`; the two arms get
/// independent noise, including on the shared origin sensor. Draws are made
/// snapshot by snapshot, so for a fixed seed the first `L₁` columns of an
/// `L₂ > L₁` simulation equal the `L₁` simulation.
pub fn simulate(geometry: &ArrayGeometry, sources: &SourceConfig, l: usize) -> Result<Snapshots> {
    geometry.validate()?;
    sources.validate()?;
    if l == 0 {
        return Err(Error::Dimension("snapshot count must be at least 1".into()));
    }
    let ax = manifold(Axis::X, &sources.alpha_deg, geometry)?;
    let ay = manifold(Axis::Y, &sources.beta_deg, geometry)?;
    let powers = sources.powers();
    let k = sources.k();
    let noise_std = (sources.noise_variance() / 2.0).sqrt();
    let (mx, my) = (geometry.m_x(), geometry.m_y());

    let mut rng = ChaCha8Rng::seed_from_u64(sources.seed);
    let mut s = CMatrix::zeros(k, l);
    let mut vx = CMatrix::zeros(mx, l);
    let mut vy = CMatrix::zeros(my, l);
    for t in 0..l {
        for (i, p) in powers.iter().enumerate() {
            s[(i, t)] = complex_gaussian(&mut rng, (p / 2.0).sqrt());
        }
        for i in 0..mx {
            vx[(i, t)] = complex_gaussian(&mut rng, noise_std);
        }
        for i in 0..my {
            vy[(i, t)] = complex_gaussian(&mut rng, noise_std);
        }
    }
    Ok(Snapshots {
        geometry: geometry.clone(),
        x: &ax * &s + vx,
        y: &ay * &s + vy,
        l,
        truth: sources.clone(),
    })
}

/// Infinite-snapshot cross-covariance `R = A_y P A_x^H` on the observed
/// sensors, `M_y × M_x`.
pub fn analytic_ccm(geometry: &ArrayGeometry, sources: &SourceConfig) -> Result<CMatrix> {
    sources.validate()?;
    let ax = manifold(Axis::X, &sources.alpha_deg, geometry)?;
    let ay = manifold(Axis::Y, &sources.beta_deg, geometry)?;
    let p = DMatrix::from_diagonal(&CVector::from_iterator(
        sources.k(),
        sources.powers().into_iter().map(|x| Complex64::new(x, 0.0)),
    ));
    Ok(ay * p * ax.adjoint())
}

/// Elevation `θ` and azimuth `φ` (degrees) from the two electrical angles,
/// or `None` when `cos²α + cos²β > 1` and no physical direction exists.
pub fn electrical_to_physical(alpha_deg: f64, beta_deg: f64) -> Option<(f64, f64)> {
    const SLACK: f64 = 1e-12;
    let ca = alpha_deg.to_radians().cos();
    let cb = beta_deg.to_radians().cos();
    let s = ca * ca + cb * cb;
    if !s.is_finite() || s > 1.0 + SLACK {
        return None;
    }
    let theta = s.min(1.0).sqrt().asin().to_degrees();
    let phi = cb.atan2(ca).to_degrees();
    Some((theta, phi))
}

/// Representative of an electrical angle in `[0°, 90°]`.
///
/// Steering vectors depend on `cos θ` only, so `θ` and `−θ` are the same
/// atom; estimates are reported in this canonical range.
pub fn canonical_angle(angle_deg: f64) -> f64 {
    angle_deg.abs()
}
