#![allow(dead_code)]

use doa_anm::retrieval::{retrieve, RetrievalOptions, EXACT_TAU};
use doa_anm::toeplitz::TwoLevelToeplitz;
use rand::Rng;

/// Minimum spatial-frequency separation `|Δ cos|` equivalent to a 10° phase step.
pub const MIN_SEPARATION: f64 = 1.0 / 18.0;

fn cosines(a: (f64, f64, f64)) -> (f64, f64) {
    (a.0.to_radians().cos(), a.1.to_radians().cos())
}

pub fn separated(atoms: &[(f64, f64, f64)]) -> bool {
    for i in 0..atoms.len() {
        for j in 0..i {
            let (ai, bi) = cosines(atoms[i]);
            let (aj, bj) = cosines(atoms[j]);
            if (ai - aj).abs().max((bi - bj).abs()) < MIN_SEPARATION {
                return false;
            }
        }
    }
    true
}

/// Random separated atoms `(α, β, c)` with angles in the canonical range. With
/// `share_alpha` the first two atoms use the same α.
pub fn random_atoms<R: Rng>(rng: &mut R, k: usize, share_alpha: bool) -> Vec<(f64, f64, f64)> {
    loop {
        let mut atoms: Vec<(f64, f64, f64)> = (0..k)
            .map(|_| (rng.random_range(2.0..88.0), rng.random_range(2.0..88.0), rng.random_range(0.3..2.0)))
            .collect();
        if share_alpha && k >= 2 {
            atoms[1].0 = atoms[0].0;
        }
        if separated(&atoms) {
            return atoms;
        }
    }
}

/// Builds the Toeplitz matrix of `atoms`, retrieves, and returns the largest
/// angle error in degrees after nearest-neighbour pairing, or a description
/// of the mismatch. Coefficients must come back to 1e-8 relative.
pub fn round_trip(n_x: usize, n_y: usize, atoms: &[(f64, f64, f64)]) -> Result<f64, String> {
    let (angle, power) = round_trip_detail(n_x, n_y, atoms)?;
    if power > 1e-8 {
        return Err(format!("coefficient error {power:e} for {atoms:?}"));
    }
    Ok(angle)
}

/// Minimum pairwise `max(|Δ cos α|, |Δ cos β|)` of an atom set.
pub fn min_separation(atoms: &[(f64, f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..atoms.len() {
        for j in 0..i {
            let (ai, bi) = cosines(atoms[i]);
            let (aj, bj) = cosines(atoms[j]);
            best = best.min((ai - aj).abs().max((bi - bj).abs()));
        }
    }
    best
}

/// Like [`round_trip`], also returning the worst relative coefficient error.
pub fn round_trip_detail(n_x: usize, n_y: usize, atoms: &[(f64, f64, f64)]) -> Result<(f64, f64), String> {
    let t = TwoLevelToeplitz::from_atoms(n_x, n_y, atoms).map_err(|e| e.to_string())?;
    let est = retrieve(&t, &RetrievalOptions { tau: EXACT_TAU }).map_err(|e| e.to_string())?;
    if est.k_hat != atoms.len() {
        return Err(format!("k_hat {} for {} atoms: {:?}", est.k_hat, atoms.len(), est.pairs));
    }
    let mut used = vec![false; atoms.len()];
    let mut worst: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    for &(a, b, c) in atoms {
        let (j, err) = est
            .pairs
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &(ea, eb))| (j, (ea - a).abs().max((eb - b).abs())))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(err);
        worst_power = worst_power.max(((est.powers[j] - c) / c).abs());
    }
    Ok((worst, worst_power))
}
