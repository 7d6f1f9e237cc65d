//! Monte-Carlo benchmark harness: repeated simulation and estimation over a
//! snapshot grid, error matching against the truth, CSV emission.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array_model::{analytic_ccm, canonical_angle, simulate, ArrayGeometry, SourceConfig};
use crate::covariance::sample_ccm;
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorConfig, Method, DEFAULT_KAPPA};
use crate::linalg::vec_col_major;
use crate::retrieval::{DoaEstimate, RetrievalOptions, DEFAULT_TAU};
use crate::solver::SolverOptions;

/// Per-dimension penalty for a truth source with no matching estimate.
pub const MISS_PENALTY_DEG: f64 = 90.0;

/// Ball radius for `cc_anm`: a fixed number, or `"oracle"` for the
/// per-trial `‖r̂ − r‖₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaChoice {
    Fixed(f64),
    Named(EtaName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaName {
    Oracle,
}

impl EtaChoice {
    pub const ORACLE: EtaChoice = EtaChoice::Named(EtaName::Oracle);
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_methods() -> Vec<Method> {
    vec![Method::CcAnm, Method::MccAnm]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub geometry: ArrayGeometry,
    pub alpha_deg: Vec<f64>,
    pub beta_deg: Vec<f64>,
    #[serde(default)]
    pub powers: Vec<f64>,
    pub snr_db: Option<f64>,
    pub snapshot_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub eta: Option<EtaChoice>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.sources(0).validate()?;
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if self.snapshot_grid.is_empty() {
            return Err(Error::Domain("snapshot_grid is empty".into()));
        }
        if self.snapshot_grid[0] == 0 || self.snapshot_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "snapshot_grid must be positive and strictly ascending, got {:?}",
                self.snapshot_grid
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Domain("no methods selected".into()));
        }
        if self.methods.contains(&Method::CcAnm) {
            match self.eta {
                None => return Err(Error::Domain("cc_anm requires eta (a number or \"oracle\")".into())),
                Some(EtaChoice::Fixed(e)) if !(e >= 0.0 && e.is_finite()) => {
                    return Err(Error::Domain(format!("eta must be finite and nonnegative, got {e}")))
                }
                _ => {}
            }
        }
        if self.methods.contains(&Method::MccAnm) && !(self.kappa > 0.0 && self.kappa <= 0.5) {
            return Err(Error::Domain(format!("kappa must lie in (0, 0.5], got {}", self.kappa)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Domain(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }

    /// Source configuration of one trial.
    pub fn sources(&self, trial: usize) -> SourceConfig {
        SourceConfig {
            alpha_deg: self.alpha_deg.clone(),
            beta_deg: self.beta_deg.clone(),
            powers: self.powers.clone(),
            snr_db: self.snr_db,
            seed: trial_seed(self.seed, trial),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial`, independent of the snapshot count and the method.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(master) ^ trial as u64)
}

/// Minimum-cost assignment of truth sources to estimated pairs, returning the
/// summed squared error in degrees² over both angles. Truth is compared in
/// the canonical range; unmatched truths cost the miss penalty in both
/// dimensions.
pub fn matched_squared_error(truth: &[(f64, f64)], estimate: &[(f64, f64)]) -> f64 {
    let k = truth.len();
    let miss = 2.0 * MISS_PENALTY_DEG * MISS_PENALTY_DEG;
    let cost = |i: usize, e: (f64, f64)| {
        let (a, b) = truth[i];
        let da = canonical_angle(a) - e.0;
        let db = canonical_angle(b) - e.1;
        da * da + db * db
    };
    // dp over subsets of matched truths, scanning estimates once
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for &e in estimate {
        let prev = dp.clone();
        for mask in 0..full {
            if !prev[mask].is_finite() {
                continue;
            }
            for i in 0..k {
                if mask & (1 << i) == 0 {
                    let next = mask | (1 << i);
                    let c = prev[mask] + cost(i, e);
                    if c < dp[next] {
                        dp[next] = c;
                    }
                }
            }
        }
    }
    (0..full)
        .map(|mask| dp[mask] + (k - mask.count_ones() as usize) as f64 * miss)
        .fold(f64::INFINITY, f64::min)
}

/// RMSE of a single estimate, averaged over sources and both angles.
pub fn match_and_rmse(truth: &SourceConfig, estimate: &DoaEstimate) -> f64 {
    let pairs: Vec<(f64, f64)> = truth.alpha_deg.iter().copied().zip(truth.beta_deg.iter().copied()).collect();
    (matched_squared_error(&pairs, &estimate.pairs) / (2 * pairs.len()) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    #[serde(rename = "L")]
    pub l: usize,
    pub trial: usize,
    pub rmse_deg: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub k_hat: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: Method,
    #[serde(rename = "L")]
    pub l: usize,
    pub rmse_deg: f64,
    pub mean_solve_seconds: f64,
    pub trials_used: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Default)]
pub struct BenchOutcome {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<BenchResult>,
    /// Messages of failed trials.
    pub errors: Vec<String>,
}

impl BenchOutcome {
    /// Records of one `(method, L)` cell in trial order.
    pub fn cell(&self, method: Method, l: usize) -> Vec<&TrialRecord> {
        self.trials.iter().filter(|r| r.method == method && r.l == l).collect()
    }
}

/// Oracle ball radius `‖r̂ − r‖₂` for one snapshot set.
pub fn oracle_eta(snapshots: &crate::array_model::Snapshots) -> Result<f64> {
    let ccm = sample_ccm(snapshots)?;
    let truth = SourceConfig { snr_db: None, ..snapshots.truth.clone() };
    let r = vec_col_major(&analytic_ccm(&snapshots.geometry, &truth)?);
    Ok((&ccm.r_hat - r).norm())
}

/// Runs every `(method, L, trial)` cell. `progress` is called after each
/// trial with the number done and the total.
pub fn run_bench(spec: &BenchSpec, mut progress: impl FnMut(usize, usize)) -> Result<BenchOutcome> {
    spec.validate()?;
    let total = spec.methods.len() * spec.snapshot_grid.len() * spec.trials;
    let mut out = BenchOutcome::default();
    for &method in &spec.methods {
        let mut config = EstimatorConfig::new(method);
        config.kappa = spec.kappa;
        config.retrieval = RetrievalOptions { tau: spec.tau };
        config.solver = spec.solver.clone();
        for &l in &spec.snapshot_grid {
            for trial in 0..spec.trials {
                let sources = spec.sources(trial);
                let record = run_trial(spec, &config, &sources, l);
                let rec = match record {
                    Ok((rmse, secs, k_hat)) => TrialRecord {
                        method,
                        l,
                        trial,
                        rmse_deg: Some(rmse),
                        solve_seconds: Some(secs),
                        k_hat: Some(k_hat),
                    },
                    Err(e) => {
                        out.errors.push(format!("{} L={l} trial={trial}: {e}", method.name()));
                        TrialRecord { method, l, trial, rmse_deg: None, solve_seconds: None, k_hat: None }
                    }
                };
                out.trials.push(rec);
                progress(out.trials.len(), total);
            }
            out.summary.push(summarize(method, l, &out.cell(method, l)));
        }
    }
    Ok(out)
}

fn run_trial(spec: &BenchSpec, config: &EstimatorConfig, sources: &SourceConfig, l: usize) -> Result<(f64, f64, usize)> {
    let snaps = simulate(&spec.geometry, sources, l)?;
    let mut config = config.clone();
    if config.method == Method::CcAnm {
        config.eta = Some(match spec.eta {
            Some(EtaChoice::Fixed(e)) => e,
            _ => oracle_eta(&snaps)?,
        });
    }
    let rep = estimate(&snaps, &config)?;
    let rmse = match_and_rmse(sources, &rep.estimate);
    if !rmse.is_finite() {
        return Err(Error::Numeric("non-finite RMSE".into()));
    }
    Ok((rmse, rep.solve_seconds, rep.estimate.k_hat))
}

fn summarize(method: Method, l: usize, cell: &[&TrialRecord]) -> BenchResult {
    let ok: Vec<&&TrialRecord> = cell.iter().filter(|r| r.rmse_deg.is_some()).collect();
    let n = ok.len();
    let (rmse_deg, mean_solve_seconds) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mse = ok.iter().map(|r| r.rmse_deg.unwrap().powi(2)).sum::<f64>() / n as f64;
        let secs = ok.iter().map(|r| r.solve_seconds.unwrap()).sum::<f64>() / n as f64;
        (mse.sqrt(), secs)
    };
    BenchResult { method, l, rmse_deg, mean_solve_seconds, trials_used: n, failures: cell.len() - n }
}

/// Fraction of bootstrap resamples (over trial indices, paired) in which the
/// RMSE of `a` is strictly below the RMSE of `b`. Both slices hold per-trial
/// squared errors for the same trials.
pub fn bootstrap_less(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let n = a.len();
    if n == 0 || resamples == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = 0usize;
    for _ in 0..resamples {
        let (mut sa, mut sb) = (0.0, 0.0);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            sa += a[i];
            sb += b[i];
        }
        if sa < sb {
            wins += 1;
        }
    }
    wins as f64 / resamples as f64
}

/// Output path of the aggregate table next to the per-trial CSV.
pub fn summary_path(trials_csv: &Path) -> std::path::PathBuf {
    let stem = trials_csv.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
    trials_csv.with_file_name(format!("{stem}.summary.csv"))
}

pub fn write_trials_csv<W: std::io::Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: std::io::Write>(w: W, rows: &[BenchResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_trials_csv<R: std::io::Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
