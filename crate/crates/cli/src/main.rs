use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use doa_anm::array_model::{simulate, ArrayGeometry, SourceConfig, Snapshots};
use doa_anm::bench::{run_bench, summary_path, write_summary_csv, write_trials_csv, BenchSpec};
use doa_anm::estimator::{estimate, EstimatorConfig, Method, DEFAULT_KAPPA};
use doa_anm::retrieval::{RetrievalOptions, DEFAULT_TAU};
use doa_anm::solver::SolverOptions;

const DEFAULT_SNAPSHOTS: usize = 100;

#[derive(Parser)]
#[command(name = "doa-anm", version, about = "Gridless 2-D DOA estimation for L-shaped arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate L-shaped array snapshots from a JSON config.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Number of snapshots; overrides the config.
        #[arg(short = 'L', long)]
        snapshots: Option<usize>,
    },
    /// Estimate directions from a snapshot file and print JSON.
    Estimate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        method: Method,
        /// Ball radius (cc_anm).
        #[arg(long, conflicts_with = "kappa")]
        eta: Option<f64>,
        /// Chi-square tail probability (mcc_anm).
        #[arg(long)]
        kappa: Option<f64>,
        /// Relative eigenvalue threshold for the rank rule.
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a Monte-Carlo benchmark and write per-trial and summary CSVs.
    Bench {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short, long)]
        quiet: bool,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    n_x: Option<usize>,
    n_y: Option<usize>,
    omega_x: Option<Vec<usize>>,
    omega_y: Option<Vec<usize>>,
    alpha_deg: Vec<f64>,
    beta_deg: Vec<f64>,
    #[serde(default)]
    powers: Vec<f64>,
    #[serde(default)]
    snr_db: Option<f64>,
    #[serde(default)]
    seed: u64,
    snapshots: Option<usize>,
}

/// Error that maps to exit code 3 rather than 2.
#[derive(Debug)]
struct NumericFailure;

impl std::fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("numeric failure")
    }
}

impl std::error::Error for NumericFailure {}

fn core(e: doa_anm::Error) -> anyhow::Error {
    if e.is_config() {
        anyhow::Error::new(e)
    } else {
        anyhow::Error::new(e).context(NumericFailure)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_simulate(config: &Path, output: &Path, snapshots: Option<usize>) -> Result<()> {
    let cfg: SimConfig = read_json(config)?;
    let geometry = ArrayGeometry::from_parts(cfg.n_x, cfg.n_y, cfg.omega_x, cfg.omega_y).map_err(core)?;
    let sources = SourceConfig {
        alpha_deg: cfg.alpha_deg,
        beta_deg: cfg.beta_deg,
        powers: cfg.powers,
        snr_db: cfg.snr_db,
        seed: cfg.seed,
    };
    let l = snapshots.or(cfg.snapshots).unwrap_or(DEFAULT_SNAPSHOTS);
    let snaps = simulate(&geometry, &sources, l).map_err(core)?;
    let file = File::create(output).with_context(|| format!("creating {}", output.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &snaps)?;
    w.flush()?;
    Ok(())
}

fn cmd_estimate(
    input: &Path,
    method: Method,
    eta: Option<f64>,
    kappa: Option<f64>,
    tau: f64,
    max_iter: Option<usize>,
    tol: Option<f64>,
) -> Result<()> {
    match method {
        Method::CcAnm if eta.is_none() => bail!("cc_anm requires --eta"),
        Method::CcAnm if kappa.is_some() => bail!("--kappa applies to mcc_anm only"),
        Method::MccAnm if eta.is_some() => bail!("--eta applies to cc_anm only"),
        _ => {}
    }
    if !(tau > 0.0 && tau < 1.0) {
        bail!("--tau must lie in (0, 1), got {tau}");
    }
    let snaps: Snapshots = read_json(input)?;
    snaps.validate().map_err(core)?;
    let mut solver = SolverOptions::default();
    if let Some(m) = max_iter {
        solver.max_iter = m;
    }
    if let Some(t) = tol {
        solver.tol = t;
    }
    let config = EstimatorConfig {
        method,
        eta,
        kappa: kappa.unwrap_or(DEFAULT_KAPPA),
        retrieval: RetrievalOptions { tau },
        solver,
    };
    let report = estimate(&snaps, &config).map_err(core)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_bench(config: &Path, output: &Path, quiet: bool) -> Result<()> {
    let spec: BenchSpec = read_json(config)?;
    let outcome = run_bench(&spec, |done, total| {
        if !quiet && (done % 50 == 0 || done == total) {
            eprintln!("{done}/{total} trials");
        }
    })
    .map_err(core)?;
    for e in &outcome.errors {
        eprintln!("trial failed: {e}");
    }
    let file = File::create(output).with_context(|| format!("creating {}", output.display()))?;
    write_trials_csv(BufWriter::new(file), &outcome.trials).map_err(core)?;
    let summary = summary_path(output);
    let file = File::create(&summary).with_context(|| format!("creating {}", summary.display()))?;
    write_summary_csv(BufWriter::new(file), &outcome.summary).map_err(core)?;
    if !quiet {
        for s in &outcome.summary {
            eprintln!(
                "{:<8} L={:<5} rmse={:.4}° mean_solve={:.4}s used={} failed={}",
                s.method.name(),
                s.l,
                s.rmse_deg,
                s.mean_solve_seconds,
                s.trials_used,
                s.failures
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, output, snapshots } => cmd_simulate(&config, &output, snapshots),
        Command::Estimate { input, method, eta, kappa, tau, max_iter, tol } => {
            cmd_estimate(&input, method, eta, kappa, tau, max_iter, tol)
        }
        Command::Bench { config, output, quiet } => cmd_bench(&config, &output, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<NumericFailure>() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
