//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytics::{self, ThresholdReport};
use crate::error::Result;
use crate::meanfield::{
    self, instability_threshold_exact, locate_threshold, solve_self_consistent, DensityProfile,
    ThresholdLocation,
};
use crate::model::{derive_params, UnitSystem};

use super::analysis::{hysteresis_report, scaling_report};
use super::config::Config;
use super::experiment::{aggregate, run_sweep, AnalysisKind, SweepResult};
use super::persist;

#[derive(Debug, Parser)]
#[command(
    name = "selforg",
    version,
    about = "Self-organization of pumped atoms in a cavity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble of trajectories at one parameter point.
    Simulate(Common),
    /// Trajectories over the Cartesian product of the sweep axes.
    Sweep(Common),
    /// Self-consistent density and bifurcation point of the 1D model.
    Meanfield(Common),
    /// Closed-form threshold estimates.
    Thresholds(Common),
    /// Recompute aggregates and reports from a persisted sweep.
    Analyze {
        /// Directory written by `simulate` or `sweep`.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat key = value file in γ-units.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set eta=40`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut config = Config::load(self.config.as_deref(), &self.set)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

/// Whether every run finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Incomplete { failed: usize },
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(c) => {
            let config = c.load()?;
            let mut spec = config.experiment()?;
            spec.axes.clear();
            finish_sweep(&c.out, &run_sweep(&spec)?)
        }
        Command::Sweep(c) => {
            let config = c.load()?;
            finish_sweep(&c.out, &run_sweep(&config.experiment()?)?)
        }
        Command::Meanfield(c) => meanfield_command(&c.load()?, &c.out),
        Command::Thresholds(c) => thresholds_command(&c.load()?, &c.out),
        Command::Analyze { input, common } => {
            let config = common.load()?;
            let mut result = persist::load(&input)?;
            result.aggregates = aggregate(&result.spec, &result.records);
            if config.analysis != AnalysisKind::None {
                result.spec.analysis = config.analysis;
            }
            result.spec.detector_threshold = config.detector_threshold;
            write_analysis(&common.out, &result)?;
            summarize(&result);
            Ok(outcome(&result))
        }
    }
}

fn outcome(result: &SweepResult) -> Outcome {
    match result.failures() {
        0 => Outcome::Complete,
        failed => Outcome::Incomplete { failed },
    }
}

fn finish_sweep(out: &Path, result: &SweepResult) -> Result<Outcome> {
    persist::persist(out, result)?;
    write_analysis(out, result)?;
    summarize(result);
    Ok(outcome(result))
}

fn write_analysis(out: &Path, result: &SweepResult) -> Result<()> {
    persist::write_report(
        &out.join("aggregates.json"),
        "aggregates",
        &result.aggregates,
    )?;
    match result.spec.analysis {
        AnalysisKind::None => {}
        AnalysisKind::Hysteresis => {
            let report = hysteresis_report(result)?;
            for b in &report.branches {
                println!(
                    "N = {:>5}  eta_up_obs = {:>8}  eta_down_obs = {:>8}  (predicted up {:.1}, down {:.1}, eta* {:.1})",
                    b.n_atoms,
                    fmt_opt(b.eta_up_obs),
                    fmt_opt(b.eta_down_obs),
                    b.eta_up_pred,
                    b.eta_down_pred,
                    b.eta_star
                );
            }
            persist::write_report(&out.join("hysteresis.json"), "hysteresis", &report)?;
        }
        AnalysisKind::Scaling => {
            let report = scaling_report(result)?;
            println!(
                "photon number slope {:.3} ± {:.3}, prefactor {:.4}; localization slope {:.3} ± {:.3}",
                report.photon_fit.slope,
                report.photon_fit.slope_se,
                report.photon_prefactor,
                report.localization_fit.slope,
                report.localization_fit.slope_se
            );
            persist::write_report(&out.join("scaling.json"), "scaling", &report)?;
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_owned(), |v| format!("{v:.2}"))
}

fn summarize(result: &SweepResult) {
    println!(
        "{:>5} {:>14} {:>6} {:>10} {:>12} {:>10} {:>10}",
        "point", "init", "runs", "eta", "photons", "defects", "loc_z"
    );
    for a in &result.aggregates {
        println!(
            "{:>5} {:>14} {:>6} {:>10.3} {:>12.3} {:>10.4} {:>10.5}",
            a.point,
            format!("{:?}", a.init_mode),
            a.completed,
            a.params.eta,
            a.mean.photon_number,
            a.mean.defect_ratio_2d,
            a.mean.loc_z
        );
    }
    let failed = result.failures();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", result.records.len());
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    eta: f64,
    iterations: usize,
    converged: bool,
    theta: f64,
    bunching: f64,
    odd_fraction: f64,
}

#[derive(Debug, Serialize)]
struct MeanFieldReport {
    kt: f64,
    grid: usize,
    threshold: ThresholdLocation,
    eta_c_exact: f64,
    solves: Vec<SolveSummary>,
}

fn meanfield_command(config: &Config, out: &Path) -> Result<Outcome> {
    let p = config.physical();
    p.validate()?;
    let d = derive_params(&p)?;
    let kt = p.kt;
    let eta_c_exact = instability_threshold_exact(&p, &d, kt);
    let guess = if eta_c_exact.is_finite() {
        eta_c_exact
    } else {
        1.0
    };
    let threshold = locate_threshold(&p, kt, config.grid, (1e-3 * guess, 1e3 * guess), 1e-10)?;
    println!(
        "eta_c = {:.6} (grid {}), eta* = {:.6}, ratio {:.4}",
        threshold.eta_c, threshold.grid, threshold.eta_star, threshold.ratio_to_eta_star
    );
    let etas = if config.sweep_eta.is_empty() {
        vec![p.eta]
    } else {
        config.sweep_eta.clone()
    };
    std::fs::create_dir_all(out)?;
    let init = DensityProfile::cosine(config.grid, config.seed_amplitude, config.seed_phase);
    let mut solves = Vec::new();
    for (i, &eta) in etas.iter().enumerate() {
        let q = crate::model::PhysicalParams { eta, ..p.clone() };
        let dq = derive_params(&q)?;
        let res = solve_self_consistent(&q, &dq, kt, &init, config.max_iter, config.tol);
        let (theta, bunching) = res.profile.moments();
        println!(
            "eta = {eta:>10.4}  theta = {theta:>9.6}  B = {bunching:.6}  iterations = {}{}",
            res.iterations,
            if res.converged {
                ""
            } else {
                " (not converged)"
            }
        );
        write_columns(
            &out.join(format!("profile_{i:03}.csv")),
            ["kz", "rho"],
            res.profile.grid().zip(res.profile.values.iter().copied()),
        )?;
        write_columns(
            &out.join(format!("theta_history_{i:03}.csv")),
            ["iteration", "theta"],
            res.theta_history
                .iter()
                .enumerate()
                .map(|(k, &t)| (k as f64, t)),
        )?;
        solves.push(SolveSummary {
            eta,
            iterations: res.iterations,
            converged: res.converged,
            theta,
            bunching,
            odd_fraction: res.profile.odd_fraction(),
        });
    }
    let report = MeanFieldReport {
        kt,
        grid: config.grid,
        threshold,
        eta_c_exact,
        solves,
    };
    persist::write_report(&out.join("meanfield.json"), "meanfield", &report)?;
    Ok(Outcome::Complete)
}

fn write_columns(
    path: &Path,
    header: [&str; 2],
    rows: impl Iterator<Item = (f64, f64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ThresholdsOutput {
    report: ThresholdReport,
    eta_c_exact: f64,
    pump_power_threshold_w: Option<f64>,
}

fn thresholds_command(config: &Config, out: &Path) -> Result<Outcome> {
    let p = config.physical();
    p.validate()?;
    let d = derive_params(&p)?;
    let report = analytics::threshold_report(&p, &d, p.kt)?;
    let eta_c_exact = instability_threshold_exact(&p, &d, p.kt);
    let pump_power_threshold_w = config
        .density
        .map(|n| meanfield::pump_power_threshold(&p, &d, p.kt, n, &UnitSystem::default()))
        .transpose()?;
    println!("eta*      = {:.4}", report.eta_star);
    println!("eta_c     = {eta_c_exact:.4} (exact instability)");
    println!("eta_up    = {:.4}", report.eta_up);
    println!("eta_down  = {:.4}", report.eta_down);
    println!("N_thr     = {:.4}", report.n_thr);
    println!("M_max     = {:.4}", report.m_max);
    println!(
        "delta_E   = {:.4} (delta_N = {:.3})",
        report.delta_e, report.delta_n
    );
    println!("regime    = {:?}", report.regime);
    let output = ThresholdsOutput {
        report,
        eta_c_exact,
        pump_power_threshold_w,
    };
    persist::write_report(&out.join("thresholds.json"), "thresholds", &output)?;
    Ok(Outcome::Complete)
}
