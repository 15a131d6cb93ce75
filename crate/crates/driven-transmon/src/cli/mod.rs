//! Command-line front end: orchestrates end-to-end runs — parameter
//! fitting, escape sweeps, threshold detection, readout calibration — from
//! one TOML config, emitting deterministic CSV tables and a JSON run
//! manifest.
//!
//! Subcommands: `fit-params`, `sweep`, `threshold`, `calibrate`,
//! `stark-line`, `spectrum`. Exit codes: 0 success, 1 usage or config
//! error, 2 numerical failure. Diagnostics go to stderr.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::dispersive::{stark_shifted_frequency, DispersiveParams};
use crate::error::{Error, Result};
use crate::floquet::{solve_steady_state, BathSpec, SolverSettings};
use crate::frame::{build_displaced_model, drive_from_photons};
use crate::operators::CircuitParams;
use crate::spectrum::{dressed_parameters, labeled_joint_spectrum};
use crate::units;

use config::{RawConfig, ResolvedCircuit, ResolvedConfig};
use output::{FittedParams, Manifest, ThresholdReport};

// --------------------------------------------------------------------------
// Argument grammar.
// --------------------------------------------------------------------------

/// Strongly pumped transmon–resonator simulator.
#[derive(Debug, Parser)]
#[command(
    name = "driven-transmon",
    version,
    about = "Floquet–Markov steady states of a strongly pumped transmon–resonator circuit",
    propagate_version = true
)]
pub struct Cli {
    /// Which pipeline to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory for artifacts (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for independent sweep points; never affects output
    /// values, only wall-clock time.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub workers: usize,
    /// Override one config key, e.g. `--override pump.omega_p=8.0`
    /// (repeatable; values are TOML literals).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit circuit parameters to measured dressed frequencies.
    FitParams(CommonArgs),
    /// Sweep the pump photon number and solve each driven steady state.
    Sweep(CommonArgs),
    /// Detect the escape threshold from a sweep (fresh or from a CSV).
    Threshold(ThresholdArgs),
    /// Fit the photons-per-mW constant from measured complex detunings.
    Calibrate(CommonArgs),
    /// Tabulate the AC-Stark-shifted resonator line.
    StarkLine(CommonArgs),
    /// Tabulate the labeled joint spectrum.
    Spectrum(CommonArgs),
}

/// `threshold` arguments: optionally reuse an existing sweep table.
#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Shared flags.
    #[command(flatten)]
    pub common: CommonArgs,
    /// Detect from an existing sweep CSV instead of running the sweep.
    #[arg(long, value_name = "CSV")]
    pub from: Option<PathBuf>,
}

// --------------------------------------------------------------------------
// Sweep types and operations.
// --------------------------------------------------------------------------

/// Everything one escape sweep needs, fully resolved.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    /// Circuit parameters (fitted or explicit).
    pub params: CircuitParams,
    /// Pump frequency ω_p/2π (GHz).
    pub omega_p: f64,
    /// Validated photon-number grid, strictly increasing.
    pub n_bar_grid: Vec<f64>,
    /// Bath specification.
    pub bath: BathSpec,
    /// Solver settings.
    pub settings: SolverSettings,
    /// Transmon levels confined by the cosine well.
    pub confined_levels: usize,
}

/// Per-point results that exist only when the solver succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    /// Smallest quasienergy gap in the folded zone (GHz).
    pub quasienergy_gap_min_ghz: f64,
    /// Steady transmon-level populations (sum 1 within 1e-9).
    pub transmon_populations: Vec<f64>,
    /// Mean transmon level index.
    pub mean_level: f64,
    /// Population above the confinement cut.
    pub p_unconfined: f64,
    /// Mean displaced-frame cavity photon number.
    pub cavity_mean_photons_displaced: f64,
}

/// Solve status of one sweep point. Failures are first-class rows: a long
/// sweep survives isolated solver hiccups and records them in place.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepFlag {
    /// Unique steady state, clean solve.
    Clean,
    /// Solve succeeded but the steady state was not unique; the recorded
    /// data is the ground-connected component.
    MultipleSteadyStates,
    /// The solver failed; the message says how.
    Failed(String),
}

/// One row of the escape sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Photon-number grid value.
    pub n_bar: f64,
    /// Pump amplitude A_p/2π (GHz) realizing `n_bar`; strictly increasing
    /// along the grid.
    pub a_p_ghz: f64,
    /// Solve status.
    pub flag: SweepFlag,
    /// Solver outputs, absent when the point failed.
    pub point: Option<PointData>,
}

impl SweepRow {
    /// The solver outputs, when the point succeeded.
    pub fn data(&self) -> Option<&PointData> {
        self.point.as_ref()
    }
}

/// Run the escape sweep: one fully independent, deterministic steady-state
/// solve per grid point, fanned out over `workers` threads and merged back
/// in grid order. Identical setups produce identical rows for any worker
/// count.
pub fn run_escape_sweep(setup: &SweepSetup, workers: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {workers}-thread pool: {e}")))?;
    Ok(pool.install(|| {
        setup
            .n_bar_grid
            .par_iter()
            .map(|&n_bar| solve_sweep_point(setup, n_bar))
            .collect()
    }))
}

/// Solve one sweep point; never panics on solver failure — the error
/// becomes the row's flag.
fn solve_sweep_point(setup: &SweepSetup, n_bar: f64) -> SweepRow {
    // A_p = 2√n̄·|ω_p − ω_a|; recomputed here so even a failed drive
    // constructor leaves the row with its amplitude.
    let a_p_ghz = 2.0 * n_bar.sqrt() * (setup.omega_p - setup.params.omega_a).abs();
    let attempt = (|| {
        let drive = drive_from_photons(n_bar, setup.omega_p, setup.params.omega_a)?;
        let model = build_displaced_model(&setup.params, &drive)?;
        solve_steady_state(
            &model,
            &setup.bath,
            setup.params.omega_a,
            &setup.settings,
            setup.confined_levels,
        )
    })();
    match attempt {
        Ok(solve) => {
            let flag = if solve.steady.multiple_steady_states {
                SweepFlag::MultipleSteadyStates
            } else {
                SweepFlag::Clean
            };
            SweepRow {
                n_bar,
                a_p_ghz,
                flag,
                point: Some(PointData {
                    quasienergy_gap_min_ghz: units::ordinary(solve.basis.quasienergy_gap_min()),
                    transmon_populations: solve.steady.rho_transmon_diag.clone(),
                    mean_level: solve.steady.mean_level,
                    p_unconfined: solve.steady.p_unconfined,
                    cavity_mean_photons_displaced: solve.steady.cavity_mean_photons,
                }),
            }
        }
        Err(e) => SweepRow {
            n_bar,
            a_p_ghz,
            flag: SweepFlag::Failed(e.to_string()),
            point: None,
        },
    }
}

/// A `(n̄, p_unconfined)` pair for threshold detection; failed sweep rows
/// carry `None` and are skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    /// Photon-number grid value.
    pub n_bar: f64,
    /// Unconfined population, absent for failed rows.
    pub p_unconfined: Option<f64>,
}

/// Detect the escape threshold: the smallest grid `n̄` whose unconfined
/// population exceeds 0.5, linearly interpolated against the previous
/// valid point; `None` when the table never crosses. Failed rows are
/// skipped.
pub fn detect_threshold(points: &[ThresholdPoint]) -> Option<f64> {
    let valid: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.p_unconfined.map(|v| (p.n_bar, v)))
        .collect();
    for (i, &(n, p)) in valid.iter().enumerate() {
        if p > 0.5 {
            if i == 0 {
                return Some(n);
            }
            let (n0, p0) = valid[i - 1];
            return Some(n0 + (0.5 - p0) * (n - n0) / (p - p0));
        }
    }
    None
}

/// Width of the escape jump: interpolated distance in `n̄` between the
/// last 0.1-upcrossing before the threshold and the first 0.9-upcrossing
/// at or after it. `None` when either crossing is missing (including when
/// the table never crosses 0.5 at all).
pub fn jump_width(points: &[ThresholdPoint]) -> Option<f64> {
    let valid: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.p_unconfined.map(|v| (p.n_bar, v)))
        .collect();
    let i_thr = valid.iter().position(|&(_, p)| p > 0.5)?;
    let cross = |j: usize, level: f64| -> f64 {
        let (n0, p0) = valid[j];
        let (n1, p1) = valid[j + 1];
        n0 + (level - p0) * (n1 - n0) / (p1 - p0)
    };
    // last index before the threshold still at or below 0.1
    let j_low = (0..i_thr).rev().find(|&j| valid[j].1 <= 0.1)?;
    let n_low = cross(j_low, 0.1);
    // first index at or after the threshold reaching 0.9
    let j_high = (i_thr..valid.len()).find(|&j| valid[j].1 >= 0.9)?;
    let n_high = if j_high == 0 {
        valid[0].0
    } else {
        cross(j_high - 1, 0.9)
    };
    Some(n_high - n_low)
}

/// Tabulate the AC-Stark-shifted resonator line over a photon grid:
/// rows `(n̄_r, ω_r(n̄_r))`, affine with slope `−2α_r` per photon.
pub fn stark_line_table(p: &DispersiveParams, n_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    n_grid
        .iter()
        .map(|&n| stark_shifted_frequency(n, p).map(|omega| (n, omega)))
        .collect()
}

// --------------------------------------------------------------------------
// Entry point and dispatch.
// --------------------------------------------------------------------------

/// Parse arguments and run. Returns the process exit code: 0 success,
/// 1 usage or config error, 2 numerical failure.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap prints help to stdout and errors to stderr
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Usage/config problems exit 1; numerical failures exit 2.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::InvalidParams(_)
        | Error::ResonantPump { .. } => 1,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FitParams(args) => cmd_fit_params(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Threshold(args) => cmd_threshold(&args),
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::StarkLine(args) => cmd_stark_line(&args),
        Command::Spectrum(args) => cmd_spectrum(&args),
    }
}

/// Shared command prelude: load config, create the output directory.
struct Run {
    raw: RawConfig,
    out_dir: PathBuf,
    started: Instant,
}

impl Run {
    fn begin(args: &CommonArgs) -> Result<Run> {
        let raw = config::load_config(&args.config, &args.overrides)?;
        std::fs::create_dir_all(&args.out).map_err(|e| {
            Error::Config(format!(
                "cannot create output directory {}: {e}",
                args.out.display()
            ))
        })?;
        Ok(Run {
            raw,
            out_dir: args.out.clone(),
            started: Instant::now(),
        })
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Write the manifest, stamping runtime and wall clock last.
    fn finish(
        &self,
        command: &str,
        resolved: ResolvedConfig,
        fitted: Option<FittedParams>,
        threshold: Option<ThresholdReport>,
        outputs: BTreeMap<String, String>,
    ) -> Result<()> {
        let manifest = Manifest {
            schema_version: 1,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            resolved_config: resolved,
            fitted_params: fitted,
            threshold,
            outputs,
            runtime_seconds: self.started.elapsed().as_secs_f64(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
        };
        output::write_manifest(&self.artifact("manifest.json"), &manifest)
    }
}

/// Fitted-params manifest block for a resolved circuit, when it was fitted.
fn fitted_block(circuit: &ResolvedCircuit) -> Result<Option<FittedParams>> {
    match &circuit.fit {
        None => Ok(None),
        Some(report) => {
            let dressed = dressed_parameters(&circuit.params)?;
            Ok(Some(FittedParams {
                params: report.params.clone(),
                iterations: report.iterations,
                max_rel_residual: report.max_rel_residual,
                dressed,
            }))
        }
    }
}

fn cmd_fit_params(args: &CommonArgs) -> Result<()> {
    let run = Run::begin(args)?;
    let (circuit, bath, floquet, dispersive, confined) = run.raw.resolve_common()?;
    if circuit.fit.is_none() {
        return Err(Error::Config(
            "fit-params needs a [circuit.targets] table with the measured \
             frequencies; the [circuit] section already gives explicit parameters"
                .into(),
        ));
    }
    let fitted = fitted_block(&circuit)?;
    let resolved = ResolvedConfig {
        circuit: circuit.params.clone(),
        circuit_targets: circuit.targets,
        confined_levels: confined,
        pump: None,
        bath,
        floquet,
        dispersive,
        calibration: None,
        stark_n_r_bar: None,
    };
    run.finish("fit-params", resolved, fitted, None, BTreeMap::new())
}

fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    let run = Run::begin(args)?;
    let (circuit, bath, floquet, dispersive, confined) = run.raw.resolve_common()?;
    let pump = run.raw.resolve_pump(circuit.params.omega_a)?;
    let setup = SweepSetup {
        params: circuit.params.clone(),
        omega_p: pump.omega_p,
        n_bar_grid: pump.n_bar.clone(),
        bath,
        settings: floquet,
        confined_levels: confined,
    };
    let rows = run_escape_sweep(&setup, args.workers)?;
    output::write_sweep_csv(&run.artifact("sweep.csv"), &rows, circuit.params.n_transmon)?;

    let points: Vec<ThresholdPoint> = rows
        .iter()
        .map(|r| ThresholdPoint {
            n_bar: r.n_bar,
            p_unconfined: r.data().map(|d| d.p_unconfined),
        })
        .collect();
    let threshold = ThresholdReport {
        n_bar_crit: detect_threshold(&points),
        jump_width: jump_width(&points),
    };

    let fitted = fitted_block(&circuit)?;
    let resolved = ResolvedConfig {
        circuit: circuit.params.clone(),
        circuit_targets: circuit.targets,
        confined_levels: confined,
        pump: Some(pump),
        bath,
        floquet,
        dispersive,
        calibration: None,
        stark_n_r_bar: None,
    };
    let mut outputs = BTreeMap::new();
    outputs.insert("sweep_csv".to_string(), "sweep.csv".to_string());
    run.finish("sweep", resolved, fitted, Some(threshold), outputs)
}

fn cmd_threshold(args: &ThresholdArgs) -> Result<()> {
    let run = Run::begin(&args.common)?;
    let (circuit, bath, floquet, dispersive, confined) = run.raw.resolve_common()?;
    let fitted = fitted_block(&circuit)?;

    let (points, pump, outputs) = match &args.from {
        Some(csv_path) => {
            let rows = output::read_sweep_csv(csv_path)?;
            if rows.is_empty() {
                return Err(Error::Config(format!(
                    "{}: sweep table has no rows",
                    csv_path.display()
                )));
            }
            let points = rows
                .iter()
                .map(|r| ThresholdPoint {
                    n_bar: r.n_bar,
                    p_unconfined: r.p_unconfined,
                })
                .collect::<Vec<_>>();
            (points, None, BTreeMap::new())
        }
        None => {
            let pump = run.raw.resolve_pump(circuit.params.omega_a)?;
            let setup = SweepSetup {
                params: circuit.params.clone(),
                omega_p: pump.omega_p,
                n_bar_grid: pump.n_bar.clone(),
                bath,
                settings: floquet,
                confined_levels: confined,
            };
            let rows = run_escape_sweep(&setup, args.common.workers)?;
            output::write_sweep_csv(
                &run.artifact("sweep.csv"),
                &rows,
                circuit.params.n_transmon,
            )?;
            let points = rows
                .iter()
                .map(|r| ThresholdPoint {
                    n_bar: r.n_bar,
                    p_unconfined: r.data().map(|d| d.p_unconfined),
                })
                .collect::<Vec<_>>();
            let mut outputs = BTreeMap::new();
            outputs.insert("sweep_csv".to_string(), "sweep.csv".to_string());
            (points, Some(pump), outputs)
        }
    };

    let threshold = ThresholdReport {
        n_bar_crit: detect_threshold(&points),
        jump_width: jump_width(&points),
    };
    match threshold.n_bar_crit {
        Some(n) => println!("threshold n_bar_crit = {}", output::fmt_f64(n)),
        None => println!("threshold not crossed"),
    }

    let resolved = ResolvedConfig {
        circuit: circuit.params.clone(),
        circuit_targets: circuit.targets,
        confined_levels: confined,
        pump,
        bath,
        floquet,
        dispersive,
        calibration: None,
        stark_n_r_bar: None,
    };
    run.finish("threshold", resolved, fitted, Some(threshold), outputs)
}

fn cmd_calibrate(args: &CommonArgs) -> Result<()> {
    let run = Run::begin(args)?;
    let (circuit, bath, floquet, dispersive, confined) = run.raw.resolve_common()?;
    let calibration = run.raw.resolve_calibration()?;
    let points = output::read_calibration_csv(Path::new(&calibration.points_csv))?;
    if points.is_empty() {
        return Err(Error::Config(format!(
            "{}: no calibration points",
            calibration.points_csv
        )));
    }
    let dressed = dressed_parameters(&circuit.params)?;
    let dp = DispersiveParams::from_dressed(&dressed, dispersive.kappa_r_per_ns);
    let fits = crate::dispersive::fit_calibration_groups(&points, &dp, calibration.fit_delta0)?;
    output::write_calibration_csv(&run.artifact("calibration_fit.csv"), &fits)?;

    let fitted = fitted_block(&circuit)?;
    let resolved = ResolvedConfig {
        circuit: circuit.params.clone(),
        circuit_targets: circuit.targets,
        confined_levels: confined,
        pump: None,
        bath,
        floquet,
        dispersive,
        calibration: Some(calibration),
        stark_n_r_bar: None,
    };
    let mut outputs = BTreeMap::new();
    outputs.insert(
        "calibration_fit_csv".to_string(),
        "calibration_fit.csv".to_string(),
    );
    run.finish("calibrate", resolved, fitted, None, outputs)
}

fn cmd_stark_line(args: &CommonArgs) -> Result<()> {
    let run = Run::begin(args)?;
    let (circuit, bath, floquet, dispersive, confined) = run.raw.resolve_common()?;
    let grid = run.raw.resolve_stark_grid()?;
    let dressed = dressed_parameters(&circuit.params)?;
    let dp = DispersiveParams::from_dressed(&dressed, dispersive.kappa_r_per_ns);
    let table = stark_line_table(&dp, &grid)?;
    output::write_stark_csv(&run.artifact("stark_line.csv"), &table)?;

    let fitted = fitted_block(&circuit)?;
    let resolved = ResolvedConfig {
        circuit: circuit.params.clone(),
        circuit_targets: circuit.targets,
        confined_levels: confined,
        pump: None,
        bath,
        floquet,
        dispersive,
        calibration: None,
        stark_n_r_bar: Some(grid),
    };
    let mut outputs = BTreeMap::new();
    outputs.insert("stark_line_csv".to_string(), "stark_line.csv".to_string());
    run.finish("stark-line", resolved, fitted, None, outputs)
}

fn cmd_spectrum(args: &CommonArgs) -> Result<()> {
    let run = Run::begin(args)?;
    let (circuit, bath, floquet, dispersive, confined) = run.raw.resolve_common()?;
    let spectrum = labeled_joint_spectrum(&circuit.params)?;
    output::write_spectrum_csv(&run.artifact("spectrum.csv"), &spectrum)?;

    let fitted = fitted_block(&circuit)?;
    let resolved = ResolvedConfig {
        circuit: circuit.params.clone(),
        circuit_targets: circuit.targets,
        confined_levels: confined,
        pump: None,
        bath,
        floquet,
        dispersive,
        calibration: None,
        stark_n_r_bar: None,
    };
    let mut outputs = BTreeMap::new();
    outputs.insert("spectrum_csv".to_string(), "spectrum.csv".to_string());
    run.finish("spectrum", resolved, fitted, None, outputs)
}
