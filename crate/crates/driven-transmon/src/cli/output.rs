//! Deterministic artifacts: RFC-4180-style CSV tables (header row, `.`
//! decimal separator, UTF-8, `\n` terminators) and the JSON run manifest.
//!
//! Reruns with the same config produce byte-identical files, except the
//! manifest's `timestamp` and `runtime_seconds` fields.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::dispersive::{CalibrationFit, CalibrationPoint};
use crate::error::{Error, Result};
use crate::operators::CircuitParams;
use crate::spectrum::{DressedParameters, LabeledSpectrum};
use crate::C64;

use super::config::ResolvedConfig;
use super::{SweepFlag, SweepRow};

/// Format one float for CSV: shortest round-trip decimal in the humane
/// range, exponent notation outside it. Locale-independent (`.` decimal).
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn open_csv(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn finish_csv(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .map_err(|e| Error::Config(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Config(format!("writing {}: {e}", path.display()))
}

// --------------------------------------------------------------------------
// Sweep table.
// --------------------------------------------------------------------------

/// Write the escape-sweep table. Columns, in order:
/// `n_bar, A_p_GHz, p_unconfined, mean_level, pop_0..pop_{n_transmon−1},
/// quasienergy_gap_min_GHz, cavity_mean_photons_displaced, flag`.
/// Failed points keep their `n_bar`, `A_p_GHz`, and `flag`; every other
/// cell is empty.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], n_transmon: usize) -> Result<()> {
    let mut w = open_csv(path)?;
    let mut header: Vec<String> = vec![
        "n_bar".into(),
        "A_p_GHz".into(),
        "p_unconfined".into(),
        "mean_level".into(),
    ];
    header.extend((0..n_transmon).map(|k| format!("pop_{k}")));
    header.push("quasienergy_gap_min_GHz".into());
    header.push("cavity_mean_photons_displaced".into());
    header.push("flag".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;

    for row in rows {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        rec.push(fmt_f64(row.n_bar));
        rec.push(fmt_f64(row.a_p_ghz));
        match (&row.flag, row.data()) {
            (_, Some(d)) => {
                rec.push(fmt_f64(d.p_unconfined));
                rec.push(fmt_f64(d.mean_level));
                debug_assert_eq!(d.transmon_populations.len(), n_transmon);
                rec.extend(d.transmon_populations.iter().map(|&p| fmt_f64(p)));
                rec.push(fmt_f64(d.quasienergy_gap_min_ghz));
                rec.push(fmt_f64(d.cavity_mean_photons_displaced));
            }
            (_, None) => {
                rec.extend(std::iter::repeat(String::new()).take(n_transmon + 4));
            }
        }
        rec.push(row.flag.as_csv());
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish_csv(w, path)
}

/// One row as read back from a sweep CSV: the threshold detector only needs
/// the grid value, the unconfined weight, and whether the point failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCsvRow {
    /// Photon-number grid value.
    pub n_bar: f64,
    /// Unconfined population; `None` when the row is a recorded failure.
    pub p_unconfined: Option<f64>,
}

/// Read `n_bar`, `p_unconfined`, and `flag` back from a sweep CSV (columns
/// located by name, so extra columns are fine).
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepCsvRow>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = r
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Config(format!("{}: missing column '{name}'", path.display()))
        })
    };
    let c_n = col("n_bar")?;
    let c_p = col("p_unconfined")?;
    let c_flag = col("flag")?;
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record
            .map_err(|e| Error::Config(format!("{} row {}: {e}", path.display(), i + 2)))?;
        let cell = |c: usize| record.get(c).unwrap_or("");
        let n_bar: f64 = cell(c_n).parse().map_err(|e| {
            Error::Config(format!("{} row {}: n_bar: {e}", path.display(), i + 2))
        })?;
        let failed = cell(c_flag).starts_with("failed");
        let p_unconfined = if failed {
            None
        } else {
            Some(cell(c_p).parse().map_err(|e| {
                Error::Config(format!("{} row {}: p_unconfined: {e}", path.display(), i + 2))
            })?)
        };
        rows.push(SweepCsvRow { n_bar, p_unconfined });
    }
    Ok(rows)
}

// --------------------------------------------------------------------------
// Stark line, spectrum, calibration tables.
// --------------------------------------------------------------------------

/// Write the AC-Stark line: columns `n_r_bar, omega_r_GHz`.
pub fn write_stark_csv(path: &Path, table: &[(f64, f64)]) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record(["n_r_bar", "omega_r_GHz"])
        .map_err(|e| csv_err(path, e))?;
    for &(n, omega) in table {
        w.write_record([fmt_f64(n), fmt_f64(omega)])
            .map_err(|e| csv_err(path, e))?;
    }
    finish_csv(w, path)
}

/// Write the labeled joint spectrum: columns
/// `index, n_q, n_r, energy_GHz, excitation_GHz, overlap_quality`
/// (`excitation_GHz` is relative to the ground level).
pub fn write_spectrum_csv(path: &Path, spectrum: &LabeledSpectrum) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record([
        "index",
        "n_q",
        "n_r",
        "energy_GHz",
        "excitation_GHz",
        "overlap_quality",
    ])
    .map_err(|e| csv_err(path, e))?;
    let e0 = spectrum.energies[0];
    for (i, &e) in spectrum.energies.iter().enumerate() {
        let (n_q, n_r) = spectrum.labels[i];
        w.write_record([
            i.to_string(),
            n_q.to_string(),
            n_r.to_string(),
            fmt_f64(e),
            fmt_f64(e - e0),
            fmt_f64(spectrum.overlap_quality[i]),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish_csv(w, path)
}

/// Read measured calibration points. Columns located by name:
/// `omega_p_GHz, P_p_mW, re_delta_tot_MHz, im_delta_tot_MHz`.
pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationPoint>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = r
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Config(format!("{}: missing column '{name}'", path.display()))
        })
    };
    let c_w = col("omega_p_GHz")?;
    let c_p = col("P_p_mW")?;
    let c_re = col("re_delta_tot_MHz")?;
    let c_im = col("im_delta_tot_MHz")?;
    let mut points = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record
            .map_err(|e| Error::Config(format!("{} row {}: {e}", path.display(), i + 2)))?;
        let num = |c: usize, name: &str| -> Result<f64> {
            record.get(c).unwrap_or("").parse().map_err(|e| {
                Error::Config(format!("{} row {}: {name}: {e}", path.display(), i + 2))
            })
        };
        points.push(CalibrationPoint {
            omega_p: num(c_w, "omega_p_GHz")?,
            p_p_mw: num(c_p, "P_p_mW")?,
            delta_tot: C64::new(
                num(c_re, "re_delta_tot_MHz")? * 1e-3,
                num(c_im, "im_delta_tot_MHz")? * 1e-3,
            ),
        });
    }
    Ok(points)
}

/// Write per-frequency calibration fits: columns
/// `omega_p_GHz, c_photons_per_mW, re_delta0_MHz, im_delta0_MHz,
/// rms_residual_MHz`.
pub fn write_calibration_csv(path: &Path, fits: &[(f64, CalibrationFit)]) -> Result<()> {
    let mut w = open_csv(path)?;
    w.write_record([
        "omega_p_GHz",
        "c_photons_per_mW",
        "re_delta0_MHz",
        "im_delta0_MHz",
        "rms_residual_MHz",
    ])
    .map_err(|e| csv_err(path, e))?;
    for (omega_p, fit) in fits {
        w.write_record([
            fmt_f64(*omega_p),
            fmt_f64(fit.c),
            fmt_f64(fit.delta_0.re * 1e3),
            fmt_f64(fit.delta_0.im * 1e3),
            fmt_f64(fit.residual * 1e3),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish_csv(w, path)
}

// --------------------------------------------------------------------------
// Run manifest.
// --------------------------------------------------------------------------

/// Fitted circuit parameters with their convergence report and the dressed
/// frequencies they predict.
#[derive(Debug, Clone, Serialize)]
pub struct FittedParams {
    /// The fitted parameters (default truncations unless overridden).
    pub params: CircuitParams,
    /// Gauss–Newton iterations used.
    pub iterations: usize,
    /// Largest relative residual over the matched observables.
    pub max_rel_residual: f64,
    /// Dressed parameters of the fitted circuit — including the predicted
    /// resonator Kerr `alpha_r`, which is never a fit input.
    pub dressed: DressedParameters,
}

/// Escape-threshold detection result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdReport {
    /// Interpolated photon number where `p_unconfined` first crosses 0.5,
    /// or `null` when it never does.
    pub n_bar_crit: Option<f64>,
    /// Width of the jump: interpolated distance in `n̄` between the 0.1 and
    /// 0.9 crossings around the threshold, when both exist.
    pub jump_width: Option<f64>,
}

/// The run manifest: everything needed to reproduce and audit one command.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    /// Manifest layout version.
    pub schema_version: u32,
    /// Package version that produced the run.
    pub code_version: String,
    /// Subcommand that ran.
    pub command: String,
    /// Every parameter the run resolved, defaults made explicit.
    pub resolved_config: ResolvedConfig,
    /// Present when the circuit was fitted from measured targets.
    pub fitted_params: Option<FittedParams>,
    /// Present for sweep/threshold runs.
    pub threshold: Option<ThresholdReport>,
    /// Artifact name → file name (relative to the output directory).
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock runtime in seconds (non-deterministic).
    pub runtime_seconds: f64,
    /// Seconds since the Unix epoch at completion (non-deterministic).
    pub timestamp: f64,
}

/// Serialize the manifest as pretty JSON (stable field order) and write it.
pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Numeric(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

impl SweepFlag {
    /// CSV cell for the flag column: empty for a clean solve.
    pub fn as_csv(&self) -> String {
        match self {
            SweepFlag::Clean => String::new(),
            SweepFlag::MultipleSteadyStates => "multiple_steady_states".to_string(),
            SweepFlag::Failed(msg) => format!("failed: {msg}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::PointData;

    #[test]
    fn float_formatting_is_plain_in_range_and_exponential_outside() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(7.761), "7.761");
        assert_eq!(fmt_f64(-0.565), "-0.565");
        assert_eq!(fmt_f64(1.5e-7), "1.5e-7");
        assert_eq!(fmt_f64(3.0e17), "3e17");
        // shortest round-trip: parsing the output recovers the input bit-exactly
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, 6.626e-34, 2.0_f64.powi(53)] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn sweep_csv_roundtrips_clean_failed_and_flagged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let data = PointData {
            quasienergy_gap_min_ghz: 0.0123,
            transmon_populations: vec![0.9, 0.1, 0.0],
            mean_level: 0.1,
            p_unconfined: 0.0,
            cavity_mean_photons_displaced: 0.002,
        };
        let rows = vec![
            SweepRow {
                n_bar: 0.0,
                a_p_ghz: 0.0,
                flag: SweepFlag::Clean,
                point: Some(data.clone()),
            },
            SweepRow {
                n_bar: 2.0,
                a_p_ghz: 0.2,
                flag: SweepFlag::Failed("solver, hiccup".to_string()),
                point: None,
            },
            SweepRow {
                n_bar: 4.0,
                a_p_ghz: 0.4,
                flag: SweepFlag::MultipleSteadyStates,
                point: Some(PointData {
                    p_unconfined: 0.75,
                    ..data.clone()
                }),
            },
        ];
        write_sweep_csv(&path, &rows, 3).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n_bar,A_p_GHz,p_unconfined,mean_level,pop_0,pop_1,pop_2,\
             quasienergy_gap_min_GHz,cavity_mean_photons_displaced,flag"
        );
        // the failure message contains a comma → RFC-4180 quoting
        assert!(text.contains("\"failed: solver, hiccup\""), "{text}");

        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].p_unconfined, Some(0.0));
        assert_eq!(back[1].p_unconfined, None);
        assert_eq!(back[2], SweepCsvRow { n_bar: 4.0, p_unconfined: Some(0.75) });
    }

    #[test]
    fn calibration_points_parse_with_mhz_to_ghz_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        std::fs::write(
            &path,
            "omega_p_GHz,P_p_mW,re_delta_tot_MHz,im_delta_tot_MHz\n\
             7.761,0.5,-1.25,-0.4\n\
             7.761,1.0,-2.5,-0.8\n",
        )
        .unwrap();
        let pts = read_calibration_csv(&path).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].omega_p, 7.761);
        assert_eq!(pts[0].p_p_mw, 0.5);
        assert!((pts[0].delta_tot.re - (-1.25e-3)).abs() < 1e-15);
        assert!((pts[1].delta_tot.im - (-0.8e-3)).abs() < 1e-15);
    }

    #[test]
    fn missing_calibration_columns_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        std::fs::write(&path, "omega_p_GHz,P_p_mW\n7.761,0.5\n").unwrap();
        let err = read_calibration_csv(&path).unwrap_err().to_string();
        assert!(err.contains("re_delta_tot_MHz"), "{err}");
    }
}
