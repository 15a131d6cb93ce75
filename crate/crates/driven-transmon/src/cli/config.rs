//! Run configuration: one TOML file, repeatable dotted-key overrides, and
//! resolution of every default into an explicit value.
//!
//! The file schema mirrors the physics pipeline:
//!
//! ```toml
//! [circuit]            # either explicit parameters …
//! e_c = 0.16553        # E_C/h (GHz)
//! e_j = 23.3           # E_J/h (GHz)
//! g = 0.17547          # g/2π (GHz)
//! omega_a = 7.73947    # bare resonator ω_a/2π (GHz)
//! # n_g = 0.0          # optional charge offset
//! # n_c = 40           # optional truncations
//! # n_transmon = 45
//! # n_fock = 10
//!
//! [circuit.targets]    # … or measured frequencies, which trigger a fit
//! omega_q_bar = 5.353
//! omega_r_bar = 7.761
//! alpha_q = 0.173
//! chi_qr = 0.005
//!
//! [pump]
//! omega_p = 8.1        # pump ω_p/2π (GHz)
//! n_bar = [0.0, 10.0]  # photon grid: explicit list …
//! [pump.n_bar_range]   # … or an inclusive range
//! start = 0.0
//! stop = 300.0
//! step = 2.0
//!
//! [bath]
//! kappa_per_ns = 0.01818181   # κ (1/ns), default 1/55
//! n_th = 0.0
//! shape = "flat"              # or "ohmic"
//!
//! [floquet]
//! steps = 1024         # midpoint steps per period
//! samples = 256        # mode samples per period (must divide steps)
//! k_max = 100          # Fourier orders kept for the dissipation operator
//!
//! [dispersive]
//! kappa_r_per_ns = 0.01818181 # readout linewidth κ_r (1/ns)
//!
//! [calibration]        # for `calibrate`
//! points_csv = "points.csv"
//! fit_delta0 = true
//!
//! [stark]              # for `stark-line`: grid of readout photon numbers
//! n_r_bar = [0.0, 1.0]
//! [stark.n_r_bar_range]
//! start = 0.0
//! stop = 300.0
//! step = 2.0
//! ```
//!
//! Every absent value resolves to a documented default, and the resolved
//! values — never the raw file — are what the run manifest records.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{BathSpec, SolverSettings, SpectralShape};
use crate::frame::MIN_PUMP_DETUNING_GHZ;
use crate::operators::CircuitParams;
use crate::spectrum::{confined_level_count, fit_circuit_params_report, FitReport, FitTargets};

/// Default readout linewidth κ_r = 1/(55 ns).
pub const DEFAULT_KAPPA_R_PER_NS: f64 = 1.0 / 55.0;

/// Default photon-number grid when `[pump]` gives neither a list nor a
/// range: 0..300 in steps of 2 (balances runtime and burst visibility).
pub const DEFAULT_GRID: RangeSpec = RangeSpec {
    start: 0.0,
    stop: 300.0,
    step: 2.0,
};

// --------------------------------------------------------------------------
// Raw schema: exactly what the TOML file may contain.
// --------------------------------------------------------------------------

/// The run configuration as written, before defaults are resolved.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Circuit parameters or fit targets (required).
    pub circuit: RawCircuit,
    /// Pump drive for sweeps.
    pub pump: Option<RawPump>,
    /// Bath the resonator decays into.
    pub bath: Option<RawBath>,
    /// Floquet solver knobs.
    pub floquet: Option<RawFloquet>,
    /// Dispersive-readout parameters.
    pub dispersive: Option<RawDispersive>,
    /// Calibration-fit inputs.
    pub calibration: Option<RawCalibration>,
    /// Stark-line grid.
    pub stark: Option<RawStark>,
}

/// `[circuit]`: explicit parameters, or `[circuit.targets]` to fit them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCircuit {
    /// Charging energy E_C/h (GHz).
    pub e_c: Option<f64>,
    /// Josephson energy E_J/h (GHz).
    pub e_j: Option<f64>,
    /// Coupling g/2π (GHz).
    pub g: Option<f64>,
    /// Bare resonator frequency ω_a/2π (GHz).
    pub omega_a: Option<f64>,
    /// Charge offset (units of 2e).
    pub n_g: Option<f64>,
    /// Charge-basis cutoff.
    pub n_c: Option<usize>,
    /// Retained transmon eigenstates.
    pub n_transmon: Option<usize>,
    /// Retained resonator Fock states.
    pub n_fock: Option<usize>,
    /// Measured dressed frequencies; present ⇒ the circuit is fitted.
    pub targets: Option<RawTargets>,
}

/// `[circuit.targets]`: measured dressed frequencies, all in GHz.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTargets {
    /// Dressed qubit frequency.
    pub omega_q_bar: f64,
    /// Dressed resonator frequency.
    pub omega_r_bar: f64,
    /// Qubit anharmonicity (positive).
    pub alpha_q: f64,
    /// Cross-Kerr shift (nonnegative).
    pub chi_qr: f64,
}

/// `[pump]`: pump frequency and photon-number grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPump {
    /// Pump frequency ω_p/2π (GHz).
    pub omega_p: f64,
    /// Explicit photon-number grid.
    pub n_bar: Option<Vec<f64>>,
    /// Inclusive arithmetic range, alternative to the explicit list.
    pub n_bar_range: Option<RangeSpec>,
}

/// Inclusive arithmetic grid `start, start+step, … ≤ stop`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    /// First grid value.
    pub start: f64,
    /// Inclusive upper bound.
    pub stop: f64,
    /// Positive increment.
    pub step: f64,
}

/// `[bath]`: partial bath spec; absent fields take the defaults.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBath {
    /// Loss rate κ (1/ns); default 1/55.
    pub kappa_per_ns: Option<f64>,
    /// Thermal occupation; default 0.
    pub n_th: Option<f64>,
    /// Spectral shape; default `"flat"`.
    pub shape: Option<SpectralShape>,
}

/// `[floquet]`: partial solver settings; absent fields take the defaults.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFloquet {
    /// Midpoint steps per period; default 1024.
    pub steps: Option<usize>,
    /// Mode samples per period; default 256.
    pub samples: Option<usize>,
    /// Fourier orders kept; default 100.
    pub k_max: Option<usize>,
}

/// `[dispersive]`: readout-channel parameters.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDispersive {
    /// Readout linewidth κ_r (1/ns); default 1/55.
    pub kappa_r_per_ns: Option<f64>,
}

/// `[calibration]`: where the measured detuning points live.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCalibration {
    /// CSV of points with columns
    /// `omega_p_GHz, P_p_mW, re_delta_tot_MHz, im_delta_tot_MHz`.
    pub points_csv: String,
    /// Fit a power-independent offset δ₀ per frequency (default true).
    pub fit_delta0: Option<bool>,
}

/// `[stark]`: readout photon-number grid for the Stark line.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStark {
    /// Explicit grid.
    pub n_r_bar: Option<Vec<f64>>,
    /// Inclusive arithmetic range, alternative to the explicit list.
    pub n_r_bar_range: Option<RangeSpec>,
}

// --------------------------------------------------------------------------
// Loading and overrides.
// --------------------------------------------------------------------------

/// Read and parse a config file, then apply `key=value` overrides with
/// dotted paths (e.g. `pump.omega_p=8.0`, `bath.shape="ohmic"`).
///
/// Parse and schema errors carry the file position where the TOML library
/// can name one; override errors name the offending key.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    if overrides.is_empty() {
        return toml::from_str::<RawConfig>(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())));
    }
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    table
        .try_into::<RawConfig>()
        .map_err(|e| Error::Config(format!("{} (with overrides): {e}", path.display())))
}

/// Set one dotted key in a parsed TOML table, creating intermediate tables
/// as needed. The value is parsed as a TOML literal; anything that does not
/// parse as one (a bare word) is taken as a string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override '{spec}' has an empty key")));
    }
    let value = value.trim();
    let parsed = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("literal just inserted"),
        Err(_) => toml::Value::String(value.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::Config(format!("override '{key}': '{part}' is not a table"))
            })?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

// --------------------------------------------------------------------------
// Resolution: raw → explicit values.
// --------------------------------------------------------------------------

/// Fully resolved pump section.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedPump {
    /// Pump frequency ω_p/2π (GHz).
    pub omega_p: f64,
    /// Explicit, validated photon-number grid.
    pub n_bar: Vec<f64>,
}

/// Fully resolved dispersive section.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedDispersive {
    /// Readout linewidth κ_r (1/ns).
    pub kappa_r_per_ns: f64,
}

/// Fully resolved calibration section.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedCalibration {
    /// Path of the measured points CSV, as given.
    pub points_csv: String,
    /// Whether δ₀ is fitted per frequency.
    pub fit_delta0: bool,
}

/// Everything a run resolved, with no silent defaults: this struct is what
/// the JSON manifest records. Sections a subcommand does not use are `None`.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    /// Circuit parameters actually used (fitted when targets were given).
    pub circuit: CircuitParams,
    /// The fit targets, echoed when the circuit came from a fit.
    pub circuit_targets: Option<FitTargets>,
    /// Number of transmon levels confined by the cosine well.
    pub confined_levels: usize,
    /// Pump and photon grid (sweep/threshold runs).
    pub pump: Option<ResolvedPump>,
    /// Bath with every field explicit.
    pub bath: BathSpec,
    /// Solver settings with every field explicit.
    pub floquet: SolverSettings,
    /// Readout-channel parameters.
    pub dispersive: ResolvedDispersive,
    /// Calibration inputs (calibrate runs).
    pub calibration: Option<ResolvedCalibration>,
    /// Stark-line grid (stark-line runs).
    pub stark_n_r_bar: Option<Vec<f64>>,
}

/// The resolved circuit together with the fit report when one ran.
#[derive(Debug, Clone)]
pub struct ResolvedCircuit {
    /// Parameters with truncation overrides applied.
    pub params: CircuitParams,
    /// Present when the circuit was fitted from targets.
    pub fit: Option<FitReport>,
    /// Targets echoed back when fitted.
    pub targets: Option<FitTargets>,
}

impl RawConfig {
    /// Resolve the circuit: explicit parameters, or a fit when targets are
    /// given. Mixing both is an error — a fitted circuit must not silently
    /// shadow hand-set values.
    pub fn resolve_circuit(&self) -> Result<ResolvedCircuit> {
        let c = &self.circuit;
        let explicit = [c.e_c, c.e_j, c.g, c.omega_a];
        let given = explicit.iter().filter(|v| v.is_some()).count();
        let (mut params, fit, targets) = match (&c.targets, given) {
            (Some(t), 0) => {
                let targets = FitTargets {
                    omega_q_bar: t.omega_q_bar,
                    omega_r_bar: t.omega_r_bar,
                    alpha_q: t.alpha_q,
                    chi_qr: t.chi_qr,
                };
                let report = fit_circuit_params_report(&targets)?;
                (report.params.clone(), Some(report), Some(targets))
            }
            (Some(_), _) => {
                return Err(Error::Config(
                    "[circuit] mixes explicit parameters with [circuit.targets]; \
                     give one or the other"
                        .into(),
                ));
            }
            (None, 4) => {
                let params = CircuitParams::new(
                    c.e_c.unwrap(),
                    c.e_j.unwrap(),
                    c.g.unwrap(),
                    c.omega_a.unwrap(),
                );
                (params, None, None)
            }
            (None, _) => {
                let missing: Vec<&str> = [("e_c", c.e_c), ("e_j", c.e_j), ("g", c.g), ("omega_a", c.omega_a)]
                    .iter()
                    .filter(|(_, v)| v.is_none())
                    .map(|(k, _)| *k)
                    .collect();
                return Err(Error::Config(format!(
                    "[circuit] needs either all of e_c, e_j, g, omega_a or a \
                     [circuit.targets] table; missing: {}",
                    missing.join(", ")
                )));
            }
        };
        if let Some(n_g) = c.n_g {
            params.n_g = n_g;
        }
        if let Some(n_c) = c.n_c {
            params.n_c = n_c;
        }
        if let Some(n_t) = c.n_transmon {
            params.n_transmon = n_t;
        }
        if let Some(n_f) = c.n_fock {
            params.n_fock = n_f;
        }
        params.validate()?;
        Ok(ResolvedCircuit {
            params,
            fit,
            targets,
        })
    }

    /// Resolve the pump section against the circuit's resonator frequency.
    /// Errors when the section is absent (callers that need a pump say so).
    pub fn resolve_pump(&self, omega_a: f64) -> Result<ResolvedPump> {
        let p = self
            .pump
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [pump] section".into()))?;
        if !(p.omega_p > 0.0) {
            return Err(Error::Config(format!(
                "[pump] omega_p must be positive, got {}",
                p.omega_p
            )));
        }
        if (p.omega_p - omega_a).abs() < MIN_PUMP_DETUNING_GHZ {
            return Err(Error::Config(format!(
                "[pump] omega_p = {} GHz is within {} GHz of the bare resonator \
                 frequency {} GHz; the displaced frame diverges on resonance",
                p.omega_p, MIN_PUMP_DETUNING_GHZ, omega_a
            )));
        }
        let n_bar = resolve_grid("pump", "n_bar", &p.n_bar, &p.n_bar_range)?;
        Ok(ResolvedPump {
            omega_p: p.omega_p,
            n_bar,
        })
    }

    /// Resolve the bath with defaults filled in.
    pub fn resolve_bath(&self) -> Result<BathSpec> {
        let raw = self.bath.unwrap_or_default();
        let defaults = BathSpec::default();
        let bath = BathSpec {
            kappa_per_ns: raw.kappa_per_ns.unwrap_or(defaults.kappa_per_ns),
            n_th: raw.n_th.unwrap_or(defaults.n_th),
            shape: raw.shape.unwrap_or(defaults.shape),
        };
        if !(bath.kappa_per_ns > 0.0) {
            return Err(Error::Config(format!(
                "[bath] kappa_per_ns must be positive, got {}",
                bath.kappa_per_ns
            )));
        }
        if !(bath.n_th >= 0.0) {
            return Err(Error::Config(format!(
                "[bath] n_th must be nonnegative, got {}",
                bath.n_th
            )));
        }
        Ok(bath)
    }

    /// Resolve solver settings with defaults filled in.
    pub fn resolve_floquet(&self) -> Result<SolverSettings> {
        let raw = self.floquet.unwrap_or_default();
        let defaults = SolverSettings::default();
        let s = SolverSettings {
            steps: raw.steps.unwrap_or(defaults.steps),
            samples: raw.samples.unwrap_or(defaults.samples),
            k_max: raw.k_max.unwrap_or(defaults.k_max),
        };
        if s.samples == 0 || s.steps == 0 || s.steps % s.samples != 0 {
            return Err(Error::Config(format!(
                "[floquet] samples ({}) must be positive and divide steps ({})",
                s.samples, s.steps
            )));
        }
        if s.samples < 2 * s.k_max + 2 {
            return Err(Error::Config(format!(
                "[floquet] samples ({}) must be at least 2·k_max + 2 = {} to \
                 resolve the requested Fourier orders",
                s.samples,
                2 * s.k_max + 2
            )));
        }
        Ok(s)
    }

    /// Resolve the dispersive section with defaults filled in.
    pub fn resolve_dispersive(&self) -> Result<ResolvedDispersive> {
        let raw = self.dispersive.unwrap_or_default();
        let kappa = raw.kappa_r_per_ns.unwrap_or(DEFAULT_KAPPA_R_PER_NS);
        if !(kappa > 0.0) {
            return Err(Error::Config(format!(
                "[dispersive] kappa_r_per_ns must be positive, got {kappa}"
            )));
        }
        Ok(ResolvedDispersive {
            kappa_r_per_ns: kappa,
        })
    }

    /// Resolve the calibration section; errors when absent.
    pub fn resolve_calibration(&self) -> Result<ResolvedCalibration> {
        let raw = self
            .calibration
            .as_ref()
            .ok_or_else(|| Error::Config("calibrate needs a [calibration] section".into()))?;
        Ok(ResolvedCalibration {
            points_csv: raw.points_csv.clone(),
            fit_delta0: raw.fit_delta0.unwrap_or(true),
        })
    }

    /// Resolve the Stark-line grid (defaults to 0..300 step 2).
    pub fn resolve_stark_grid(&self) -> Result<Vec<f64>> {
        let raw = self.stark.clone().unwrap_or_default();
        resolve_grid("stark", "n_r_bar", &raw.n_r_bar, &raw.n_r_bar_range)
    }

    /// Resolve the parts every command shares, plus the confined-level count
    /// derived from the circuit.
    pub fn resolve_common(&self) -> Result<(ResolvedCircuit, BathSpec, SolverSettings, ResolvedDispersive, usize)>
    {
        let circuit = self.resolve_circuit()?;
        let bath = self.resolve_bath()?;
        let floquet = self.resolve_floquet()?;
        let dispersive = self.resolve_dispersive()?;
        let confined = confined_level_count(&circuit.params)?;
        Ok((circuit, bath, floquet, dispersive, confined))
    }
}

/// Expand a list-or-range grid and validate it: nonempty, nonnegative,
/// strictly increasing.
fn resolve_grid(
    section: &str,
    field: &str,
    list: &Option<Vec<f64>>,
    range: &Option<RangeSpec>,
) -> Result<Vec<f64>> {
    let grid = match (list, range) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(format!(
                "[{section}] gives both {field} and {field}_range; give one"
            )));
        }
        (Some(list), None) => list.clone(),
        (None, Some(r)) => expand_range(section, field, r)?,
        (None, None) => expand_range(section, field, &DEFAULT_GRID)?,
    };
    if grid.is_empty() {
        return Err(Error::Config(format!("[{section}] {field} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Config(format!(
            "[{section}] {field} grid must be finite and nonnegative"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "[{section}] {field} grid must be strictly increasing"
        )));
    }
    Ok(grid)
}

/// Expand an inclusive arithmetic range; a small relative slack keeps the
/// endpoint when `(stop − start)/step` is an integer up to roundoff.
fn expand_range(section: &str, field: &str, r: &RangeSpec) -> Result<Vec<f64>> {
    if !(r.step > 0.0) || !r.start.is_finite() || !r.stop.is_finite() {
        return Err(Error::Config(format!(
            "[{section}] {field}_range needs finite bounds and a positive step"
        )));
    }
    if r.stop < r.start {
        return Err(Error::Config(format!(
            "[{section}] {field}_range has stop {} below start {}",
            r.stop, r.start
        )));
    }
    let count = ((r.stop - r.start) / r.step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| r.start + i as f64 * r.step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RawConfig {
        toml::from_str(text).unwrap()
    }

    const MINIMAL: &str = r#"
        [circuit]
        e_c = 0.166
        e_j = 23.3
        g = 0.175
        omega_a = 7.739
    "#;

    #[test]
    fn explicit_circuit_parameters_resolve_without_a_fit() {
        let cfg = parse(MINIMAL);
        let rc = cfg.resolve_circuit().unwrap();
        assert_eq!(rc.params.e_c, 0.166);
        assert_eq!(rc.params.n_transmon, CircuitParams::DEFAULT_N_TRANSMON);
        assert!(rc.fit.is_none());
    }

    #[test]
    fn truncation_overrides_apply_on_top_of_the_fit_defaults() {
        let cfg = parse(
            r#"
            [circuit]
            n_transmon = 30
            n_fock = 8
            [circuit.targets]
            omega_q_bar = 5.353
            omega_r_bar = 7.761
            alpha_q = 0.173
            chi_qr = 0.005
            "#,
        );
        let rc = cfg.resolve_circuit().unwrap();
        assert_eq!(rc.params.n_transmon, 30);
        assert_eq!(rc.params.n_fock, 8);
        assert!(rc.fit.is_some());
        assert!(rc.targets.is_some());
        // fitted values land near the device parameters
        assert!((rc.params.e_c - 0.166).abs() < 0.01);
        assert!((rc.params.e_j - 23.3).abs() < 0.5);
    }

    #[test]
    fn mixing_parameters_and_targets_is_rejected() {
        let cfg = parse(
            r#"
            [circuit]
            e_c = 0.166
            [circuit.targets]
            omega_q_bar = 5.353
            omega_r_bar = 7.761
            alpha_q = 0.173
            chi_qr = 0.005
            "#,
        );
        let err = cfg.resolve_circuit().unwrap_err().to_string();
        assert!(err.contains("one or the other"), "{err}");
    }

    #[test]
    fn missing_circuit_parameters_are_named() {
        let cfg = parse("[circuit]\ne_c = 0.166\ng = 0.175\n");
        let err = cfg.resolve_circuit().unwrap_err().to_string();
        assert!(err.contains("missing: e_j, omega_a"), "{err}");
    }

    #[test]
    fn unknown_keys_are_parse_errors_with_positions() {
        let err = toml::from_str::<RawConfig>("[circuit]\ne_c = 0.1\nbogus = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn pump_grid_expands_ranges_inclusively() {
        let mut cfg = parse(MINIMAL);
        cfg.pump = Some(RawPump {
            omega_p: 8.1,
            n_bar: None,
            n_bar_range: Some(RangeSpec {
                start: 0.0,
                stop: 10.0,
                step: 2.5,
            }),
        });
        let p = cfg.resolve_pump(7.739).unwrap();
        assert_eq!(p.n_bar, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn default_pump_grid_runs_0_to_300_step_2() {
        let mut cfg = parse(MINIMAL);
        cfg.pump = Some(RawPump {
            omega_p: 8.1,
            n_bar: None,
            n_bar_range: None,
        });
        let p = cfg.resolve_pump(7.739).unwrap();
        assert_eq!(p.n_bar.len(), 151);
        assert_eq!(p.n_bar[0], 0.0);
        assert_eq!(*p.n_bar.last().unwrap(), 300.0);
    }

    #[test]
    fn non_increasing_or_negative_grids_are_rejected() {
        let mut cfg = parse(MINIMAL);
        cfg.pump = Some(RawPump {
            omega_p: 8.1,
            n_bar: Some(vec![0.0, 5.0, 5.0]),
            n_bar_range: None,
        });
        assert!(cfg.resolve_pump(7.739).is_err());
        cfg.pump.as_mut().unwrap().n_bar = Some(vec![-1.0, 5.0]);
        assert!(cfg.resolve_pump(7.739).is_err());
        cfg.pump.as_mut().unwrap().n_bar = Some(vec![]);
        assert!(cfg.resolve_pump(7.739).is_err());
    }

    #[test]
    fn resonant_pump_is_a_config_error() {
        let mut cfg = parse(MINIMAL);
        cfg.pump = Some(RawPump {
            omega_p: 7.739,
            n_bar: Some(vec![0.0]),
            n_bar_range: None,
        });
        let err = cfg.resolve_pump(7.739).unwrap_err().to_string();
        assert!(err.contains("resonance"), "{err}");
    }

    #[test]
    fn bath_and_floquet_defaults_fill_in() {
        let cfg = parse(MINIMAL);
        let bath = cfg.resolve_bath().unwrap();
        assert_eq!(bath, BathSpec::default());
        let fl = cfg.resolve_floquet().unwrap();
        assert_eq!(fl, SolverSettings::default());
        let disp = cfg.resolve_dispersive().unwrap();
        assert_eq!(disp.kappa_r_per_ns, DEFAULT_KAPPA_R_PER_NS);
    }

    #[test]
    fn floquet_layout_constraints_are_checked_at_resolution() {
        let mut cfg = parse(MINIMAL);
        cfg.floquet = Some(RawFloquet {
            steps: Some(1000),
            samples: Some(256),
            k_max: None,
        });
        assert!(cfg.resolve_floquet().is_err(), "samples must divide steps");
        cfg.floquet = Some(RawFloquet {
            steps: Some(1024),
            samples: Some(128),
            k_max: Some(100),
        });
        assert!(cfg.resolve_floquet().is_err(), "k_max needs 2k+2 samples");
    }

    #[test]
    fn overrides_patch_values_and_create_missing_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = load_config(
            &path,
            &[
                "circuit.e_c=0.2".to_string(),
                "pump.omega_p=8.0".to_string(),
                "pump.n_bar=[0.0, 1.0]".to_string(),
                "bath.shape=\"ohmic\"".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.circuit.e_c, Some(0.2));
        let pump = cfg.pump.as_ref().unwrap();
        assert_eq!(pump.omega_p, 8.0);
        assert_eq!(pump.n_bar, Some(vec![0.0, 1.0]));
        assert_eq!(cfg.resolve_bath().unwrap().shape, SpectralShape::Ohmic);
    }

    #[test]
    fn bad_overrides_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let err = load_config(&path, &["nonsense".to_string()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("key=value"), "{err}");
        let err = load_config(&path, &["circuit.e_c.x=1".to_string()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("not a table"), "{err}");
        let err = load_config(&path, &["circuit.bogus=1".to_string()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "{err}");
    }
}
