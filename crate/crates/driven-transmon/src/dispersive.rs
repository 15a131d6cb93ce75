//! Dispersive two-mode model and measurement-power calibration.
//!
//! The low-energy physics of the circuit reduces to a qubit–resonator
//! pair with cross-Kerr χ_qr and resonator self-Kerr α_r. This module
//! covers the quantities that calibrate and interpret a pumped
//! measurement: the AC-Stark-shifted resonance, the qubit-state-dependent
//! pull, steady-state coherent amplitudes, the complex measurement-induced
//! detuning δ_m = δ_q − iγ_φ, the photons-per-mW constant C fitted from
//! Ramsey data, and the power→photon conversion n̄_r.
//!
//! Public frequencies are ordinary GHz; the complex response arithmetic
//! runs in angular units internally, converting at the boundary.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::DressedParameters;
use crate::units::{angular, ordinary};
use crate::C64;

/// Dressed two-mode parameters entering the dispersive model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveParams {
    /// Dressed qubit frequency (GHz).
    pub omega_q_bar: f64,
    /// Dressed resonator frequency (GHz).
    pub omega_r_bar: f64,
    /// Qubit anharmonicity (GHz).
    pub alpha_q: f64,
    /// Resonator self-Kerr (GHz).
    pub alpha_r: f64,
    /// Qubit–resonator cross-Kerr (GHz).
    pub chi_qr: f64,
    /// Resonator linewidth κ_r (1/ns).
    pub kappa_r_per_ns: f64,
}

impl DispersiveParams {
    /// The measured device: ω̄_q = 5.353 GHz, ω̄_r = 7.761 GHz,
    /// α_q = 173 MHz, α_r = 43 kHz, χ_qr = 5 MHz, κ_r = 1/(55 ns).
    pub fn reference() -> Self {
        DispersiveParams {
            omega_q_bar: 5.353,
            omega_r_bar: 7.761,
            alpha_q: 0.173,
            alpha_r: 43e-6,
            chi_qr: 5e-3,
            kappa_r_per_ns: 1.0 / 55.0,
        }
    }

    /// Adopt exact-diagonalization dressed parameters, keeping κ_r a
    /// measured input (the Hamiltonian of the closed circuit knows no
    /// linewidth).
    pub fn from_dressed(d: &DressedParameters, kappa_r_per_ns: f64) -> Self {
        DispersiveParams {
            omega_q_bar: d.omega_q_bar,
            omega_r_bar: d.omega_r_bar,
            alpha_q: d.alpha_q,
            alpha_r: d.alpha_r,
            chi_qr: d.chi_qr,
            kappa_r_per_ns,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega_q_bar > 0.0 && self.omega_r_bar > 0.0) {
            return Err(Error::InvalidParams(format!(
                "mode frequencies must be positive (ω̄_q = {}, ω̄_r = {})",
                self.omega_q_bar, self.omega_r_bar
            )));
        }
        if !(self.kappa_r_per_ns > 0.0) {
            return Err(Error::InvalidParams(format!(
                "resonator linewidth must be positive, got {} 1/ns",
                self.kappa_r_per_ns
            )));
        }
        Ok(())
    }
}

/// AC-Stark-shifted resonance: ω_r(n̄_r) = ω̄_r − 2α_r·n̄_r (GHz).
pub fn stark_shifted_frequency(n_r_bar: f64, p: &DispersiveParams) -> Result<f64> {
    p.validate()?;
    if !(n_r_bar >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "photon number must be nonnegative, got {n_r_bar}"
        )));
    }
    Ok(p.omega_r_bar - 2.0 * p.alpha_r * n_r_bar)
}

/// Qubit-state-dependent pull: ω_r(n_q) = ω̄_r − n_q·χ_qr (GHz), for the
/// resolved transmon levels n_q ≤ 6.
pub fn qubit_pulled_frequency(n_q: usize, p: &DispersiveParams) -> Result<f64> {
    p.validate()?;
    if n_q > 6 {
        return Err(Error::InvalidParams(format!(
            "the pulled-resonance ladder is resolved up to n_q = 6, got {n_q}"
        )));
    }
    Ok(p.omega_r_bar - n_q as f64 * p.chi_qr)
}

/// Steady-state coherent amplitudes of the readout resonator under a pump
/// at ω_p, for the qubit in its ground and first excited state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentResponse {
    /// α_g = −i(A_pr/2)/(iΔ + κ_r/2), Δ = ω̄_r − ω_p (angular).
    pub alpha_g: C64,
    /// α_e: the same with Δ → Δ − χ_qr.
    pub alpha_e: C64,
}

/// Coherent resonator amplitudes for a pump of amplitude `a_pr` (GHz) at
/// `omega_p` (GHz).
pub fn coherent_response(
    omega_p: f64,
    a_pr: f64,
    p: &DispersiveParams,
) -> Result<CoherentResponse> {
    p.validate()?;
    let delta = angular(p.omega_r_bar - omega_p);
    let chi = angular(p.chi_qr);
    let a = angular(a_pr);
    let half_kappa = p.kappa_r_per_ns / 2.0;
    let amp = |d: f64| -> C64 {
        C64::new(0.0, -a / 2.0) / C64::new(half_kappa, d)
    };
    Ok(CoherentResponse {
        alpha_g: amp(delta),
        alpha_e: amp(delta - chi),
    })
}

/// Measurement-induced complex detuning of the qubit (GHz):
///
/// δ_m = −(C·κ_r²·χ_qr·P_p/4) / [(i(Δ−χ_qr)+κ_r/2)(−iΔ+κ_r/2)],
///
/// with Δ = ω̄_r − ω_p and the pump power entering through
/// A_pr² = κ_r²·C·P_p. Re δ_m is the qubit Stark shift; −Im δ_m ≥ 0 is
/// the measurement dephasing rate.
pub fn measurement_backaction(
    omega_p: f64,
    p_p_mw: f64,
    c_photons_per_mw: f64,
    p: &DispersiveParams,
) -> Result<C64> {
    p.validate()?;
    if !(c_photons_per_mw > 0.0) {
        return Err(Error::InvalidParams(format!(
            "calibration constant must be positive, got {c_photons_per_mw}"
        )));
    }
    if !(p_p_mw >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "pump power must be nonnegative, got {p_p_mw} mW"
        )));
    }
    Ok(backaction_per_photon(omega_p, p) * (c_photons_per_mw * p_p_mw))
}

/// δ_m per unit C·P_p (angular response converted to GHz) — the complex
/// slope the calibration fit estimates.
fn backaction_per_photon(omega_p: f64, p: &DispersiveParams) -> C64 {
    let delta = angular(p.omega_r_bar - omega_p);
    let chi = angular(p.chi_qr);
    let kappa = p.kappa_r_per_ns;
    let f1 = C64::new(kappa / 2.0, delta - chi);
    let f2 = C64::new(kappa / 2.0, -delta);
    let numerator = -kappa * kappa * chi / 4.0;
    C64::new(ordinary(numerator), 0.0) / (f1 * f2)
}

/// Average readout photon number from pump power:
/// n̄_r = C·P_p·(κ_r²/4)/((ω_r−ω_p)² + κ_r²/4), with `omega_r_current` the
/// (possibly Stark-shifted) resonance actually seen at this power.
pub fn photons_from_power(
    omega_p: f64,
    p_p_mw: f64,
    c_photons_per_mw: f64,
    omega_r_current: f64,
    kappa_r_per_ns: f64,
) -> Result<f64> {
    if !(kappa_r_per_ns > 0.0) {
        return Err(Error::InvalidParams(format!(
            "resonator linewidth must be positive, got {kappa_r_per_ns} 1/ns"
        )));
    }
    if !(p_p_mw >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "pump power must be nonnegative, got {p_p_mw} mW"
        )));
    }
    let delta = angular(omega_r_current - omega_p);
    let hk2 = kappa_r_per_ns * kappa_r_per_ns / 4.0;
    Ok(c_photons_per_mw * p_p_mw * hk2 / (delta * delta + hk2))
}

/// One Ramsey-calibration measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    /// Pump frequency (GHz).
    pub omega_p: f64,
    /// Pump power (mW).
    pub p_p_mw: f64,
    /// Measured complex detuning δ_tot = δ_q − iγ_φ (GHz).
    pub delta_tot: C64,
}

/// Result of fitting the photons-per-mW constant at one pump frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationFit {
    /// Photons per mW of pump power.
    pub c: f64,
    /// Power-independent detuning offset (GHz); zero when pinned.
    pub delta_0: C64,
    /// Root-mean-square complex residual (GHz).
    pub residual: f64,
}

/// Fit δ_tot(P_p) = δ₀ + δ_m(C·P_p) at a single pump frequency.
///
/// δ_m is linear in C, so the least squares over complex residuals is a
/// closed-form linear regression in the real unknowns (C, Re δ₀, Im δ₀) —
/// or C alone when `fit_delta0` is false, pinning δ₀ = 0.
///
/// Requires at least two points, all at one ω_p, with at least two
/// distinct powers (identical powers cannot separate C from δ₀).
pub fn fit_calibration_constant(
    points: &[CalibrationPoint],
    p: &DispersiveParams,
    fit_delta0: bool,
) -> Result<CalibrationFit> {
    p.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "calibration needs at least 2 points, got {}",
            points.len()
        )));
    }
    let omega_p = points[0].omega_p;
    if points.iter().any(|pt| pt.omega_p != omega_p) {
        return Err(Error::InvalidParams(
            "calibration points mix pump frequencies; fit each frequency separately".into(),
        ));
    }
    let distinct_powers = {
        let mut powers: Vec<f64> = points.iter().map(|pt| pt.p_p_mw).collect();
        powers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        powers.windows(2).any(|w| w[1] > w[0])
    };
    if !distinct_powers {
        return Err(Error::InvalidParams(
            "all calibration points share one power; the regression is rank-deficient".into(),
        ));
    }

    // regressor per point: g_i = (δ_m per unit C)·P_i
    let slope = backaction_per_photon(omega_p, p);
    let g: Vec<C64> = points.iter().map(|pt| slope * pt.p_p_mw).collect();

    let (c, delta_0) = if fit_delta0 {
        // unknowns u = (C, Re δ₀, Im δ₀); each point gives two real rows
        let n = points.len() as f64;
        let sgg: f64 = g.iter().map(|v| v.norm_sqr()).sum();
        let sgr: f64 = g.iter().map(|v| v.re).sum();
        let sgi: f64 = g.iter().map(|v| v.im).sum();
        let sgd: f64 = g
            .iter()
            .zip(points)
            .map(|(gi, pt)| (gi.conj() * pt.delta_tot).re)
            .sum();
        let sdr: f64 = points.iter().map(|pt| pt.delta_tot.re).sum();
        let sdi: f64 = points.iter().map(|pt| pt.delta_tot.im).sum();
        let a = Array2::from_shape_vec(
            (3, 3),
            vec![sgg, sgr, sgi, sgr, n, 0.0, sgi, 0.0, n],
        )
        .expect("static shape");
        let b = Array1::from(vec![sgd, sdr, sdi]);
        let u = a.solve(&b).map_err(|e| {
            Error::Numeric(format!("calibration normal equations are singular: {e}"))
        })?;
        (u[0], C64::new(u[1], u[2]))
    } else {
        let sgg: f64 = g.iter().map(|v| v.norm_sqr()).sum();
        if !(sgg > 0.0) {
            return Err(Error::Numeric(
                "calibration regressors vanish; χ_qr or all powers are zero".into(),
            ));
        }
        let sgd: f64 = g
            .iter()
            .zip(points)
            .map(|(gi, pt)| (gi.conj() * pt.delta_tot).re)
            .sum();
        (sgd / sgg, C64::new(0.0, 0.0))
    };

    let ss: f64 = g
        .iter()
        .zip(points)
        .map(|(gi, pt)| (pt.delta_tot - delta_0 - gi * c).norm_sqr())
        .sum();
    Ok(CalibrationFit {
        c,
        delta_0,
        residual: (ss / points.len() as f64).sqrt(),
    })
}

/// Group calibration points by pump frequency and fit each group,
/// returning `(ω_p, fit)` pairs in ascending frequency order. Groups are
/// independent; a failing group fails the whole call with its error.
pub fn fit_calibration_groups(
    points: &[CalibrationPoint],
    p: &DispersiveParams,
    fit_delta0: bool,
) -> Result<Vec<(f64, CalibrationFit)>> {
    let mut freqs: Vec<f64> = points.iter().map(|pt| pt.omega_p).collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freqs.dedup();
    let mut out = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let group: Vec<CalibrationPoint> = points
            .iter()
            .copied()
            .filter(|pt| pt.omega_p == f)
            .collect();
        out.push((f, fit_calibration_constant(&group, p, fit_delta0)?));
    }
    Ok(out)
}
