//! The displaced (pump) frame: classical cavity response absorbed into a
//! periodic junction-phase modulation.
//!
//! A strong pump at ω_p fills the resonator with n̄ = (A_p/2)²/(ω_p − ω_a)²
//! photons — far too many for a small Fock basis. Displacing the resonator
//! by its classical Langevin solution (κ neglected) leaves the cavity near
//! vacuum and turns the pump into a phase modulation of the junction,
//!
//! ```text
//! H̃(t) = 4E_C Ñ² − E_J[cos θ̃ cos θ₀(t) − sin θ̃ sin θ₀(t)]
//!        + ω_a ã†ã + g Ñ(ã + ã†),          θ₀(t) = ±2(g/ω_p)√n̄ sin(ω_p t),
//! ```
//!
//! with the − sign of θ₀ when ω_p < ω_a. Using cos θ₀ = 1 − (1 − cos θ₀)
//! the static `−E_J cos θ̃` piece joins the bare transmon, which the
//! projection makes exactly diagonal, so evaluating H̃(t) costs two
//! scalar-weighted matrix additions:
//!
//! ```text
//! H̃(t) = H₀ + (1 − cos θ₀(t))·cos_block + sin θ₀(t)·sin_block.
//! ```

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    build_fock_operators, kron, projected_joint_static_hamiltonian, CircuitParams,
    OperatorMatrix,
};
use crate::units::angular;
use crate::C64;

/// Pumps closer to the bare resonator than this are refused: the
/// closed-form displacement (which neglects κ) diverges on resonance.
pub const MIN_PUMP_DETUNING_GHZ: f64 = 1e-3;

/// A monochromatic charge pump `A_p cos(ω_p t)·N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpDrive {
    /// Pump amplitude `A_p/2π` in GHz, ≥ 0.
    pub a_p: f64,
    /// Pump frequency `ω_p/2π` in GHz.
    pub omega_p: f64,
    /// Classical intracavity photon number `(A_p/2)²/(ω_p − ω_a)²`.
    pub n_bar: f64,
    /// `sign(ω_p − ω_a)`: the classical solution flips sign for a pump
    /// below the resonator.
    pub sign: f64,
}

/// Photon number `n̄ = (A_p/2)²/(ω_p − ω_a)²` pumped into the resonator
/// (all arguments in GHz).
pub fn pump_photon_number(a_p: f64, omega_p: f64, omega_a: f64) -> Result<f64> {
    check_detuning(omega_p, omega_a)?;
    if !(a_p >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "pump amplitude must be nonnegative, got {a_p} GHz"
        )));
    }
    let delta = omega_p - omega_a;
    Ok((a_p / 2.0).powi(2) / (delta * delta))
}

/// Build the [`PumpDrive`] that deposits `n_bar` photons: the inverse of
/// [`pump_photon_number`], `A_p = 2√n̄·|ω_p − ω_a|`.
pub fn drive_from_photons(n_bar: f64, omega_p: f64, omega_a: f64) -> Result<PumpDrive> {
    check_detuning(omega_p, omega_a)?;
    if !(n_bar >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "photon number must be nonnegative, got {n_bar}"
        )));
    }
    let delta = omega_p - omega_a;
    Ok(PumpDrive {
        a_p: 2.0 * n_bar.sqrt() * delta.abs(),
        omega_p,
        n_bar,
        sign: if delta >= 0.0 { 1.0 } else { -1.0 },
    })
}

/// Build the [`PumpDrive`] for a given amplitude `A_p` (GHz).
pub fn drive_from_amplitude(a_p: f64, omega_p: f64, omega_a: f64) -> Result<PumpDrive> {
    let n_bar = pump_photon_number(a_p, omega_p, omega_a)?;
    Ok(PumpDrive {
        a_p,
        omega_p,
        n_bar,
        sign: if omega_p - omega_a >= 0.0 { 1.0 } else { -1.0 },
    })
}

fn check_detuning(omega_p: f64, omega_a: f64) -> Result<()> {
    if (omega_p - omega_a).abs() < MIN_PUMP_DETUNING_GHZ {
        return Err(Error::ResonantPump {
            omega_p_ghz: omega_p,
            omega_a_ghz: omega_a,
            min_detuning_ghz: MIN_PUMP_DETUNING_GHZ,
        });
    }
    Ok(())
}

/// Junction-phase modulation `θ₀(t) = sign · 2(g/ω_p)√n̄ · sin(ω_p t)`
/// (`t` in ns, `g` in GHz, dimensionless result).
pub fn theta0(t_ns: f64, drive: &PumpDrive, g: f64) -> f64 {
    theta0_amplitude(drive, g) * (angular(drive.omega_p) * t_ns).sin()
}

/// Peak of |θ₀|: `2(g/ω_p)√n̄`, signed by the pump-side convention.
fn theta0_amplitude(drive: &PumpDrive, g: f64) -> f64 {
    drive.sign * 2.0 * (g / drive.omega_p) * drive.n_bar.sqrt()
}

/// The time-periodic displaced-frame Hamiltonian, stored as a static part
/// plus two Hermitian blocks weighted by `1 − cos θ₀(t)` and `sin θ₀(t)`.
///
/// All three operators live in the transmon-eigen ⊗ Fock basis (dimension
/// `n_transmon · n_fock`) in angular units. A model is immutable; threads
/// may evaluate [`DisplacedFrameModel::hamiltonian`] concurrently.
#[derive(Debug, Clone)]
pub struct DisplacedFrameModel {
    /// Static part `diag(E_t) ⊗ I + ω_a I ⊗ a†a + g Ñ ⊗ (a + ã†)`.
    pub h0: OperatorMatrix,
    /// `E_J (cos θ̃ ⊗ I)`, angular units.
    pub cos_block: OperatorMatrix,
    /// `E_J (sin θ̃ ⊗ I)`, angular units.
    pub sin_block: OperatorMatrix,
    /// Signed peak modulation `±2(g/ω_p)√n̄` (rad).
    pub theta0_amplitude: f64,
    /// Pump period `T_p = 1/(ω_p/2π)` in ns.
    pub period_ns: f64,
    /// The drive that built this model.
    pub drive: PumpDrive,
    /// Retained transmon levels.
    pub n_transmon: usize,
    /// Fock cutoff.
    pub n_fock: usize,
}

impl DisplacedFrameModel {
    /// θ₀ at time `t` (ns).
    pub fn theta(&self, t_ns: f64) -> f64 {
        self.theta0_amplitude * (angular(self.drive.omega_p) * t_ns).sin()
    }

    /// Raw matrix of H̃(t): two scalar-weighted additions on top of H₀.
    pub fn hamiltonian_data(&self, t_ns: f64) -> Array2<C64> {
        self.hamiltonian_at_theta(self.theta(t_ns))
    }

    /// Raw matrix of H̃ for a given modulation angle θ.
    pub fn hamiltonian_at_theta(&self, theta: f64) -> Array2<C64> {
        let mut h = self.h0.data.clone();
        h.scaled_add(C64::new(1.0 - theta.cos(), 0.0), &self.cos_block.data);
        h.scaled_add(C64::new(theta.sin(), 0.0), &self.sin_block.data);
        h
    }

    /// H̃(t) as a tagged operator.
    pub fn hamiltonian(&self, t_ns: f64) -> Result<OperatorMatrix> {
        let h = OperatorMatrix::new(self.hamiltonian_data(t_ns), self.h0.basis_tag.clone())?;
        h.assert_hermitian()?;
        Ok(h)
    }

    /// The bath coupling operator `X = ã + ã†` in the model's basis.
    pub fn dissipation_operator(&self) -> Result<OperatorMatrix> {
        let fock = build_fock_operators(self.n_fock)?;
        let x = &fock.a.data + &fock.a.data.t().mapv(|v| v.conj());
        OperatorMatrix::new(
            kron(&Array2::eye(self.n_transmon), &x),
            self.h0.basis_tag.clone(),
        )
    }

    /// Joint dimension `n_transmon · n_fock`.
    pub fn dim(&self) -> usize {
        self.h0.dim
    }
}

/// Project the circuit onto its transmon eigenbasis and assemble the
/// displaced-frame model for the given pump.
pub fn build_displaced_model(
    params: &CircuitParams,
    drive: &PumpDrive,
) -> Result<DisplacedFrameModel> {
    params.validate()?;
    check_detuning(drive.omega_p, params.omega_a)?;
    if drive.omega_p <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "pump frequency must be positive, got {} GHz",
            drive.omega_p
        )));
    }
    let (h0, proj) = projected_joint_static_hamiltonian(params, params.n_transmon)?;
    let tag = h0.basis_tag.clone();
    let ej = angular(params.e_j);
    let eye_f = Array2::<C64>::eye(params.n_fock);
    let cos_block = kron(&proj.cos_theta.data, &eye_f).mapv(|v| ej * v);
    let sin_block = kron(&proj.sin_theta.data, &eye_f).mapv(|v| ej * v);
    Ok(DisplacedFrameModel {
        h0,
        cos_block: OperatorMatrix::new(cos_block, tag.clone())?,
        sin_block: OperatorMatrix::new(sin_block, tag)?,
        theta0_amplitude: theta0_amplitude(drive, params.g),
        period_ns: 1.0 / drive.omega_p,
        drive: *drive,
        n_transmon: params.n_transmon,
        n_fock: params.n_fock,
    })
}
