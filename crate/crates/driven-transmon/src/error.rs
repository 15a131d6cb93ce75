//! Crate-wide error type.

use thiserror::Error;

/// Result alias with the crate error.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Physically or structurally invalid input parameters.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Pump driven exactly (or numerically too close) at the bare resonator
    /// frequency: the closed-form displaced frame diverges there. Use the
    /// dispersive model's photon number, which keeps the cavity linewidth.
    #[error(
        "pump frequency {omega_p_ghz} GHz is within {min_detuning_ghz} GHz of the bare \
         resonator frequency {omega_a_ghz} GHz; the displaced frame diverges on resonance — \
         use the dispersive-model photon number for resonant drives"
    )]
    ResonantPump {
        omega_p_ghz: f64,
        omega_a_ghz: f64,
        min_detuning_ghz: f64,
    },

    /// A dense eigensolver or linear solve failed.
    #[error("linear algebra backend failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    /// An operator expected to be Hermitian was not, beyond tolerance.
    #[error("matrix is not Hermitian: relative deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    /// The period propagator drifted off the unitary group.
    #[error(
        "propagator lost unitarity: ‖U†U − I‖ = {deviation:.3e} after {steps} steps; \
         retry with at least {suggested_steps} steps per period"
    )]
    UnitarityLoss {
        deviation: f64,
        steps: usize,
        suggested_steps: usize,
    },

    /// Fourier truncation of the dissipation operator misses too much weight.
    #[error(
        "spectral weight {weight:.3e} of the dissipation operator lies beyond |k| = {k_max} \
         (limit {limit:.1e}); increase k_max (and samples ≥ 2·k_max + 2)"
    )]
    AliasedFourierComponents {
        weight: f64,
        k_max: usize,
        limit: f64,
    },

    /// An iterative fit did not converge.
    #[error("fit did not converge after {iterations} iterations; final residuals {residuals:?}")]
    FitDidNotConverge {
        iterations: usize,
        residuals: Vec<f64>,
    },

    /// A numerical invariant broke badly enough to abort (rank loss,
    /// non-finite values, …).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The steady-state linear system is defective beyond a multi-dimensional
    /// null space (inconsistent or numerically singular in the wrong way).
    #[error("steady-state solve failed: {0}")]
    SteadyStateSolve(String),

    /// Configuration file or override problems, with position when known.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem problems while reading configs or writing artifacts.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
