//! Frequency-unit conversions.
//!
//! Everything inside the numerical core is an angular frequency in rad/ns
//! with ħ = 1, so that `exp(−iHt)` needs no extra constants when `t` is in
//! ns. Public interfaces use ordinary frequencies in GHz. These two helpers
//! are the only place the 2π lives; call sites never multiply it in by hand.

/// 2π.
pub const TAU: f64 = std::f64::consts::TAU;

/// Ordinary frequency in GHz → angular frequency in rad/ns.
#[inline]
pub fn angular(f_ghz: f64) -> f64 {
    TAU * f_ghz
}

/// Angular frequency in rad/ns → ordinary frequency in GHz.
#[inline]
pub fn ordinary(w: f64) -> f64 {
    w / TAU
}
