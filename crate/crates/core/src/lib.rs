//! Non-Gaussian Kerr states in the motion of a single trapped ion.
//!
//! A resonant carrier drive on a trapped ion carries a weak self-phase
//! modulation of the vibrational mode at fourth order in the Lamb-Dicke
//! parameter. Starting from a coherent state, this dephasing produces the
//! Kerr states, including multi-component superpositions and the
//! two-component cat state. This crate provides
//!
//! - [`fock`]: truncated Fock-space states and operators,
//! - [`kerr`]: the ideal Kerr states, their quadrature moments and the
//!   effective-time mapping,
//! - [`dynamics`]: the full time-dependent laser-ion evolution and its
//!   comparison against the ideal state,
//! - [`analysis`]: Wigner functions, negativity and populations,
//! - [`harness`]: experiment orchestration, CSV output and the CLI.
//!
//! Units: hbar = 1, angular frequencies in rad/us, time in us.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod harness;
pub mod kerr;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Converts an ordinary frequency in Hz to an angular frequency in rad/us.
pub fn angular_from_hz(hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * hz * 1e-6
}

/// Converts an angular frequency in rad/us to an ordinary frequency in Hz.
pub fn hz_from_angular(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI) * 1e6
}
