//! Browser bindings: Wigner maps and moment curves of ideal Kerr states,
//! and the cat creation time for given trap parameters.
//!
//! Each export wraps a plain Rust function so the numerics stay testable
//! on the host.

use std::f64::consts::PI;

use kerr_ion::analysis::{wigner_function, WignerSpec};
use kerr_ion::fock::choose_truncation;
use kerr_ion::kerr::{kerr_state, moment_trajectory, time_for_tau, KerrParams};
use kerr_ion::{angular_from_hz, Error, Result, C64};
use wasm_bindgen::prelude::*;

/// Tail bound for the Fock cutoff of the displayed states.
pub const TAIL_EPSILON: f64 = 1e-12;
/// Largest Wigner map edge, in points.
pub const MAX_POINTS: usize = 201;

/// W(x, y) of the Kerr state on an `n x n` grid over `[-half_width,
/// half_width]^2`, row-major with y outer and x inner.
pub fn kerr_wigner(alpha: C64, tau: f64, half_width: f64, n: usize) -> Result<Vec<f64>> {
    if !(2..=MAX_POINTS).contains(&n) {
        return Err(Error::InvalidParameter(format!("grid edge {n} outside 2..={MAX_POINTS}")));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidParameter(format!("half width {half_width}")));
    }
    let pol = choose_truncation(alpha, TAIL_EPSILON)?;
    let rho = kerr_state(KerrParams::new(alpha, tau), &pol)?.density();
    let grid = wigner_function(&rho, &WignerSpec::square(half_width, n))?;
    // DMatrix is column-major over (iy, ix); the transpose gives y-outer rows.
    Ok(grid.values.transpose().as_slice().to_vec())
}

/// `(tau, mean_x, mean_y, var_x, var_y)` on `points` taus over one Kerr
/// period, flattened.
pub fn kerr_moments(alpha: C64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!("{points} moment points")));
    }
    let pol = choose_truncation(alpha, TAIL_EPSILON)?;
    let taus: Vec<f64> = (0..points).map(|k| 2.0 * PI * k as f64 / (points - 1) as f64).collect();
    Ok(moment_trajectory(alpha, &taus, &pol)?
        .into_iter()
        .flat_map(|(tau, m)| [tau, m.mean_x, m.mean_y, m.var_x, m.var_y])
        .collect())
}

/// Drive time in ms that reaches effective Kerr time `tau`.
pub fn creation_time_ms(eta: f64, rabi_khz: f64, tau: f64) -> Result<f64> {
    Ok(time_for_tau(eta, angular_from_hz(rabi_khz * 1e3), tau)? * 1e-3)
}

#[wasm_bindgen]
pub fn wigner_kerr(alpha_re: f64, alpha_im: f64, tau: f64, half_width: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    Ok(kerr_wigner(C64::new(alpha_re, alpha_im), tau, half_width, n)?)
}

#[wasm_bindgen]
pub fn moment_curves(alpha_re: f64, alpha_im: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    Ok(kerr_moments(C64::new(alpha_re, alpha_im), points)?)
}

#[wasm_bindgen]
pub fn cat_time_ms(eta: f64, rabi_khz: f64, tau: f64) -> std::result::Result<f64, JsError> {
    Ok(creation_time_ms(eta, rabi_khz, tau)?)
}
