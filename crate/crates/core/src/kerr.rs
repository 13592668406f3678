//! Ideal Kerr states and their quadrature moments.
//!
//! A coherent state under pure self-phase modulation picks up the phase
//! `exp(i tau n(n-1)/2)` on each Fock component. Because `n(n-1)/2` is an
//! integer, the state is 2pi-periodic in `tau`; at `tau = pi` it is a
//! two-component cat.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::DVector;

use crate::fock::{coherent_coefficients, MotionalDensity, MotionalState, TruncationPolicy};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrParams {
    pub alpha: C64,
    /// Effective Kerr time in radians. Any real value; reduced mod 2pi on use.
    pub tau: f64,
}

impl KerrParams {
    pub fn new(alpha: C64, tau: f64) -> Self {
        Self { alpha, tau }
    }
}

/// Named fractional-revival times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KerrPreset {
    Coherent,
    /// Six coherent components.
    SixCat,
    /// Four components (compass state).
    Compass,
    /// Three components.
    ThreeCat,
    Cat,
    Recurrence,
}

impl KerrPreset {
    pub fn tau(self) -> f64 {
        match self {
            KerrPreset::Coherent => 0.0,
            KerrPreset::SixCat => PI / 3.0,
            KerrPreset::Compass => FRAC_PI_2,
            KerrPreset::ThreeCat => 2.0 * PI / 3.0,
            KerrPreset::Cat => PI,
            KerrPreset::Recurrence => TAU,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KerrPreset::Coherent => "coherent",
            KerrPreset::SixCat => "six-cat",
            KerrPreset::Compass => "compass",
            KerrPreset::ThreeCat => "three-cat",
            KerrPreset::Cat => "cat",
            KerrPreset::Recurrence => "recurrence",
        }
    }
}

/// `exp(i tau k)` for integer `k`, with `tau` reduced first so large times keep their digits.
fn integer_phase(tau: f64, k: u64) -> C64 {
    let reduced = tau.rem_euclid(TAU);
    let angle = (reduced * k as f64).rem_euclid(TAU);
    C64::from_polar(1.0, angle)
}

pub fn kerr_state(params: KerrParams, policy: &TruncationPolicy) -> Result<MotionalState> {
    policy.admit(params.alpha)?;
    let mut c = coherent_coefficients(params.alpha, policy.dim());
    for (n, z) in c.iter_mut().enumerate() {
        let k = (n as u64 * (n as u64).saturating_sub(1)) / 2;
        *z *= integer_phase(params.tau, k);
    }
    MotionalState::from_unnormalized(c)
}

/// `e^{-i pi/4}|i alpha> + e^{i pi/4}|-i alpha>`, normalized.
pub fn analytic_cat(alpha: C64, policy: &TruncationPolicy) -> Result<MotionalState> {
    policy.admit(alpha)?;
    let i = C64::i();
    let plus = coherent_coefficients(i * alpha, policy.dim());
    let minus = coherent_coefficients(-i * alpha, policy.dim());
    let sum: DVector<C64> = plus * C64::from_polar(1.0, -FRAC_PI_4) + minus * C64::from_polar(1.0, FRAC_PI_4);
    MotionalState::from_unnormalized(sum)
}

fn check_rates(eta: f64, rabi: f64) -> Result<()> {
    if !(eta > 0.0) || !(rabi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta and rabi must be positive (eta={eta}, rabi={rabi})"
        )));
    }
    Ok(())
}

/// tau_eff = eta^4 Omega t / 4, with `rabi` in rad/us and `t` in us.
pub fn tau_effective(eta: f64, rabi: f64, t: f64) -> Result<f64> {
    check_rates(eta, rabi)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    Ok(eta.powi(4) * rabi * t / 4.0)
}

/// Inverse of [`tau_effective`]: t = 4 tau / (eta^4 Omega), in us.
pub fn time_for_tau(eta: f64, rabi: f64, tau: f64) -> Result<f64> {
    check_rates(eta, rabi)?;
    Ok(4.0 * tau / (eta.powi(4) * rabi))
}

/// Rabi frequency (rad/us) that reaches `tau` at time `t` (us).
pub fn rabi_for_tau(eta: f64, tau: f64, t: f64) -> Result<f64> {
    if !(eta > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta and t must be positive (eta={eta}, t={t})"
        )));
    }
    Ok(4.0 * tau / (eta.powi(4) * t))
}

/// Means and variances of X = a + a^dag and Y = -i(a - a^dag).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
}

impl QuadratureMoments {
    fn from_expectations(a: C64, a2: C64, n: f64) -> Self {
        let mean_x = 2.0 * a.re;
        let mean_y = 2.0 * a.im;
        let x2 = 2.0 * a2.re + 2.0 * n + 1.0;
        let y2 = -2.0 * a2.re + 2.0 * n + 1.0;
        Self {
            mean_x,
            mean_y,
            var_x: x2 - mean_x * mean_x,
            var_y: y2 - mean_y * mean_y,
        }
    }
}

pub fn quadrature_moments(state: &MotionalState) -> QuadratureMoments {
    let c = state.amplitudes();
    let mut a = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut n_mean = 0.0;
    for n in 0..c.len() {
        let nf = n as f64;
        n_mean += nf * c[n].norm_sqr();
        if n >= 1 {
            a += c[n - 1].conj() * c[n] * nf.sqrt();
        }
        if n >= 2 {
            a2 += c[n - 2].conj() * c[n] * (nf * (nf - 1.0)).sqrt();
        }
    }
    QuadratureMoments::from_expectations(a, a2, n_mean)
}

/// Quadrature moments of a mixed motional state.
pub fn quadrature_moments_density(rho: &MotionalDensity) -> QuadratureMoments {
    let m = rho.matrix();
    let dim = rho.dim();
    let mut a = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut n_mean = 0.0;
    for n in 0..dim {
        let nf = n as f64;
        n_mean += nf * m[(n, n)].re;
        // Tr(rho a) = sum_n rho[n, n-1] sqrt(n)
        if n >= 1 {
            a += m[(n - 1, n)].conj() * nf.sqrt();
        }
        if n >= 2 {
            a2 += m[(n - 2, n)].conj() * (nf * (nf - 1.0)).sqrt();
        }
    }
    QuadratureMoments::from_expectations(a, a2, n_mean)
}

pub fn moment_trajectory(
    alpha: C64,
    tau_grid: &[f64],
    policy: &TruncationPolicy,
) -> Result<Vec<(f64, QuadratureMoments)>> {
    if tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("tau grid is not monotone".into()));
    }
    tau_grid
        .iter()
        .map(|&tau| {
            let state = kerr_state(KerrParams::new(alpha, tau), policy)?;
            Ok((tau, quadrature_moments(&state)))
        })
        .collect()
}
