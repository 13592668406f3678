use std::f64::consts::{PI, TAU};

use super::hamiltonian::effective_coefficients;
use super::params::{SpinPreparation, TrapParams};
use crate::fock::{fidelity_vs_density, MotionalDensity, MotionalState};
use crate::Result;

/// How the phase-space rotation between the simulated and the ideal motion is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameRotation {
    /// Best rotating frame: the angle maximizing the overlap.
    #[default]
    Fitted,
    /// Angle from the a^dag a term of the fourth-order effective Hamiltonian.
    Fixed,
    /// No rotation.
    Off,
}

/// Relation between the simulated motion and the ideal Kerr evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConvention {
    kerr_sign: f64,
    rotation_rate: f64,
    rotation: FrameRotation,
}

impl FrameConvention {
    fn with_sign(p: &TrapParams, kerr_sign: f64) -> Self {
        let (_, c1, _) = effective_coefficients(p.eta);
        Self {
            kerr_sign,
            rotation_rate: kerr_sign * p.rabi / 2.0 * c1,
            rotation: FrameRotation::Fitted,
        }
    }

    pub(crate) fn calibrated(p: &TrapParams, kerr_sign: f64) -> Self {
        Self::with_sign(p, kerr_sign)
    }

    /// Sign predicted by the diagonal effective evolution: under
    /// `exp(-iHt)` a sigma_x = lambda eigenstate acquires `exp(-i lambda tau n(n-1)/2)`.
    pub fn predicted(p: &TrapParams, spin: SpinPreparation) -> Self {
        Self::with_sign(p, -spin.sigma_x())
    }

    pub fn with_rotation(mut self, rotation: FrameRotation) -> Self {
        self.rotation = rotation;
        self
    }

    /// +1 or -1.
    pub fn kerr_sign(&self) -> f64 {
        self.kerr_sign
    }

    pub fn rotation_rate(&self) -> f64 {
        self.rotation_rate
    }

    pub fn rotation(&self) -> FrameRotation {
        self.rotation
    }
}

/// theta(t) = s (Omega/2)(-eta^2 + eta^4/2) t; the ideal state is compared
/// as `exp(i theta a^dag a) |ideal>`.
pub fn rotating_frame_angle(frame: &FrameConvention, t: f64) -> f64 {
    frame.rotation_rate * t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFit {
    pub fidelity: f64,
    /// Rotation applied to the ideal state, in (-pi, pi].
    pub angle: f64,
}

/// Fidelity of `rho` against the ideal state in the chosen frame.
pub fn compare_to_ideal(
    ideal: &MotionalState,
    rho: &MotionalDensity,
    frame: &FrameConvention,
    t: f64,
) -> Result<FrameFit> {
    let angle = match frame.rotation {
        FrameRotation::Off => 0.0,
        FrameRotation::Fixed => rotating_frame_angle(frame, t),
        FrameRotation::Fitted => return best_rotation(ideal, rho),
    };
    Ok(FrameFit {
        fidelity: fidelity_vs_density(&ideal.rotated(angle), rho)?,
        angle: wrap(angle),
    })
}

fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Maximizes `f(theta) = <psi| R(theta)^dag rho R(theta) |psi>` over theta.
///
/// `f` is a trigonometric polynomial `c_0 + 2 Re sum_d c_d e^{-i d theta}`
/// with `c_d = sum_n psi*_{n+d} rho_{n+d,n} psi_n`. A dense scan finds the
/// global basin and Newton iterations polish the maximum.
pub fn best_rotation(ideal: &MotionalState, rho: &MotionalDensity) -> Result<FrameFit> {
    // Dimension check via the plain overlap.
    fidelity_vs_density(ideal, rho)?;
    let psi = ideal.amplitudes();
    let m = rho.matrix();
    let dim = psi.len();
    let coeffs: Vec<crate::C64> = (0..dim)
        .map(|d| {
            (0..dim - d)
                .map(|n| psi[n + d].conj() * m[(n + d, n)] * psi[n])
                .sum()
        })
        .collect();
    let eval = |theta: f64| -> (f64, f64, f64) {
        let mut f = coeffs[0].re;
        let mut df = 0.0;
        let mut d2f = 0.0;
        for (d, c) in coeffs.iter().enumerate().skip(1) {
            let e = crate::C64::from_polar(1.0, -(d as f64) * theta);
            let z = c * e;
            let df_ = d as f64;
            f += 2.0 * z.re;
            df += 2.0 * df_ * z.im;
            d2f -= 2.0 * df_ * df_ * z.re;
        }
        (f, df, d2f)
    };

    let samples = (16 * dim).max(256);
    let h = TAU / samples as f64;
    let (mut best_theta, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..samples {
        let theta = -PI + k as f64 * h;
        let (f, _, _) = eval(theta);
        if f > best {
            best = f;
            best_theta = theta;
        }
    }
    let mut theta = best_theta;
    for _ in 0..30 {
        let (_, df, d2f) = eval(theta);
        if d2f >= 0.0 {
            break;
        }
        let step = (-df / d2f).clamp(-h, h);
        theta += step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    let (f, _, _) = eval(theta);
    let (fidelity, angle) = if f >= best { (f, theta) } else { (best, best_theta) };
    Ok(FrameFit {
        fidelity,
        angle: wrap(angle),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{choose_truncation, coherent_state};
    use crate::kerr::{kerr_state, KerrParams};
    use crate::C64;

    #[test]
    fn angle_is_linear_and_zero_at_origin() {
        let p = TrapParams::reference();
        let f = FrameConvention::predicted(&p, SpinPreparation::Plus);
        assert_eq!(rotating_frame_angle(&f, 0.0), 0.0);
        let t = 123.4;
        assert!((rotating_frame_angle(&f, 2.0 * t) - 2.0 * rotating_frame_angle(&f, t)).abs() < 1e-12);
    }

    #[test]
    fn predicted_sign_follows_preparation() {
        let p = TrapParams::reference();
        assert_eq!(FrameConvention::predicted(&p, SpinPreparation::Plus).kerr_sign(), -1.0);
        assert_eq!(FrameConvention::predicted(&p, SpinPreparation::Minus).kerr_sign(), 1.0);
    }

    #[test]
    fn fitted_rotation_recovers_known_angle() {
        let pol = choose_truncation(C64::new(2.0, 0.0), 1e-12).unwrap();
        let ideal = kerr_state(KerrParams::new(C64::new(2.0, 0.0), 0.9), &pol).unwrap();
        for &angle in &[0.0, 0.4, -2.5, 3.0] {
            let rho = ideal.rotated(angle).density();
            let fit = best_rotation(&ideal, &rho).unwrap();
            assert!((fit.fidelity - 1.0).abs() < 1e-12, "{angle}: {}", fit.fidelity);
            assert!((wrap(fit.angle - angle)).abs() < 1e-7, "{angle} vs {}", fit.angle);
        }
    }

    #[test]
    fn fitted_rotation_dominates_fixed_choices() {
        let pol = choose_truncation(C64::new(2.0, 0.0), 1e-12).unwrap();
        let ideal = kerr_state(KerrParams::new(C64::new(2.0, 0.0), 1.3), &pol).unwrap();
        let other = coherent_state(C64::from_polar(2.0, 0.8), &pol).unwrap().density();
        let fit = best_rotation(&ideal, &other).unwrap();
        for k in 0..200 {
            let theta = -PI + k as f64 * TAU / 200.0;
            let f = fidelity_vs_density(&ideal.rotated(theta), &other).unwrap();
            assert!(f <= fit.fidelity + 1e-12);
        }
    }

    #[test]
    fn rotation_leaves_populations_alone() {
        let pol = choose_truncation(C64::new(2.0, 0.0), 1e-12).unwrap();
        let s = kerr_state(KerrParams::new(C64::new(2.0, 0.0), 0.3), &pol).unwrap();
        for (a, b) in s.populations().iter().zip(s.rotated(1.234).populations()) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * a);
        }
    }
}
