use nalgebra::DMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::params::{steps_per_period, SimulationGrid, TrapParams, MIN_STEPS_PER_PERIOD};
use crate::fock::{displacement_operator, matrix_exponential, TruncationPolicy};
use crate::{Error, Result, C64};

/// Spin (x) motion operator with off-diagonal spin blocks:
/// `|e><g| (x) lower + |g><e| (x) lower^dag`.
fn spin_flip_blocks(lower: &DMatrix<C64>) -> DMatrix<C64> {
    let d = lower.nrows();
    let mut h = DMatrix::zeros(2 * d, 2 * d);
    h.view_mut((d, 0), (d, d)).copy_from(lower);
    h.view_mut((0, d), (d, d)).copy_from(&lower.adjoint());
    h
}

/// Carrier drive in the interaction picture:
/// `H(t) = (Omega/2) [sigma+ D(i eta e^{i omega t}) + h.c.]`.
pub fn full_hamiltonian(t: f64, p: &TrapParams, policy: &TruncationPolicy) -> Result<DMatrix<C64>> {
    let beta = C64::i() * p.eta * C64::from_polar(1.0, p.trap_freq * t);
    let d = displacement_operator(beta, policy)?;
    Ok(spin_flip_blocks(&d.map(|z| z * (p.rabi / 2.0))))
}

/// Coefficients (c0, c1, c2) of `(Omega/2)[c0 + c1 n + c2 n(n-1)] sigma_x`
/// from the fourth-order carrier expansion.
pub fn effective_coefficients(eta: f64) -> (f64, f64, f64) {
    let e2 = eta * eta;
    let e4 = e2 * e2;
    (1.0 - e2 / 2.0 + e4 / 8.0, -e2 + e4 / 2.0, e4 / 4.0)
}

/// Time-independent resonant Hamiltonian to fourth order in eta.
pub fn effective_hamiltonian(p: &TrapParams, policy: &TruncationPolicy) -> DMatrix<C64> {
    let (c0, c1, c2) = effective_coefficients(p.eta);
    let dim = policy.dim();
    let mut diag = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        let nf = n as f64;
        diag[(n, n)] = C64::new(p.rabi / 2.0 * (c0 + c1 * nf + c2 * nf * (nf - 1.0)), 0.0);
    }
    spin_flip_blocks(&diag)
}

/// `exp(-i H(t_mid) dt)`.
pub(crate) fn midpoint_step(
    t_mid: f64,
    dt: f64,
    p: &TrapParams,
    policy: &TruncationPolicy,
) -> Result<DMatrix<C64>> {
    let h = full_hamiltonian(t_mid, p, policy)?;
    matrix_exponential(&h.map(|z| z * C64::new(0.0, -dt)))
}

/// Midpoint propagators over one trap period; H(t) is periodic with the
/// trap period so cycling through them reproduces stepping at any time.
#[derive(Debug, Clone)]
pub struct StepPropagators {
    pub dt: f64,
    pub steps: Vec<DMatrix<C64>>,
    /// `steps[K-1] ... steps[1] steps[0]`.
    pub period: DMatrix<C64>,
}

impl StepPropagators {
    pub fn steps_per_period(&self) -> usize {
        self.steps.len()
    }

    pub fn period_time(&self) -> f64 {
        self.dt * self.steps.len() as f64
    }

    /// `period^m` by repeated squaring.
    pub fn period_power(&self, m: usize) -> DMatrix<C64> {
        let dim = self.period.nrows();
        let mut result = DMatrix::identity(dim, dim);
        let mut base = self.period.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = &base * &result;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

pub fn step_propagators(
    p: &TrapParams,
    grid: &SimulationGrid,
    policy: &TruncationPolicy,
) -> Result<StepPropagators> {
    p.validate()?;
    if !grid.commensurate {
        return Err(Error::InvalidParameter(
            "cached step propagators need a commensurate grid".into(),
        ));
    }
    let k = steps_per_period(p, grid.dt);
    if k < MIN_STEPS_PER_PERIOD {
        return Err(Error::UnderResolvedDrive {
            steps: k,
            min: MIN_STEPS_PER_PERIOD,
        });
    }
    let dt = p.trap_period() / k as f64;
    let build = |j: usize| midpoint_step((j as f64 + 0.5) * dt, dt, p, policy);
    #[cfg(feature = "parallel")]
    let steps: Vec<DMatrix<C64>> = (0..k).into_par_iter().map(build).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let steps: Vec<DMatrix<C64>> = (0..k).map(build).collect::<Result<_>>()?;

    let dim = 2 * policy.dim();
    let period = steps
        .iter()
        .fold(DMatrix::identity(dim, dim), |acc, u| u * acc);
    Ok(StepPropagators { dt, steps, period })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::choose_truncation;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn policy() -> TruncationPolicy {
        choose_truncation(C64::new(2.0, 0.0), 1e-12).unwrap()
    }

    #[test]
    fn small_eta_limit_is_sigma_x() {
        let p = TrapParams {
            eta: 1e-12,
            ..TrapParams::reference()
        };
        let pol = policy();
        let h = full_hamiltonian(0.37, &p, &pol).unwrap();
        let d = pol.dim();
        for i in 0..2 * d {
            for j in 0..2 * d {
                let expected = if (i + d == j) || (j + d == i) { p.rabi / 2.0 } else { 0.0 };
                assert!((h[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn full_hamiltonian_is_hermitian() {
        let p = TrapParams::reference();
        let pol = policy();
        for &t in &[0.0, 0.013, 0.2, 7.77] {
            let h = full_hamiltonian(t, &p, &pol).unwrap();
            assert!(max_abs(&(&h - h.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn carrier_diagonal_matches_fourth_order_expansion() {
        // <e,n|H(t)|g,n> = (Omega/2) <n|D|n> depends only on eta; the
        // expansion must agree up to O(eta^6).
        let pol = policy();
        for &eta in &[0.05, 0.1, 0.15] {
            let p = TrapParams {
                eta,
                ..TrapParams::reference()
            };
            let h = full_hamiltonian(0.0, &p, &pol).unwrap();
            let he = effective_hamiltonian(&p, &pol);
            let d = pol.dim();
            for n in 0..4 {
                let diff = (h[(d + n, n)] - he[(d + n, n)]).norm();
                let bound = p.rabi / 2.0 * eta.powi(6) * (1.0 + n as f64).powi(3);
                assert!(diff < bound, "eta {eta} n {n}: {diff:e} vs {bound:e}");
            }
        }
    }

    #[test]
    fn effective_coefficients_transcribed() {
        let p = TrapParams::reference();
        let pol = policy();
        assert_eq!(effective_coefficients(0.0), (1.0, 0.0, 0.0));
        let (_, _, c2) = effective_coefficients(p.eta);
        // Coefficient of a^dag^2 a^2 sigma_x is Omega eta^4 / 8.
        assert!((p.rabi / 2.0 * c2 - p.rabi * p.eta.powi(4) / 8.0).abs() < 1e-15);
        let he = effective_hamiltonian(&p, &pol);
        let d = pol.dim();
        let n = 3.0;
        let expected = p.rabi / 2.0
            * (1.0 - 0.02 + 0.0002 + (-0.04 + 0.0008) * n + 0.0004 * n * (n - 1.0));
        assert!((he[(3, d + 3)].re - expected).abs() < 1e-14);
    }

    #[test]
    fn snapped_step_count() {
        let p = TrapParams::reference();
        let grid = SimulationGrid::new(0.01, 10.0, 1, true).unwrap();
        let k = steps_per_period(&p, grid.dt);
        assert!(k == 33 || k == 34);
        assert!((p.trap_period() - 1.0 / 3.0).abs() < 1e-12);
        let props = step_propagators(&p, &grid, &policy()).unwrap();
        assert_eq!(props.steps_per_period(), k);
        assert!((props.period_time() - p.trap_period()).abs() < 1e-12);
        for u in &props.steps {
            let e = u.adjoint() * u - DMatrix::identity(u.nrows(), u.nrows());
            assert!(max_abs(&e) < 1e-10);
        }
    }

    #[test]
    fn refuses_under_resolved_drive() {
        let p = TrapParams::reference();
        let grid = SimulationGrid::new(0.02, 10.0, 1, true).unwrap();
        assert!(matches!(
            step_propagators(&p, &grid, &policy()),
            Err(Error::UnderResolvedDrive { steps: 17, .. })
        ));
    }

    #[test]
    fn period_power_matches_repeated_product() {
        let p = TrapParams::reference();
        let grid = SimulationGrid::new(0.01, 10.0, 1, true).unwrap();
        let props = step_propagators(&p, &grid, &policy()).unwrap();
        let mut direct = DMatrix::identity(props.period.nrows(), props.period.nrows());
        for _ in 0..13 {
            direct = &props.period * direct;
        }
        assert!(max_abs(&(direct - props.period_power(13))) < 1e-12);
    }
}
