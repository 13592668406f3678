use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::frame::{compare_to_ideal, FrameConvention, FrameRotation};
use super::hamiltonian::{effective_hamiltonian, midpoint_step, step_propagators, StepPropagators};
use super::params::{SimulationGrid, SpinPreparation, TrapParams};
use crate::analysis::{internal_populations, phonon_populations};
use crate::fock::{
    coherent_state, matrix_exponential, partial_trace_spin, MotionalDensity, SpinMotionState,
    TruncationPolicy,
};
use crate::kerr::{kerr_state, quadrature_moments_density, tau_effective, time_for_tau, KerrParams, QuadratureMoments};
use crate::{Error, Result, C64};

/// Norm drift that aborts a run.
pub const ABORT_NORM_DRIFT: f64 = 1e-6;

/// Effective time at which the Kerr sign is calibrated.
pub const CALIBRATION_TAU: f64 = PI / 10.0;
pub const CALIBRATION_MIN_FIDELITY: f64 = 0.99;
pub const CALIBRATION_MIN_MARGIN: f64 = 0.05;

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Time in us.
    pub t: f64,
    pub tau_eff: f64,
    pub moments: QuadratureMoments,
    /// Against the ideal Kerr state at `s * tau_eff(t)`.
    pub fidelity: f64,
    /// Against the ideal cat (tau = pi).
    pub cat_fidelity: f64,
    /// Frame rotation used for `fidelity`.
    pub frame_angle: f64,
    pub purity: f64,
    pub p_excited: f64,
    pub phonon_populations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub frame: FrameConvention,
    /// Step actually used, in us.
    pub dt: f64,
    pub final_state: SpinMotionState,
    /// Reduced densities at each sample, when requested.
    pub densities: Vec<MotionalDensity>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PropagateOptions {
    pub keep_densities: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatPeak {
    pub t_peak: f64,
    pub fidelity: f64,
}

/// A configured run: parameters, truncation and (when commensurate) the
/// cached per-period propagators.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: TrapParams,
    spin: SpinPreparation,
    grid: SimulationGrid,
    policy: TruncationPolicy,
    propagators: Option<StepPropagators>,
}

impl Simulation {
    pub fn new(
        params: TrapParams,
        spin: SpinPreparation,
        grid: SimulationGrid,
        policy: TruncationPolicy,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(w) = params.lamb_dicke_warning() {
            log::warn!("{w}");
        }
        let propagators = if grid.commensurate {
            Some(step_propagators(&params, &grid, &policy)?)
        } else {
            None
        };
        Ok(Self {
            params,
            spin,
            grid,
            policy,
            propagators,
        })
    }

    pub fn params(&self) -> &TrapParams {
        &self.params
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn propagators(&self) -> Option<&StepPropagators> {
        self.propagators.as_ref()
    }

    pub fn dt(&self) -> f64 {
        match &self.propagators {
            Some(p) => p.dt,
            None => self.grid.effective_dt(&self.params),
        }
    }

    pub fn initial_state(&self) -> Result<SpinMotionState> {
        let motion = coherent_state(self.params.alpha, &self.policy)?;
        self.spin.prepare(&motion)
    }

    fn tau_at(&self, t: f64) -> f64 {
        if self.params.rabi > 0.0 {
            tau_effective(self.params.eta, self.params.rabi, t).unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// Runs the state forward from step `start` over `n_steps`, calling
    /// `on_record` at the first step, every `stride` steps and at the end.
    fn evolve(
        &self,
        initial: &SpinMotionState,
        start: usize,
        n_steps: usize,
        stride: usize,
        mut on_record: impl FnMut(f64, &SpinMotionState) -> Result<()>,
    ) -> Result<SpinMotionState> {
        if initial.motion_dim() != self.policy.dim() {
            return Err(Error::DimensionMismatch {
                left: initial.motion_dim(),
                right: self.policy.dim(),
            });
        }
        let dt = self.dt();
        let mut psi = initial.amplitudes().clone();
        let mut powers: HashMap<usize, DMatrix<C64>> = HashMap::new();
        let mut step = start;
        let end = start + n_steps;
        on_record(step as f64 * dt, initial)?;
        while step < end {
            let target = (step + stride).min(end);
            match &self.propagators {
                Some(props) => {
                    let k = props.steps_per_period();
                    while step < target {
                        if step % k == 0 && target - step >= k {
                            let m = (target - step) / k;
                            let u = powers.entry(m).or_insert_with(|| props.period_power(m));
                            psi = &*u * psi;
                            step += m * k;
                        } else {
                            psi = &props.steps[step % k] * psi;
                            step += 1;
                        }
                    }
                }
                None => {
                    while step < target {
                        let u = midpoint_step((step as f64 + 0.5) * dt, dt, &self.params, &self.policy)?;
                        psi = u * psi;
                        step += 1;
                    }
                }
            }
            let t = step as f64 * dt;
            check_state(&psi, t)?;
            on_record(t, &SpinMotionState::from_raw(psi.clone()))?;
        }
        Ok(SpinMotionState::from_raw(psi))
    }

    fn steps_for(&self, t: f64) -> usize {
        (t / self.dt()).round().max(0.0) as usize
    }

    /// Propagates without recording; returns the state after `t` (rounded to whole steps).
    pub fn state_at(&self, initial: &SpinMotionState, t: f64) -> Result<SpinMotionState> {
        let n = self.steps_for(t);
        self.evolve(initial, 0, n, n.max(1), |_, _| Ok(()))
    }

    /// States at increasing times `times`, each rounded to whole steps.
    pub fn states_at(&self, initial: &SpinMotionState, times: &[f64]) -> Result<Vec<SpinMotionState>> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("times must be increasing".into()));
        }
        let mut out = Vec::with_capacity(times.len());
        let mut state = initial.clone();
        let mut step = 0;
        for &t in times {
            let target = self.steps_for(t);
            let n = target - step;
            state = self.evolve(&state, step, n, n.max(1), |_, _| Ok(()))?;
            step = target;
            out.push(state.clone());
        }
        Ok(out)
    }

    /// Cat fidelity (fitted frame) every `interval` us inside `window`;
    /// the evolution jumps straight to the window start.
    pub fn cat_scan(&self, window: (f64, f64), interval: f64) -> Result<Vec<(f64, f64)>> {
        if !(window.0 <= window.1) || !(interval > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scan window {window:?} with interval {interval}"
            )));
        }
        let start = self.steps_for(window.0);
        let end = self.steps_for(window.1);
        let stride = self.steps_for(interval).max(1);
        let cat = kerr_state(KerrParams::new(self.params.alpha, PI), &self.policy)?;
        let frame = FrameConvention::calibrated(&self.params, 1.0);
        let at_start = self.state_at(&self.initial_state()?, window.0)?;
        let mut scan = Vec::new();
        self.evolve(&at_start, start, end - start, stride, |t, state| {
            let fit = compare_to_ideal(&cat, &partial_trace_spin(state), &frame, t)?;
            scan.push((t, fit.fidelity));
            Ok(())
        })?;
        Ok(scan)
    }

    /// Determines the sign relating the simulated motion to the ideal Kerr phase.
    pub fn calibrate(&self) -> Result<FrameConvention> {
        if !(self.params.rabi > 0.0) {
            return Err(Error::InvalidParameter(
                "Kerr sign calibration needs a nonzero Rabi frequency".into(),
            ));
        }
        let t = time_for_tau(self.params.eta, self.params.rabi, CALIBRATION_TAU)?;
        let end = self.state_at(&self.initial_state()?, t)?;
        let tau = self.tau_at(self.steps_for(t) as f64 * self.dt());
        select_sign(&partial_trace_spin(&end), &self.params, tau, &self.policy)
    }

    pub fn run(&self, frame: &FrameConvention, options: PropagateOptions) -> Result<Trajectory> {
        let initial = self.initial_state()?;
        self.run_from(&initial, frame, options)
    }

    pub fn run_from(
        &self,
        initial: &SpinMotionState,
        frame: &FrameConvention,
        options: PropagateOptions,
    ) -> Result<Trajectory> {
        let n_steps = self.grid.n_steps(&self.params);
        let cat = kerr_state(KerrParams::new(self.params.alpha, PI), &self.policy)?;
        let mut samples = Vec::new();
        let mut densities = Vec::new();
        let final_state = self.evolve(initial, 0, n_steps, self.grid.record_stride, |t, state| {
            let rho = partial_trace_spin(state);
            let tau_eff = self.tau_at(t);
            let ideal = kerr_state(
                KerrParams::new(self.params.alpha, frame.kerr_sign() * tau_eff),
                &self.policy,
            )?;
            let fit = compare_to_ideal(&ideal, &rho, frame, t)?;
            let cat_fit = compare_to_ideal(&cat, &rho, frame, t)?;
            let (_, p_excited) = internal_populations(state);
            samples.push(Sample {
                t,
                tau_eff,
                moments: quadrature_moments_density(&rho),
                fidelity: fit.fidelity,
                cat_fidelity: cat_fit.fidelity,
                frame_angle: fit.angle,
                purity: rho.purity(),
                p_excited,
                phonon_populations: phonon_populations(&rho),
            });
            if options.keep_densities {
                densities.push(rho);
            }
            Ok(())
        })?;
        Ok(Trajectory {
            samples,
            frame: *frame,
            dt: self.dt(),
            final_state,
            densities,
        })
    }
}

fn check_state(psi: &DVector<C64>, t_us: f64) -> Result<()> {
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { t_us });
    }
    let drift = (psi.norm_squared() - 1.0).abs();
    if drift > ABORT_NORM_DRIFT {
        return Err(Error::NormDrift {
            drift,
            t_us,
            limit: ABORT_NORM_DRIFT,
        });
    }
    Ok(())
}

/// Picks the Kerr sign whose ideal state better matches `rho` at effective time `tau`.
pub(crate) fn select_sign(
    rho: &MotionalDensity,
    p: &TrapParams,
    tau: f64,
    policy: &TruncationPolicy,
) -> Result<FrameConvention> {
    let fid = |sign: f64| -> Result<f64> {
        let frame = FrameConvention::calibrated(p, sign).with_rotation(FrameRotation::Fitted);
        let ideal = kerr_state(KerrParams::new(p.alpha, sign * tau), policy)?;
        Ok(compare_to_ideal(&ideal, rho, &frame, 0.0)?.fidelity)
    };
    let plus = fid(1.0)?;
    let minus = fid(-1.0)?;
    let (winner, sign) = if plus >= minus { (plus, 1.0) } else { (minus, -1.0) };
    if winner < CALIBRATION_MIN_FIDELITY || (plus - minus).abs() < CALIBRATION_MIN_MARGIN {
        return Err(Error::AmbiguousCalibration { plus, minus });
    }
    Ok(FrameConvention::calibrated(p, sign))
}

/// Calibrates the Kerr sign with a short full-Hamiltonian run to tau_eff = pi/10.
pub fn calibrate_kerr_sign(
    p: &TrapParams,
    spin: SpinPreparation,
    grid: &SimulationGrid,
    policy: &TruncationPolicy,
) -> Result<FrameConvention> {
    let t = time_for_tau(p.eta, p.rabi, CALIBRATION_TAU)?;
    let short = SimulationGrid { t_total: t, ..*grid };
    Simulation::new(*p, spin, short, *policy)?.calibrate()
}

/// `exp(-i H_eff t) initial` under the fourth-order effective Hamiltonian.
pub fn propagate_effective(
    initial: &SpinMotionState,
    p: &TrapParams,
    policy: &TruncationPolicy,
    t: f64,
) -> Result<SpinMotionState> {
    let h = effective_hamiltonian(p, policy);
    let u = matrix_exponential(&h.map(|z| z * C64::new(0.0, -t)))?;
    let psi = u * initial.amplitudes();
    check_state(&psi, t)?;
    Ok(SpinMotionState::from_raw(psi))
}

/// Same calibration as [`calibrate_kerr_sign`] driven by the effective Hamiltonian.
pub fn calibrate_kerr_sign_effective(
    p: &TrapParams,
    spin: SpinPreparation,
    policy: &TruncationPolicy,
) -> Result<FrameConvention> {
    p.validate()?;
    let t = time_for_tau(p.eta, p.rabi, CALIBRATION_TAU)?;
    let initial = spin.prepare(&coherent_state(p.alpha, policy)?)?;
    let end = propagate_effective(&initial, p, policy, t)?;
    select_sign(&partial_trace_spin(&end), p, CALIBRATION_TAU, policy)
}

/// Full propagation with observables recorded along the way.
pub fn propagate(
    initial: &SpinMotionState,
    p: &TrapParams,
    grid: &SimulationGrid,
    frame: &FrameConvention,
    policy: &TruncationPolicy,
) -> Result<Trajectory> {
    // The initial spin is taken from the state itself; the preparation only
    // matters for `initial_state`.
    let sim = Simulation::new(*p, SpinPreparation::Plus, *grid, *policy)?;
    sim.run_from(initial, frame, PropagateOptions::default())
}

/// Maximum of a `(t, fidelity)` scan.
pub fn scan_peak(scan: &[(f64, f64)]) -> Option<CatPeak> {
    scan.iter().fold(None, |best: Option<CatPeak>, &(t, f)| match best {
        Some(b) if b.fidelity >= f => Some(b),
        _ => Some(CatPeak { t_peak: t, fidelity: f }),
    })
}

/// Best cat fidelity among samples with `window.0 <= t <= window.1`.
pub fn cat_peak(traj: &Trajectory, window: (f64, f64)) -> Result<CatPeak> {
    let scan: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, s.cat_fidelity))
        .collect();
    scan_peak(&scan).ok_or(Error::EmptyWindow {
            start: window.0,
            end: window.1,
        })
}
