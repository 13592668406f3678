use crate::fock::{MotionalState, SpinMotionState};
use crate::{angular_from_hz, Error, Result, C64};

/// Physical parameters of the driven ion. Angular frequencies in rad/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    /// Rabi frequency Omega of the carrier drive.
    pub rabi: f64,
    /// Trap (oscillator) frequency omega.
    pub trap_freq: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// Initial coherent amplitude of the motion.
    pub alpha: C64,
}

impl TrapParams {
    pub fn from_hz(rabi_hz: f64, trap_hz: f64, eta: f64, alpha: C64) -> Self {
        Self {
            rabi: angular_from_hz(rabi_hz),
            trap_freq: angular_from_hz(trap_hz),
            eta,
            alpha,
        }
    }

    /// eta = 0.2, Omega = 2pi x 100 kHz, omega = 2pi x 3 MHz, alpha = 2.
    pub fn reference() -> Self {
        Self::from_hz(100e3, 3e6, 0.2, C64::new(2.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(Error::InvalidParameter(format!("rabi frequency {}", self.rabi)));
        }
        if !(self.trap_freq > 0.0) || !self.trap_freq.is_finite() {
            return Err(Error::InvalidParameter(format!("trap frequency {}", self.trap_freq)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Lamb-Dicke parameter {} outside (0, 1)",
                self.eta
            )));
        }
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite alpha".into()));
        }
        Ok(())
    }

    /// Warning text when <n> eta exceeds 1.
    pub fn lamb_dicke_warning(&self) -> Option<String> {
        let load = self.alpha.norm_sqr() * self.eta;
        (load > 1.0).then(|| {
            format!("outside the Lamb-Dicke regime: <n> eta = {load:.3} > 1")
        })
    }

    pub fn trap_period(&self) -> f64 {
        std::f64::consts::TAU / self.trap_freq
    }

    pub fn rabi_over_trap(&self) -> f64 {
        self.rabi / self.trap_freq
    }
}

/// Initial internal state, an eigenstate of sigma_x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpinPreparation {
    /// (|g> + |e>)/sqrt(2), sigma_x = +1.
    #[default]
    Plus,
    /// (|g> - |e>)/sqrt(2), sigma_x = -1.
    Minus,
}

impl SpinPreparation {
    pub fn sigma_x(self) -> f64 {
        match self {
            SpinPreparation::Plus => 1.0,
            SpinPreparation::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SpinPreparation::Plus => SpinPreparation::Minus,
            SpinPreparation::Minus => SpinPreparation::Plus,
        }
    }

    pub fn prepare(self, motion: &MotionalState) -> Result<SpinMotionState> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        SpinMotionState::product(C64::new(s, 0.0), C64::new(s * self.sigma_x(), 0.0), motion)
    }
}

/// Default step: 1 ns.
pub const DEFAULT_DT_US: f64 = 1e-3;

/// Fewest midpoint steps per trap period that still resolve the drive.
pub const MIN_STEPS_PER_PERIOD: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid {
    /// Target step in us; snapped to trap_period / K when `commensurate`.
    pub dt: f64,
    pub t_total: f64,
    /// Observables are recorded every `record_stride` steps (and at the end).
    pub record_stride: usize,
    pub commensurate: bool,
}

impl SimulationGrid {
    pub fn new(dt: f64, t_total: f64, record_stride: usize, commensurate: bool) -> Result<Self> {
        if !(dt > 0.0) || !(t_total >= 0.0) || record_stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dt={dt}, t_total={t_total}, stride={record_stride}"
            )));
        }
        Ok(Self {
            dt,
            t_total,
            record_stride,
            commensurate,
        })
    }

    /// Commensurate grid recording roughly every `interval` us, rounded to
    /// whole trap periods.
    pub fn with_interval(p: &TrapParams, dt: f64, t_total: f64, interval: f64) -> Result<Self> {
        let k = steps_per_period(p, dt);
        let periods = (interval / p.trap_period()).round().max(1.0) as usize;
        Self::new(dt, t_total, periods * k, true)
    }

    /// Snapped step length for these parameters.
    pub fn effective_dt(&self, p: &TrapParams) -> f64 {
        if self.commensurate {
            p.trap_period() / steps_per_period(p, self.dt) as f64
        } else {
            let n = (self.t_total / self.dt).round().max(1.0);
            self.t_total / n
        }
    }

    pub fn n_steps(&self, p: &TrapParams) -> usize {
        (self.t_total / self.effective_dt(p)).round() as usize
    }
}

pub(crate) fn steps_per_period(p: &TrapParams, dt: f64) -> usize {
    (p.trap_period() / dt).round().max(1.0) as usize
}
