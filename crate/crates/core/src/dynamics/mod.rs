//! Full laser-ion evolution and its comparison against the ideal Kerr state.
//!
//! The carrier Hamiltonian is periodic in the trap period, so the default
//! path caches one period of midpoint propagators and cycles through them.

mod frame;
mod hamiltonian;
mod params;
mod propagate;

pub use frame::{
    best_rotation, compare_to_ideal, rotating_frame_angle, FrameConvention, FrameFit,
    FrameRotation,
};
pub use hamiltonian::{
    effective_coefficients, effective_hamiltonian, full_hamiltonian, step_propagators,
    StepPropagators,
};
pub use params::{
    SimulationGrid, SpinPreparation, TrapParams, DEFAULT_DT_US, MIN_STEPS_PER_PERIOD,
};
pub use propagate::{
    calibrate_kerr_sign, calibrate_kerr_sign_effective, cat_peak, propagate, propagate_effective,
    scan_peak, CatPeak, PropagateOptions, Sample, Simulation, Trajectory, ABORT_NORM_DRIFT,
    CALIBRATION_MIN_FIDELITY, CALIBRATION_MIN_MARGIN, CALIBRATION_TAU,
};
