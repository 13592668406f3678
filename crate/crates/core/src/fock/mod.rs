//! Truncated Fock-space linear algebra.
//!
//! All matrices are dense `nalgebra` matrices over `Complex64`; dimensions
//! stay below a few hundred, where dense storage is both simpler and faster.

mod expm;
mod operators;
mod state;

pub use expm::matrix_exponential;
pub use operators::{
    annihilation, displacement_operator, ladder_operators, DisplacementGenerator, Ladder,
};
pub use state::{
    choose_truncation, coherent_state, fidelity_pure, fidelity_vs_density, partial_trace_spin,
    poisson_tail, MotionalDensity, MotionalState, Spin, SpinMotionState, TruncationPolicy,
    NORM_TOLERANCE,
};
pub(crate) use state::coherent_coefficients;
