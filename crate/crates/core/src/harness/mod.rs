//! Experiment orchestration: configuration, sweeps, CSV output and the
//! command-line front end.

#[cfg(feature = "cli")]
mod cli;
mod config;
mod experiments;
mod table;
mod validate;

#[cfg(feature = "cli")]
pub use cli::cli_main;
pub use config::{RunConfig, Truncation, CONFIG_KEYS, PARITY_N_MAX, WORKERS_ENV};
pub use experiments::{
    cat_point, default_rabi_grid_hz, fixed_time_fidelity, negativity_onset, parse_grid,
    predicted_cat_time, prepare, rabi_hz_for_cat, run_evolution, run_ideal, run_indexed,
    simulate, sweep_eta_fixed_time, sweep_eta_optimum, sweep_rabi, write_manifest,
    write_sweep_eta, write_sweep_rabi, write_trajectory, write_wigner, EvolutionOutput,
    RegimeFlag, SweepEtaRow, SweepRabiRow, CAT_WINDOW, DEFAULT_SWEEP_ETAS, IDEAL_SNAPSHOTS,
    MAX_RABI_OVER_TRAP, NEGATIVITY_THRESHOLD, SWEEP_SCAN_POINTS,
};
pub use table::{
    format_sig, read_table, write_table, Cell, Table, MOMENTS_HEADER, POPULATIONS_HEADER,
    SWEEP_ETA_HEADER, SWEEP_RABI_HEADER, TRAJECTORY_HEADER, WIGNER_HEADER,
};
pub use validate::{render_checks, run_validation, Check};
