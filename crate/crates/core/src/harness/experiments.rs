use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::RunConfig;
use super::table::{
    write_table, Cell, MOMENTS_HEADER, POPULATIONS_HEADER, SWEEP_ETA_HEADER, SWEEP_RABI_HEADER,
    TRAJECTORY_HEADER, WIGNER_HEADER,
};
use crate::analysis::{negativity_metrics, wigner_function, WignerGrid, WignerSpec};
use crate::dynamics::{
    cat_peak, scan_peak, CatPeak, FrameConvention, PropagateOptions, Simulation, Trajectory,
};
use crate::fock::{partial_trace_spin, TruncationPolicy};
use crate::kerr::{kerr_state, moment_trajectory, rabi_for_tau, time_for_tau, KerrParams};
use crate::{hz_from_angular, Error, Result, C64};

/// Cat-peak search window relative to the predicted cat time.
pub const CAT_WINDOW: (f64, f64) = (0.85, 1.15);

/// Records per cat-peak search window in sweeps.
pub const SWEEP_SCAN_POINTS: usize = 600;

/// Ratio Omega/omega above which the effective description is not trusted.
pub const MAX_RABI_OVER_TRAP: f64 = 0.5;

pub const DEFAULT_SWEEP_ETAS: [f64; 3] = [0.1, 0.15, 0.2];

/// Wigner negativity threshold relative to the maximum.
pub const NEGATIVITY_THRESHOLD: f64 = 0.005;

/// 25 kHz to 400 kHz in half-octave steps.
pub fn default_rabi_grid_hz() -> Vec<f64> {
    (0..=8).map(|k| 25e3 * 2f64.powf(k as f64 / 2.0)).collect()
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number {s:?} in grid {spec:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || b < a {
                return Err(Error::Config(format!("bad grid {spec:?}")));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize + 1;
            // Round to 12 digits so 0.1 + 3 * 0.01 prints as 0.13.
            Ok((0..n)
                .map(|k| {
                    let v = a + k as f64 * h;
                    (v * 1e12).round() / 1e12
                })
                .collect())
        }
        [_] => spec.split(',').map(num).collect(),
        _ => Err(Error::Config(format!("bad grid {spec:?}"))),
    }
}

/// Runs `f(0..n)` on `workers` threads; results are in index order.
pub fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            Err(e) => {
                log::warn!("thread pool unavailable ({e}); running sequentially");
                (0..n).map(f).collect()
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..n).map(f).collect()
    }
}

fn comment(cfg: &RunConfig, extra: &str) -> String {
    let mut s = format!("kerr-ion {}\n", env!("CARGO_PKG_VERSION"));
    s.push_str(extra);
    s.push_str(&cfg.to_ini());
    s
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `manifest.txt` listing the produced files and the configuration.
pub fn write_manifest(dir: &Path, command: &str, files: &[PathBuf], cfg: &RunConfig) -> Result<PathBuf> {
    let mut s = format!("# kerr-ion {} {command}\n[files]\n", env!("CARGO_PKG_VERSION"));
    for f in files {
        let name = f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into());
        let _ = writeln!(s, "{name}");
    }
    s.push_str("[config]\n");
    s.push_str(&cfg.to_ini());
    let path = dir.join("manifest.txt");
    std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Predicted cat time in us for a configuration.
pub fn predicted_cat_time(cfg: &RunConfig) -> Result<f64> {
    time_for_tau(cfg.eta, cfg.rabi(), PI)
}

/// Sets up the simulation and the calibrated frame for `cfg`.
pub fn prepare(cfg: &RunConfig) -> Result<(Simulation, FrameConvention)> {
    cfg.validate()?;
    let p = cfg.trap_params();
    let sim = Simulation::new(p, cfg.spin, cfg.grid()?, cfg.policy()?)?;
    let frame = if p.rabi > 0.0 {
        sim.calibrate()?
    } else {
        FrameConvention::predicted(&p, cfg.spin)
    };
    if frame.kerr_sign() != FrameConvention::predicted(&p, cfg.spin).kerr_sign() {
        log::warn!("calibrated Kerr sign differs from the diagonal prediction");
    }
    Ok((sim, frame.with_rotation(cfg.frame)))
}

/// Calibrated propagation without file output.
pub fn simulate(cfg: &RunConfig, options: PropagateOptions) -> Result<Trajectory> {
    let (sim, frame) = prepare(cfg)?;
    sim.run(&frame, options)
}

#[derive(Debug, Clone)]
pub struct EvolutionOutput {
    pub trajectory: Trajectory,
    /// Best cat fidelity inside the window around the predicted cat time,
    /// when the run reaches it.
    pub peak: Option<CatPeak>,
    pub files: Vec<PathBuf>,
}

pub fn write_trajectory(traj: &Trajectory, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let extra = format!("kerr_sign = {}\n", traj.frame.kerr_sign());
    let header = comment(cfg, &extra);
    let path = dir.join("trajectory.csv");
    write_table(
        &path,
        &header,
        TRAJECTORY_HEADER,
        traj.samples.iter().map(|s| {
            vec![
                Cell::from(s.t),
                Cell::from(s.tau_eff),
                Cell::from(s.moments.mean_x),
                Cell::from(s.moments.mean_y),
                Cell::from(s.moments.var_x),
                Cell::from(s.moments.var_y),
                Cell::from(s.fidelity),
                Cell::from(s.purity),
                Cell::from(s.p_excited),
            ]
        }),
    )?;
    let pops = dir.join("phonon_populations.csv");
    write_table(
        &pops,
        &header,
        POPULATIONS_HEADER,
        traj.samples.iter().flat_map(|s| {
            s.phonon_populations
                .iter()
                .enumerate()
                .map(move |(n, &p)| vec![Cell::from(s.t), Cell::from(n), Cell::from(p)])
        }),
    )?;
    Ok(vec![path, pops])
}

/// Calibrates, propagates and writes `trajectory.csv`,
/// `phonon_populations.csv` and `manifest.txt` under the output directory.
pub fn run_evolution(cfg: &RunConfig) -> Result<EvolutionOutput> {
    let trajectory = simulate(cfg, PropagateOptions::default())?;
    let peak = if cfg.rabi_hz > 0.0 {
        let t_cat = predicted_cat_time(cfg)?;
        cat_peak(&trajectory, (CAT_WINDOW.0 * t_cat, CAT_WINDOW.1 * t_cat)).ok()
    } else {
        None
    };
    if let Some(pk) = peak {
        log::info!(
            "cat peak: fidelity {:.6} at {:.4} ms",
            pk.fidelity,
            pk.t_peak * 1e-3
        );
    }
    let mut files = write_trajectory(&trajectory, cfg, &cfg.output_dir)?;
    files.push(write_manifest(&cfg.output_dir, "evolve", &files, cfg)?);
    Ok(EvolutionOutput {
        trajectory,
        peak,
        files,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRabiRow {
    pub eta: f64,
    pub rabi_hz: f64,
    /// Peak time in ms; NaN when the point failed.
    pub t_cat_ms: f64,
    pub t_pred_ms: f64,
    pub fidelity: f64,
}

/// Cat peak for one (eta, Omega) point of a sweep.
pub fn cat_point(cfg: &RunConfig) -> Result<CatPeak> {
    let t_pred = predicted_cat_time(cfg)?;
    let window = (CAT_WINDOW.0 * t_pred, CAT_WINDOW.1 * t_pred);
    let point = RunConfig {
        t_total_ms: window.1 * 1e-3,
        ..cfg.clone()
    };
    let sim = Simulation::new(point.trap_params(), point.spin, point.grid()?, point.policy()?)?;
    let interval = (window.1 - window.0) / SWEEP_SCAN_POINTS as f64;
    let scan = sim.cat_scan(window, interval)?;
    scan_peak(&scan).ok_or(Error::EmptyWindow {
        start: window.0,
        end: window.1,
    })
}

/// Cat fidelity versus Rabi frequency for each eta. Failed points are
/// reported with NaN entries.
pub fn sweep_rabi(etas: &[f64], rabis_hz: &[f64], base: &RunConfig) -> Result<Vec<SweepRabiRow>> {
    if etas.is_empty() || rabis_hz.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let points: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|&e| rabis_hz.iter().map(move |&r| (e, r)))
        .collect();
    let rows = run_indexed(points.len(), base.resolved_workers(), |i| {
        let (eta, rabi_hz) = points[i];
        let cfg = RunConfig {
            eta,
            rabi_hz,
            ..base.clone()
        };
        let t_pred_ms = predicted_cat_time(&cfg).map_or(f64::NAN, |t| t * 1e-3);
        let (t_cat_ms, fidelity) = match cat_point(&cfg) {
            Ok(pk) => (pk.t_peak * 1e-3, pk.fidelity),
            Err(e) => {
                log::warn!("sweep point eta={eta} rabi={rabi_hz} Hz failed: {e}");
                (f64::NAN, f64::NAN)
            }
        };
        SweepRabiRow {
            eta,
            rabi_hz,
            t_cat_ms,
            t_pred_ms,
            fidelity,
        }
    });
    Ok(rows)
}

pub fn write_sweep_rabi(rows: &[SweepRabiRow], cfg: &RunConfig, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    write_table(
        path,
        &comment(cfg, "sweep = rabi\n"),
        SWEEP_RABI_HEADER,
        rows.iter().map(|r| {
            vec![
                Cell::from(r.eta),
                Cell::from(r.rabi_hz),
                Cell::from(r.t_cat_ms),
                Cell::from(r.t_pred_ms),
                Cell::from(r.fidelity),
            ]
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeFlag {
    Ok,
    /// Omega/omega above [`MAX_RABI_OVER_TRAP`]; not simulated.
    InvalidRegime,
    Failed,
}

impl RegimeFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeFlag::Ok => "ok",
            RegimeFlag::InvalidRegime => "invalid_regime",
            RegimeFlag::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEtaRow {
    pub eta: f64,
    pub rabi_hz: f64,
    pub rabi_over_trap: f64,
    pub fidelity: f64,
    pub flag: RegimeFlag,
}

/// Rabi frequency (Hz) that reaches tau = pi at `t_ms`.
pub fn rabi_hz_for_cat(eta: f64, t_ms: f64) -> Result<f64> {
    Ok(hz_from_angular(rabi_for_tau(eta, PI, t_ms * 1e3)?))
}

/// Cat fidelity at `t_ms` (fitted rotating frame).
pub fn fixed_time_fidelity(cfg: &RunConfig, t_ms: f64) -> Result<f64> {
    let point = RunConfig {
        t_total_ms: t_ms,
        ..cfg.clone()
    };
    let p = point.trap_params();
    let sim = Simulation::new(p, point.spin, point.grid()?, point.policy()?)?;
    let end = sim.state_at(&sim.initial_state()?, t_ms * 1e3)?;
    let cat = kerr_state(KerrParams::new(p.alpha, PI), sim.policy())?;
    let fit = crate::dynamics::best_rotation(&cat, &partial_trace_spin(&end))?;
    Ok(fit.fidelity)
}

/// For each eta, solves Omega from tau(t_fixed) = pi and records the cat
/// fidelity at t_fixed.
pub fn sweep_eta_fixed_time(etas: &[f64], t_fixed_ms: f64, base: &RunConfig) -> Result<Vec<SweepEtaRow>> {
    if etas.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    if !(t_fixed_ms > 0.0) {
        return Err(Error::Config(format!("fixed time {t_fixed_ms} ms")));
    }
    let rows = run_indexed(etas.len(), base.resolved_workers(), |i| {
        let eta = etas[i];
        let rabi_hz = rabi_hz_for_cat(eta, t_fixed_ms).unwrap_or(f64::NAN);
        let rabi_over_trap = rabi_hz / base.trap_freq_hz;
        let mut row = SweepEtaRow {
            eta,
            rabi_hz,
            rabi_over_trap,
            fidelity: f64::NAN,
            flag: RegimeFlag::Ok,
        };
        if !(rabi_over_trap <= MAX_RABI_OVER_TRAP) {
            row.flag = RegimeFlag::InvalidRegime;
            return row;
        }
        let cfg = RunConfig {
            eta,
            rabi_hz,
            ..base.clone()
        };
        match fixed_time_fidelity(&cfg, t_fixed_ms) {
            Ok(f) => row.fidelity = f,
            Err(e) => {
                log::warn!("sweep point eta={eta} failed: {e}");
                row.flag = RegimeFlag::Failed;
            }
        }
        row
    });
    Ok(rows)
}

pub fn write_sweep_eta(rows: &[SweepEtaRow], t_fixed_ms: f64, cfg: &RunConfig, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    write_table(
        path,
        &comment(cfg, &format!("sweep = eta\nt_fixed_ms = {t_fixed_ms}\n")),
        SWEEP_ETA_HEADER,
        rows.iter().map(|r| {
            vec![
                Cell::from(r.eta),
                Cell::from(r.rabi_hz),
                Cell::from(r.rabi_over_trap),
                Cell::from(r.fidelity),
                Cell::from(r.flag.as_str()),
            ]
        }),
    )
}

/// Best row of a fixed-time sweep.
pub fn sweep_eta_optimum(rows: &[SweepEtaRow]) -> Option<SweepEtaRow> {
    rows.iter()
        .filter(|r| r.flag == RegimeFlag::Ok && r.fidelity.is_finite())
        .fold(None, |best: Option<SweepEtaRow>, r| match best {
            Some(b) if b.fidelity >= r.fidelity => Some(b),
            _ => Some(*r),
        })
}

pub fn write_wigner(grid: &WignerGrid, comment: &str, path: &Path) -> Result<()> {
    let rows = grid.y_axis.iter().enumerate().flat_map(|(iy, &y)| {
        grid.x_axis
            .iter()
            .enumerate()
            .map(move |(ix, &x)| vec![Cell::from(x), Cell::from(y), Cell::from(grid.get(ix, iy))])
    });
    write_table(path, comment, WIGNER_HEADER, rows)
}

/// Default Wigner snapshots of the ideal evolution.
pub const IDEAL_SNAPSHOTS: [f64; 3] = [PI / 5.0, 2.0 * PI / 3.0, PI];

/// Moments over one Kerr period plus Wigner snapshots of the ideal state.
pub fn run_ideal(
    alpha: C64,
    taus: &[f64],
    spec: &WignerSpec,
    policy: &TruncationPolicy,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let grid: Vec<f64> = (0..=360).map(|k| 2.0 * PI * k as f64 / 360.0).collect();
    let traj = moment_trajectory(alpha, &grid, policy)?;
    let head = format!(
        "kerr-ion {}\nalpha_re = {}\nalpha_im = {}\nn_max = {}\n",
        env!("CARGO_PKG_VERSION"),
        alpha.re,
        alpha.im,
        policy.n_max()
    );
    let moments = dir.join("moments.csv");
    write_table(
        &moments,
        &head,
        MOMENTS_HEADER,
        traj.iter().map(|(tau, m)| {
            vec![
                Cell::from(*tau),
                Cell::from(m.mean_x),
                Cell::from(m.mean_y),
                Cell::from(m.var_x),
                Cell::from(m.var_y),
            ]
        }),
    )?;
    let mut files = vec![moments];
    for (k, &tau) in taus.iter().enumerate() {
        let rho = kerr_state(KerrParams::new(alpha, tau), policy)?.density();
        let w = wigner_function(&rho, spec)?;
        let rep = negativity_metrics(&w)?;
        let path = dir.join(format!("wigner_tau_{k}.csv"));
        let note = format!(
            "{head}tau = {tau}\nw_min = {}\nw_max = {}\nnegativity_ratio = {}\n",
            rep.w_min, rep.w_max, rep.ratio
        );
        write_wigner(&w, &note, &path)?;
        files.push(path);
    }
    Ok(files)
}

/// First time on a grid of step `interval` (us, up to `horizon`) at which
/// the reduced motional Wigner function dips below
/// `-NEGATIVITY_THRESHOLD * w_max`.
pub fn negativity_onset(
    sim: &Simulation,
    interval: f64,
    horizon: f64,
    spec: &WignerSpec,
) -> Result<Option<f64>> {
    let n = (horizon / interval).round() as usize;
    let times: Vec<f64> = (1..=n).map(|k| k as f64 * interval).collect();
    let states = sim.states_at(&sim.initial_state()?, &times)?;
    for (t, state) in times.iter().zip(&states) {
        let w = wigner_function(&partial_trace_spin(state), spec)?;
        let rep = negativity_metrics(&w)?;
        if rep.w_min < -NEGATIVITY_THRESHOLD * rep.w_max {
            return Ok(Some(*t));
        }
    }
    Ok(None)
}
