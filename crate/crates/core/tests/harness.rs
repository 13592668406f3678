//! Sweeps, runs and CSV outputs through the public harness API.

use std::f64::consts::PI;
use std::sync::OnceLock;

use kerr_ion::harness::{
    parse_grid, rabi_hz_for_cat, read_table, run_evolution, run_ideal, sweep_eta_fixed_time,
    sweep_eta_optimum, sweep_rabi, write_sweep_eta, write_sweep_rabi, RegimeFlag, RunConfig, SweepRabiRow,
    MOMENTS_HEADER, POPULATIONS_HEADER, SWEEP_ETA_HEADER, SWEEP_RABI_HEADER, TRAJECTORY_HEADER,
    WIGNER_HEADER,
};
use kerr_ion::analysis::WignerSpec;
use kerr_ion::dynamics::FrameRotation;
use kerr_ion::fock::choose_truncation;
use kerr_ion::kerr::tau_effective;
use kerr_ion::{angular_from_hz, C64};

const SWEEP_RABIS: [f64; 3] = [50e3, 100e3, 200e3];

fn rabi_rows() -> &'static Vec<SweepRabiRow> {
    static ROWS: OnceLock<Vec<SweepRabiRow>> = OnceLock::new();
    ROWS.get_or_init(|| sweep_rabi(&[0.1, 0.2], &SWEEP_RABIS, &RunConfig::default()).unwrap())
}

#[test]
fn rabi_sweep_trend_and_timing() {
    let rows = rabi_rows();
    assert_eq!(rows.len(), 6);
    for r in rows.iter().filter(|r| r.eta == 0.1) {
        assert!((r.t_cat_ms / r.t_pred_ms - 1.0).abs() <= 0.05, "{r:?}");
    }
    // Fidelity rises as the drive gets weaker.
    for eta_rows in rows.chunks(SWEEP_RABIS.len()) {
        for w in eta_rows.windows(2) {
            assert!(w[0].fidelity > w[1].fidelity, "{:?} then {:?}", w[0], w[1]);
        }
    }
    let reference = rows.iter().find(|r| r.eta == 0.2 && r.rabi_hz == 100e3).unwrap();
    assert!((reference.fidelity - 0.985).abs() <= 0.01, "{reference:?}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep_rabi.csv");
    write_sweep_rabi(rows, &RunConfig::default(), &path).unwrap();
    let t = read_table(&path).unwrap();
    assert_eq!(t.header, SWEEP_RABI_HEADER);
    let back = t.numbers("t_cat_ms").unwrap();
    for (b, r) in back.iter().zip(rows.iter()) {
        assert!((b - r.t_cat_ms).abs() <= 1e-11 * r.t_cat_ms);
    }
}

/// Every row's peak should sit at tau_eff = pi +- 0.15. At eta = 0.2 the
/// exact carrier coupling e^{-eta^2/2} L_n(eta^2) has a Kerr curvature
/// about 7% below eta^4/4, so the peak lands near tau_eff = 3.37.
#[test]
fn rabi_sweep_peaks_at_predicted_tau() {
    let bad: Vec<String> = rabi_rows()
        .iter()
        .filter_map(|r| {
            let tau = tau_effective(r.eta, angular_from_hz(r.rabi_hz), r.t_cat_ms * 1e3).unwrap();
            ((tau - PI).abs() > 0.15).then(|| format!("eta {} rabi {} Hz: tau {tau:.4}", r.eta, r.rabi_hz))
        })
        .collect();
    assert!(bad.is_empty(), "peaks off tau = pi: {bad:?}");
}

#[test]
fn eta_sweep_rows_and_shape() {
    let dir = tempfile::tempdir().unwrap();
    let etas = parse_grid("0.10:0.24:0.01").unwrap();
    let rows = sweep_eta_fixed_time(&etas, 10.0, &RunConfig::default()).unwrap();
    assert_eq!(rows.len(), 15);
    assert_eq!(rows[0].flag, RegimeFlag::InvalidRegime);
    assert!(rows[0].fidelity.is_nan());
    for r in &rows {
        let expected = 4.0 * PI / (r.eta.powi(4) * 0.01) / (2.0 * PI);
        assert!((r.rabi_hz - expected).abs() <= 1e-9 * expected);
        assert_eq!(r.rabi_hz, rabi_hz_for_cat(r.eta, 10.0).unwrap());
    }
    // Above the optimum the fidelity falls monotonically.
    let best = sweep_eta_optimum(&rows).unwrap();
    let above: Vec<_> = rows.iter().filter(|r| r.eta >= best.eta).collect();
    assert!(above.len() > 3);
    for w in above.windows(2) {
        assert!(w[0].fidelity > w[1].fidelity);
    }

    let path = dir.path().join("sweep_eta.csv");
    write_sweep_eta(&rows, 10.0, &RunConfig::default(), &path).unwrap();
    let t = read_table(&path).unwrap();
    assert_eq!(t.header, SWEEP_ETA_HEADER);
    assert_eq!(t.texts("regime_flag").unwrap()[0], "invalid_regime");
    let back = t.numbers("rabi_hz").unwrap();
    for (b, r) in back.iter().zip(&rows) {
        assert!((b - r.rabi_hz).abs() <= 1e-11 * r.rabi_hz);
    }
}

#[test]
fn undriven_run_stays_at_unit_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        rabi_hz: 0.0,
        t_total_ms: 0.2,
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let out = run_evolution(&cfg).unwrap();
    assert!(out.trajectory.samples.len() > 10);
    for s in &out.trajectory.samples {
        assert!((s.fidelity - 1.0).abs() < 1e-9, "t = {}: {}", s.t, s.fidelity);
        assert!((s.purity - 1.0).abs() < 1e-9);
        assert_eq!(s.tau_eff, 0.0);
    }
    let t = read_table(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(t.header, TRAJECTORY_HEADER);
    let fid = t.numbers("fidelity").unwrap();
    assert!(fid.iter().all(|f| (f - 1.0).abs() < 1e-9));
    let pops = read_table(&dir.path().join("phonon_populations.csv")).unwrap();
    assert_eq!(pops.header, POPULATIONS_HEADER);
    assert!(dir.path().join("manifest.txt").exists());
}

#[test]
fn reference_prefix_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        t_total_ms: 1.0,
        record_interval_us: 50.0,
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    run_evolution(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(text.starts_with("# "));
    assert!(text.contains("eta = 0.2"));
    let t = read_table(&dir.path().join("trajectory.csv")).unwrap();
    let times = t.numbers("t_us").unwrap();
    assert_eq!(times.len(), 21);
    assert_eq!(times[0], 0.0);
    assert!((times[20] - 1000.0).abs() < 1e-6);
    let p_exc = t.numbers("p_excited").unwrap();
    assert!(p_exc.iter().all(|p| (p - 0.5).abs() < 0.02));
    for purity in t.numbers("purity").unwrap() {
        assert!(purity > 0.999);
    }
    let pops = read_table(&dir.path().join("phonon_populations.csv")).unwrap();
    let n = pops.numbers("n").unwrap();
    let prob = pops.numbers("probability").unwrap();
    let first_total: f64 = n
        .iter()
        .zip(&prob)
        .zip(pops.numbers("t_us").unwrap())
        .filter(|(_, t)| *t == 0.0)
        .map(|((_, p), _)| p)
        .sum();
    assert!((first_total - 1.0).abs() < 1e-9);
}

#[test]
fn frame_choice_matters_at_the_cat_point() {
    let dir = tempfile::tempdir().unwrap();
    let run = |frame| {
        let cfg = RunConfig {
            eta: 0.16,
            rabi_hz: rabi_hz_for_cat(0.16, 10.0).unwrap(),
            t_total_ms: 10.0,
            record_interval_us: 1000.0,
            frame,
            output_dir: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let out = run_evolution(&cfg).unwrap();
        out.trajectory.samples.last().unwrap().cat_fidelity
    };
    let fitted = run(FrameRotation::Fitted);
    let off = run(FrameRotation::Off);
    assert!(fitted >= 0.98, "{fitted}");
    assert!(off < 0.9, "{off}");
}

#[test]
fn ideal_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let alpha = C64::new(2.0, 0.0);
    let pol = choose_truncation(alpha, 1e-12).unwrap();
    let files = run_ideal(alpha, &[PI], &WignerSpec::square(6.0, 61), &pol, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let m = read_table(&dir.path().join("moments.csv")).unwrap();
    assert_eq!(m.header, MOMENTS_HEADER);
    let tau = m.numbers("tau").unwrap();
    let mx = m.numbers("mean_x").unwrap();
    let vx = m.numbers("var_x").unwrap();
    assert_eq!(tau[0], 0.0);
    assert!((mx[0] - 4.0).abs() < 1e-9 && (vx[0] - 1.0).abs() < 1e-9);
    assert!(m.numbers("mean_y").unwrap()[0].abs() < 1e-9);
    assert!((m.numbers("var_y").unwrap()[0] - 1.0).abs() < 1e-9);
    // Moments repeat after 2 pi.
    let last = tau.len() - 1;
    assert!((tau[last] - 2.0 * PI).abs() < 1e-9);
    assert!((mx[last] - mx[0]).abs() < 1e-9 && (vx[last] - vx[0]).abs() < 1e-9);

    let w = read_table(&dir.path().join("wigner_tau_0.csv")).unwrap();
    assert_eq!(w.header, WIGNER_HEADER);
    let values = w.numbers("w").unwrap();
    assert_eq!(values.len(), 61 * 61);
    assert!(values.iter().cloned().fold(f64::INFINITY, f64::min) < 0.0);
}
