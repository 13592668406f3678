use std::f64::consts::PI;

use kerr_ion_web::{cat_time_ms, creation_time_ms, kerr_moments, kerr_wigner, moment_curves, wigner_kerr};
use kerr_ion::C64;

#[test]
fn vacuum_map_is_a_centered_gaussian() {
    let w = kerr_wigner(C64::new(0.0, 0.0), 0.0, 3.0, 61).unwrap();
    assert_eq!(w.len(), 61 * 61);
    let centre = w[30 * 61 + 30];
    assert!((centre - 1.0 / (2.0 * PI)).abs() < 1e-9);
    let peak = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(peak, centre);
}

#[test]
fn rows_run_along_x() {
    // A coherent state displaced along +x peaks at x = 2 Re(alpha), y = 0.
    let n = 41;
    let w = wigner_kerr(1.0, 0.0, 0.0, 4.0, n).unwrap();
    let (imax, _) = w
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let (iy, ix) = (imax / n, imax % n);
    let x = -4.0 + 8.0 * ix as f64 / (n - 1) as f64;
    let y = -4.0 + 8.0 * iy as f64 / (n - 1) as f64;
    assert!((x - 2.0).abs() < 1e-12 && y.abs() < 1e-12, "peak at ({x}, {y})");
}

#[test]
fn cat_map_has_negative_fringes() {
    let w = wigner_kerr(2.0, 0.0, PI, 6.0, 81).unwrap();
    assert!(w.iter().any(|&v| v < -0.05));
}

#[test]
fn moments_start_coherent_and_repeat() {
    let m = moment_curves(2.0, 0.0, 73).unwrap();
    assert_eq!(m.len(), 73 * 5);
    for (a, b) in m[..5].iter().zip(&[0.0, 4.0, 0.0, 1.0, 1.0]) {
        assert!((a - b).abs() < 1e-9);
    }
    let last = &m[72 * 5..];
    assert!((last[0] - 2.0 * PI).abs() < 1e-12);
    for k in 1..5 {
        assert!((last[k] - m[k]).abs() < 1e-9);
    }
}

#[test]
fn creation_times() {
    assert!((cat_time_ms(0.1, 200.0, PI).unwrap() - 100.0).abs() < 1e-9);
    assert!((cat_time_ms(0.2, 100.0, PI).unwrap() - 12.5).abs() < 1e-9);
    assert!((cat_time_ms(0.2, 100.0, PI / 2.0).unwrap() - 6.25).abs() < 1e-9);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(kerr_wigner(C64::new(2.0, 0.0), 0.0, 6.0, 1).is_err());
    assert!(kerr_wigner(C64::new(2.0, 0.0), 0.0, 6.0, 10_000).is_err());
    assert!(kerr_wigner(C64::new(2.0, 0.0), 0.0, -1.0, 11).is_err());
    assert!(kerr_moments(C64::new(2.0, 0.0), 1).is_err());
    assert!(creation_time_ms(0.0, 100.0, PI).is_err());
}
