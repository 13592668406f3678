//! Self-check suite behind the `validate` command.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::{format_sig, read_table, write_table, Cell};
use crate::analysis::{wigner_function, WignerSpec};
use crate::dynamics::{
    best_rotation, full_hamiltonian, propagate_effective, SimulationGrid, Simulation,
    SpinPreparation, TrapParams,
};
use crate::fock::{
    annihilation, choose_truncation, coherent_state, displacement_operator, fidelity_pure,
    matrix_exponential, partial_trace_spin, poisson_tail, MotionalState, SpinMotionState,
    TruncationPolicy,
};
use crate::kerr::{analytic_cat, kerr_state, quadrature_moments, time_for_tau, KerrParams};
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value against its bound.
    pub detail: String,
}

fn check(module: &'static str, name: &'static str, worst: f64, bound: f64) -> Check {
    Check {
        module,
        name,
        passed: worst <= bound,
        detail: format!("{} <= {}", format_sig(worst), format_sig(bound)),
    }
}

fn failed(module: &'static str, name: &'static str, err: crate::Error) -> Check {
    Check {
        module,
        name,
        passed: false,
        detail: err.to_string(),
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn fock_checks(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = DMatrix::from_fn(6, 6, |_, _| random_complex(rng));
        let skew = (&m - m.adjoint()).map(|z| z * 0.5);
        let u = matrix_exponential(&skew)?;
        let inv = matrix_exponential(&(-&skew))?;
        worst = worst.max(max_abs(&(&u * inv - DMatrix::identity(6, 6))));
        worst = worst.max(max_abs(&(u.adjoint() * &u - DMatrix::identity(6, 6))));
    }
    out.push(check("fock", "expm(m) expm(-m) = I, unitary", worst, 1e-10));

    let pol = choose_truncation(C64::new(2.0, 0.0), 1e-12)?;
    let coh = coherent_state(C64::new(2.0, 0.0), &pol)?;
    let oracle = MotionalState::from_unnormalized(DVector::from_fn(pol.dim(), |n, _| {
        let ln = n as f64 * 2f64.ln() - 2.0 - 0.5 * (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
        C64::new(ln.exp(), 0.0)
    }))?;
    out.push(check(
        "fock",
        "coherent state vs Poisson oracle",
        1.0 - fidelity_pure(&coh, &oracle)?,
        1e-12,
    ));
    out.push(check(
        "fock",
        "tail bound of the chosen cutoff",
        poisson_tail(4.0, pol.n_max()),
        pol.tail_epsilon(),
    ));

    let big = TruncationPolicy::fixed(40)?;
    let d = displacement_operator(C64::new(0.3, -0.5), &big)?;
    let safe = 40 - (4.0 * 0.34f64.sqrt() * 40f64.sqrt()).ceil() as usize;
    let block = d.view((0, 0), (41, safe)).into_owned();
    let gram = block.adjoint() * &block - DMatrix::identity(safe, safe);
    out.push(check("fock", "displacement unitary on safe subspace", max_abs(&gram), 1e-9));

    let a = annihilation(big.dim());
    let comm = &a * a.adjoint() - a.adjoint() * &a;
    let mut dev = 0.0f64;
    for i in 0..big.dim() - 1 {
        dev = dev.max((comm[(i, i)] - C64::new(1.0, 0.0)).norm());
    }
    out.push(check("fock", "[a, a^dag] = 1 below the cutoff", dev, 1e-12));

    let (mut purity_low, mut herm) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let v = DVector::from_fn(2 * 6, |_, _| random_complex(rng));
        let v = v.unscale(v.norm());
        let rho = partial_trace_spin(&SpinMotionState::new(v)?);
        rho.validate()?;
        let p = rho.purity();
        purity_low = purity_low.max((0.5 - p).max(p - 1.0));
        herm = herm.max(max_abs(&(rho.matrix() - rho.matrix().adjoint())));
    }
    out.push(check("fock", "partial trace: valid density, purity in [1/2, 1]", purity_low.max(herm), 1e-10));
    Ok(out)
}

fn kerr_checks(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let (mut rec, mut pops, mut cat, mut unc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &a in &[0.5, 1.0, 2.0, 3.0] {
        let pol = choose_truncation(C64::new(a, 0.0), 1e-12)?;
        let alpha = C64::new(a, 0.0);
        cat = cat.max(1.0 - fidelity_pure(&analytic_cat(alpha, &pol)?, &kerr_state(KerrParams::new(alpha, PI), &pol)?)?);
        for _ in 0..10 {
            let alpha = C64::from_polar(a, rng.random_range(0.0..2.0 * PI));
            let tau = rng.random_range(-10.0..10.0);
            let s = kerr_state(KerrParams::new(alpha, tau), &pol)?;
            let s2 = kerr_state(KerrParams::new(alpha, tau + 2.0 * PI), &pol)?;
            rec = rec.max(1.0 - fidelity_pure(&s, &s2)?);
            let c = coherent_state(alpha, &pol)?;
            for (p, q) in s.populations().iter().zip(c.populations()) {
                pops = pops.max((p - q).abs());
            }
            let m = quadrature_moments(&s);
            unc = unc.max(1.0 - m.var_x * m.var_y);
        }
    }
    out.push(check("kerr", "recurrence tau -> tau + 2pi", rec, 1e-12));
    out.push(check("kerr", "phonon distribution independent of tau", pops, 1e-12));
    out.push(check("kerr", "analytic cat equals tau = pi", cat, 1e-12));
    out.push(check("kerr", "uncertainty product >= 1", unc, 1e-6));
    Ok(out)
}

fn dynamics_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = TrapParams::reference();
    let pol = choose_truncation(p.alpha, 1e-12)?;
    let mut herm = 0.0f64;
    for &t in &[0.0, 0.05, 0.17, 1.3] {
        let h = full_hamiltonian(t, &p, &pol)?;
        herm = herm.max(max_abs(&(&h - h.adjoint())));
    }
    out.push(check("dynamics", "H(t) Hermitian", herm, 1e-12));

    let k = 33.0;
    let horizon = 30.0 * p.trap_period();
    let cached = Simulation::new(p, SpinPreparation::Plus, SimulationGrid::new(0.01, horizon, 1000, true)?, pol)?;
    let direct = Simulation::new(
        p,
        SpinPreparation::Plus,
        SimulationGrid::new(p.trap_period() / k, horizon, 1000, false)?,
        pol,
    )?;
    let init = cached.initial_state()?;
    let a = cached.state_at(&init, horizon)?;
    let b = direct.state_at(&init, horizon)?;
    out.push(check(
        "dynamics",
        "cached vs direct stepping over 10 us",
        1.0 - a.amplitudes().dotc(b.amplitudes()).norm_sqr(),
        1e-10,
    ));
    out.push(check("dynamics", "norm after 10 us", (a.norm_sqr() - 1.0).abs(), 1e-9));

    let small = TrapParams { eta: 0.05, ..p };
    let t = time_for_tau(small.eta, small.rabi, 0.1)?;
    let sim = Simulation::new(small, SpinPreparation::Plus, SimulationGrid::new(0.01, t, 1, true)?, pol)?;
    let full = partial_trace_spin(&sim.state_at(&init, t)?);
    let t_end = (t / sim.dt()).round() * sim.dt();
    let eff = partial_trace_spin(&propagate_effective(&init, &small, &pol, t_end)?);
    let (_, v) = eff.eigen();
    let top = MotionalState::new(v.column(v.ncols() - 1).into_owned())?;
    out.push(check(
        "dynamics",
        "full vs effective at eta = 0.05, tau = 0.1",
        1.0 - best_rotation(&top, &full)?.fidelity,
        1e-4,
    ));
    Ok(out)
}

fn analysis_checks(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let vac = MotionalState::fock(0, &TruncationPolicy::fixed(4)?)?.density();
    let w0 = wigner_function(&vac, &WignerSpec::square(0.0, 1))?;
    out.push(check("analysis", "vacuum W(0,0) = 1/2pi", (w0.get(0, 0) - 1.0 / (2.0 * PI)).abs(), 1e-6));

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let alpha = C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..2.0 * PI));
        let pol = choose_truncation(alpha, 1e-12)?;
        let rho = kerr_state(KerrParams::new(alpha, rng.random_range(0.0..2.0 * PI)), &pol)?.density();
        let g = wigner_function(&rho, &WignerSpec::square(9.0, 73))?;
        worst = worst.max((g.integral() - 1.0).abs());
    }
    out.push(check("analysis", "unit integral for random Kerr states", worst, 0.02));

    let pol = choose_truncation(C64::new(2.0, 0.0), 1e-12)?;
    let a = kerr_state(KerrParams::new(C64::new(2.0, 0.0), 0.7), &pol)?.density();
    let b = MotionalState::fock(2, &pol)?.density();
    let spec = WignerSpec::square(4.0, 33);
    let wa = wigner_function(&a, &spec)?.values;
    let wb = wigner_function(&b, &spec)?.values;
    let wm = wigner_function(&a.mix(&b, 0.4)?, &spec)?.values;
    out.push(check("analysis", "linear in rho", (wm - (wa * 0.4 + wb * 0.6)).abs().max(), 1e-10));
    Ok(out)
}

fn harness_checks() -> Result<Vec<Check>> {
    let dir = std::env::temp_dir().join(format!("kerr-ion-validate-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
    let path = dir.join("round_trip.csv");
    let values = [0.1, -1.0 / 3.0, 12500.0, 1.5e-9, PI];
    write_table(&path, "check", &["v"], values.iter().map(|&v| vec![Cell::from(v)]))?;
    let back = read_table(&path)?.numbers("v")?;
    let _ = std::fs::remove_dir_all(&dir);
    let worst = values
        .iter()
        .zip(&back)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    Ok(vec![check("harness", "CSV round trip at 12 digits", worst, 1e-11)])
}

/// Runs every check; a check that errors is reported as failed.
pub fn run_validation() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    let mut push = |module: &'static str, r: Result<Vec<Check>>| match r {
        Ok(c) => out.extend(c),
        Err(e) => out.push(failed(module, "suite aborted", e)),
    };
    push("fock", fock_checks(&mut rng));
    push("kerr", kerr_checks(&mut rng));
    push("dynamics", dynamics_checks());
    push("analysis", analysis_checks(&mut rng));
    push("harness", harness_checks());
    out
}

/// Plain-text table of the checks.
pub fn render_checks(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{:<4}  {:<9} {:<width$}  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.module,
            c.name,
            c.detail
        ));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    s.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    s
}
