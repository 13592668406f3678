use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Tolerance on |norm^2 - 1| for every constructed or propagated state.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Highest retained Fock state together with the admissible initial-state
/// population above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    n_max: usize,
    tail_epsilon: f64,
}

impl TruncationPolicy {
    pub fn new(n_max: usize, tail_epsilon: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(tail_epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail_epsilon must be positive, got {tail_epsilon}"
            )));
        }
        Ok(Self {
            n_max,
            tail_epsilon,
        })
    }

    /// Fixed cutoff that tolerates a tail up to the state norm tolerance.
    pub fn fixed(n_max: usize) -> Result<Self> {
        Self::new(n_max, NORM_TOLERANCE)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_epsilon(&self) -> f64 {
        self.tail_epsilon
    }

    /// Number of retained Fock states.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Same tail bound, cutoff raised to `n_max`.
    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self {
            n_max: n_max.max(self.n_max),
            tail_epsilon: self.tail_epsilon,
        }
    }

    pub(crate) fn admit(&self, alpha: C64) -> Result<()> {
        let mean = alpha.norm_sqr();
        let tail = poisson_tail(mean, self.n_max);
        if tail > self.tail_epsilon {
            return Err(Error::TailViolation {
                mean,
                n_max: self.n_max,
                tail,
                epsilon: self.tail_epsilon,
            });
        }
        Ok(())
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Poisson(mean) probability mass strictly above `n_max`, summed term by term
/// (no `1 - cdf` cancellation).
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut k = n_max + 1;
    let mut term = (k as f64 * mean.ln() - mean - ln_factorial(k)).exp();
    let mut sum = 0.0;
    loop {
        sum += term;
        k += 1;
        term *= mean / k as f64;
        if k as f64 > mean && term <= sum * 1e-18 {
            break;
        }
        if term == 0.0 && k as f64 > mean {
            break;
        }
    }
    sum
}

/// Smallest cutoff whose Poisson(|alpha|^2) tail is at most `tail_epsilon`.
pub fn choose_truncation(alpha: C64, tail_epsilon: f64) -> Result<TruncationPolicy> {
    if !(tail_epsilon > 0.0 && tail_epsilon < 0.1) {
        return Err(Error::InvalidParameter(format!(
            "tail_epsilon must lie in (0, 0.1), got {tail_epsilon}"
        )));
    }
    let mean = alpha.norm_sqr();
    let mut n_max = 1;
    while poisson_tail(mean, n_max) > tail_epsilon {
        n_max += 1;
    }
    TruncationPolicy::new(n_max, tail_epsilon)
}

/// Rotates the global phase so the first non-negligible amplitude is real
/// and positive.
pub(crate) fn fix_global_phase(v: &mut DVector<C64>) {
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-300).copied() {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

fn normalize(mut v: DVector<C64>) -> Result<DVector<C64>> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::NotNormalized(norm * norm));
    }
    v /= C64::new(norm, 0.0);
    Ok(v)
}

fn check_norm(v: &DVector<C64>) -> Result<()> {
    let n2 = v.norm_squared();
    if (n2 - 1.0).abs() > NORM_TOLERANCE || !n2.is_finite() {
        return Err(Error::NotNormalized(n2));
    }
    Ok(())
}

/// Pure motional state over the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionalState {
    amplitudes: DVector<C64>,
}

impl MotionalState {
    /// Wraps an already normalized amplitude vector.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        check_norm(&amplitudes)?;
        Ok(Self { amplitudes })
    }

    /// Normalizes and phase-fixes an arbitrary nonzero amplitude vector.
    pub fn from_unnormalized(amplitudes: DVector<C64>) -> Result<Self> {
        let mut amplitudes = normalize(amplitudes)?;
        fix_global_phase(&mut amplitudes);
        Ok(Self { amplitudes })
    }

    pub fn fock(n: usize, policy: &TruncationPolicy) -> Result<Self> {
        if n > policy.n_max() {
            return Err(Error::InvalidParameter(format!(
                "Fock state {n} above cutoff {}",
                policy.n_max()
            )));
        }
        let mut v = DVector::zeros(policy.dim());
        v[n] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn mean_phonon(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.norm_sqr())
            .sum()
    }

    /// Applies `exp(i theta n)` (a phase-space rotation).
    pub fn rotated(&self, theta: f64) -> Self {
        let amplitudes = DVector::from_iterator(
            self.dim(),
            self.amplitudes
                .iter()
                .enumerate()
                .map(|(n, z)| z * C64::from_polar(1.0, theta * n as f64)),
        );
        Self { amplitudes }
    }

    /// Zero-pads into a larger truncation.
    pub fn embedded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: dim,
            });
        }
        let mut v = DVector::zeros(dim);
        v.rows_mut(0, self.dim()).copy_from(&self.amplitudes);
        Ok(Self { amplitudes: v })
    }

    pub fn density(&self) -> MotionalDensity {
        MotionalDensity {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Unnormalized coherent-state coefficients e^{-|a|^2/2} a^n / sqrt(n!) for n <= n_max.
pub(crate) fn coherent_coefficients(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = c;
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        v[n] = c;
    }
    v
}

pub fn coherent_state(alpha: C64, policy: &TruncationPolicy) -> Result<MotionalState> {
    policy.admit(alpha)?;
    MotionalState::from_unnormalized(coherent_coefficients(alpha, policy.dim()))
}

/// Internal (electronic) two-level state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Ground,
    Excited,
}

/// Amplitudes over {g, e} x Fock, ordered (g,0), (g,1), ..., (e,0), (e,1), ...
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMotionState {
    amplitudes: DVector<C64>,
}

impl SpinMotionState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() % 2 != 0 || amplitudes.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "spin-motion vector length {} is not 2(n_max+1)",
                amplitudes.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(Self { amplitudes })
    }

    /// `(g_amp |g> + e_amp |e>) (x) motion`, normalized over the spin part.
    pub fn product(ground: C64, excited: C64, motion: &MotionalState) -> Result<Self> {
        let s = (ground.norm_sqr() + excited.norm_sqr()).sqrt();
        if !(s > 0.0) {
            return Err(Error::InvalidParameter("zero spin amplitude".into()));
        }
        let d = motion.dim();
        let mut v = DVector::zeros(2 * d);
        for n in 0..d {
            v[n] = ground / s * motion.amplitudes[n];
            v[d + n] = excited / s * motion.amplitudes[n];
        }
        Self::new(v)
    }

    pub(crate) fn from_raw(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn motion_dim(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Amplitude of `|spin, n>`.
    pub fn amplitude(&self, spin: Spin, n: usize) -> C64 {
        match spin {
            Spin::Ground => self.amplitudes[n],
            Spin::Excited => self.amplitudes[self.motion_dim() + n],
        }
    }
}

/// Reduced density operator of the motion.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionalDensity {
    matrix: DMatrix<C64>,
}

impl MotionalDensity {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Uniform mixture of the first `d` Fock states inside a `dim`-dimensional truncation.
    pub fn maximally_mixed(d: usize, dim: usize) -> Result<Self> {
        if d == 0 || d > dim {
            return Err(Error::InvalidParameter(format!(
                "cannot mix {d} states in dimension {dim}"
            )));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..d {
            m[(k, k)] = C64::new(1.0 / d as f64, 0.0);
        }
        Ok(Self { matrix: m })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues (ascending) and eigenvectors of the Hermitian matrix.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            eig.eigenvectors[(i, order[j])]
        });
        (values, vectors)
    }

    pub fn validate(&self) -> Result<()> {
        let (r, c) = self.matrix.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let herm = (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let (values, _) = self.eigen();
        if let Some(&min) = values.first() {
            if min < -1e-10 {
                return Err(Error::InvalidDensity(format!("eigenvalue {min:e}")));
            }
        }
        Ok(())
    }

    /// Zero-pads into a larger truncation.
    pub fn embedded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: dim,
            });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.matrix);
        Ok(Self { matrix: m })
    }

    /// Convex combination `w rho + (1 - w) other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self {
            matrix: self.matrix.map(|z| z * w) + other.matrix.map(|z| z * (1.0 - w)),
        })
    }
}

/// |<psi|phi>|^2.
pub fn fidelity_pure(psi: &MotionalState, phi: &MotionalState) -> Result<f64> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: phi.dim(),
        });
    }
    Ok(psi.amplitudes.dotc(&phi.amplitudes).norm_sqr())
}

/// <psi|rho|psi>.
pub fn fidelity_vs_density(psi: &MotionalState, rho: &MotionalDensity) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: rho.dim(),
        });
    }
    let v = &rho.matrix * &psi.amplitudes;
    Ok(psi.amplitudes.dotc(&v).re)
}

/// Traces out the internal state.
pub fn partial_trace_spin(state: &SpinMotionState) -> MotionalDensity {
    let d = state.motion_dim();
    let g = state.amplitudes.rows(0, d);
    let e = state.amplitudes.rows(d, d);
    MotionalDensity {
        matrix: g * g.adjoint() + e * e.adjoint(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poisson_pmf(mean: f64, k: usize) -> f64 {
        (k as f64 * mean.ln() - mean - ln_factorial(k)).exp()
    }

    #[test]
    fn vacuum_truncation() {
        let p = choose_truncation(C64::new(0.0, 0.0), 1e-14).unwrap();
        assert_eq!(p.n_max(), 1);
    }

    #[test]
    fn truncation_is_minimal_against_brute_force_tail() {
        for &(alpha, eps) in &[(2.0, 1e-9), (2.0, 1e-12), (1.0, 1e-6), (3.0, 1e-12)] {
            let p = choose_truncation(C64::new(alpha, 0.0), eps).unwrap();
            // Oracle: sum the pmf above the cutoff well into the negligible range.
            let tail = |n_max: usize| -> f64 {
                (n_max + 1..n_max + 400).map(|k| poisson_pmf(alpha * alpha, k)).sum()
            };
            assert!(tail(p.n_max()) <= eps);
            assert!(tail(p.n_max() - 1) > eps);
        }
    }

    #[test]
    fn alpha2_tail_at_21_is_far_above_1e19() {
        let tail = poisson_tail(4.0, 21);
        let oracle: f64 = (22..300).map(|k| poisson_pmf(4.0, k)).sum();
        assert!((tail - oracle).abs() < 1e-12 * oracle);
        assert!(tail > 2e-10 && tail < 4e-10, "tail {tail:e}");
        let p = choose_truncation(C64::new(2.0, 0.0), 1e-9).unwrap();
        assert_eq!(p.n_max(), 21);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(choose_truncation(C64::new(1.0, 0.0), 0.0).is_err());
        assert!(choose_truncation(C64::new(1.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn coherent_vacuum_and_alpha2() {
        let p = TruncationPolicy::new(30, 1e-12).unwrap();
        let vac = coherent_state(C64::new(0.0, 0.0), &p).unwrap();
        assert_eq!(vac.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(vac.amplitudes().iter().skip(1).all(|z| z.norm() == 0.0));

        let raw = coherent_coefficients(C64::new(2.0, 0.0), p.dim());
        assert!((raw[0].re - (-2.0f64).exp()).abs() < 1e-15);
        assert!((raw[0].re - 0.1353).abs() < 1e-4);

        let coh = coherent_state(C64::new(2.0, 0.0), &p).unwrap();
        assert!((coh.mean_phonon() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn coherent_rejects_tail_violation() {
        let p = TruncationPolicy::new(10, 1e-12).unwrap();
        assert!(matches!(
            coherent_state(C64::new(2.0, 0.0), &p),
            Err(Error::TailViolation { .. })
        ));
    }

    #[test]
    fn coherent_matches_poisson_amplitude_oracle() {
        let p = TruncationPolicy::new(40, 1e-12).unwrap();
        for &a in &[0.3, 1.0, 2.0, 3.0] {
            let alpha = C64::from_polar(a, 0.7);
            let coh = coherent_state(alpha, &p).unwrap();
            // Independent route: sqrt(Poisson pmf) with phase n*arg(alpha).
            let oracle = DVector::from_iterator(
                p.dim(),
                (0..p.dim()).map(|n| C64::from_polar(poisson_pmf(a * a, n).sqrt(), 0.7 * n as f64)),
            );
            let oracle = MotionalState::from_unnormalized(oracle).unwrap();
            assert!((fidelity_pure(&coh, &oracle).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelities() {
        let p = TruncationPolicy::new(40, 1e-12).unwrap();
        let f3 = MotionalState::fock(3, &p).unwrap();
        let f4 = MotionalState::fock(4, &p).unwrap();
        assert_eq!(fidelity_pure(&f3, &f3).unwrap(), 1.0);
        assert_eq!(fidelity_pure(&f3, &f4).unwrap(), 0.0);
        let plus = coherent_state(C64::new(2.0, 0.0), &p).unwrap();
        let minus = coherent_state(C64::new(-2.0, 0.0), &p).unwrap();
        let f = fidelity_pure(&plus, &minus).unwrap();
        assert!((f - (-16.0f64).exp()).abs() < 1e-12, "{f:e}");

        let q = TruncationPolicy::new(20, 1e-9).unwrap();
        let other = MotionalState::fock(1, &q).unwrap();
        assert!(fidelity_pure(&f3, &other).is_err());
    }

    #[test]
    fn density_fidelity() {
        let p = TruncationPolicy::new(16, 1e-12).unwrap();
        let psi = coherent_state(C64::new(0.8, 0.3), &p).unwrap();
        assert!((fidelity_vs_density(&psi, &psi.density()).unwrap() - 1.0).abs() < 1e-12);

        let mixed = MotionalDensity::maximally_mixed(5, p.dim()).unwrap();
        let supported = MotionalState::from_unnormalized(DVector::from_iterator(
            p.dim(),
            (0..p.dim()).map(|n| if n < 5 { C64::new(1.0, n as f64) } else { C64::new(0.0, 0.0) }),
        ))
        .unwrap();
        assert!((fidelity_vs_density(&supported, &mixed).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn density_fidelity_matches_eigendecomposition() {
        // rho from an entangled spin-motion state; <psi|rho|psi> must equal
        // sum_k p_k |<v_k|psi>|^2 over the eigendecomposition.
        let p = TruncationPolicy::new(20, 1e-12).unwrap();
        let a = coherent_state(C64::new(1.2, 0.0), &p).unwrap();
        let b = coherent_state(C64::new(0.0, 1.0), &p).unwrap();
        let d = p.dim();
        let mut v = DVector::zeros(2 * d);
        v.rows_mut(0, d).copy_from(&(a.amplitudes() * C64::new(0.9, 0.0)));
        v.rows_mut(d, d)
            .copy_from(&(b.amplitudes() * C64::new(0.0, (1.0f64 - 0.81).sqrt())));
        let state = SpinMotionState::new(v).unwrap();
        let rho = partial_trace_spin(&state);
        let (vals, vecs) = rho.eigen();
        let dominant = MotionalState::from_unnormalized(vecs.column(d - 1).into_owned()).unwrap();
        let oracle: f64 = (0..d)
            .map(|k| vals[k] * vecs.column(k).dotc(dominant.amplitudes()).norm_sqr())
            .sum();
        let f = fidelity_vs_density(&dominant, &rho).unwrap();
        assert!((f - oracle).abs() < 1e-12);
        assert!((f - vals[d - 1]).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let p = TruncationPolicy::new(25, 1e-12).unwrap();
        let coh = coherent_state(C64::new(2.0, 0.0), &p).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let prod = SpinMotionState::product(C64::new(s, 0.0), C64::new(s, 0.0), &coh).unwrap();
        let rho = partial_trace_spin(&prod);
        assert!((rho.purity() - 1.0).abs() < 1e-12);

        let mut v = DVector::zeros(2 * p.dim());
        v[0] = C64::new(s, 0.0);
        v[p.dim() + 1] = C64::new(s, 0.0);
        let ent = SpinMotionState::new(v).unwrap();
        let rho = partial_trace_spin(&ent);
        assert!((rho.purity() - 0.5).abs() < 1e-15);
        rho.validate().unwrap();
    }

    fn arb_spin_motion() -> impl Strategy<Value = SpinMotionState> {
        (2usize..12)
            .prop_flat_map(|d| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * d))
            .prop_filter_map("nonzero", |raw| {
                let v = DVector::from_iterator(raw.len(), raw.iter().map(|&(r, i)| C64::new(r, i)));
                let n = v.norm();
                (n > 1e-3).then(|| SpinMotionState::new(v / C64::new(n, 0.0)).unwrap())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn partial_trace_is_a_density(state in arb_spin_motion()) {
            let rho = partial_trace_spin(&state);
            prop_assert!(rho.validate().is_ok());
            let purity = rho.purity();
            prop_assert!(purity >= 0.5 - 1e-12 && purity <= 1.0 + 1e-12);
        }
    }
}
