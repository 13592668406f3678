use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::expm::matrix_exponential;
use super::state::TruncationPolicy;
use crate::{Result, C64};

/// Annihilation, creation and number operators on the truncated basis.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub a: DMatrix<C64>,
    pub a_dag: DMatrix<C64>,
    pub n_op: DMatrix<C64>,
}

pub fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn ladder_operators(policy: &TruncationPolicy) -> Ladder {
    let dim = policy.dim();
    let a = annihilation(dim);
    let a_dag = a.adjoint();
    let n_op = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|n| C64::new(n as f64, 0.0)),
    ));
    Ladder { a, a_dag, n_op }
}

fn generator(beta: C64, dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    a.adjoint().map(|z| z * beta) - a.map(|z| z * beta.conj())
}

/// D(beta) = exp(beta a^dag - beta^* a) built from the truncated generator.
pub fn displacement_operator(beta: C64, policy: &TruncationPolicy) -> Result<DMatrix<C64>> {
    matrix_exponential(&generator(beta, policy.dim()))
}

/// Spectral form of the truncated displacement generator.
///
/// With `X = a + a^dag = Q diag(l) Q^T` and `R(p) = exp(i p n)`,
/// `D(r e^{i phi}) = R(phi + pi/2) Q exp(-i r l) Q^T R(phi + pi/2)^dag`,
/// which is the exact exponential of the same truncated generator used by
/// [`displacement_operator`]. Applying it to a vector costs O(dim^2).
#[derive(Debug, Clone)]
pub struct DisplacementGenerator {
    q: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl DisplacementGenerator {
    pub fn new(dim: usize) -> Self {
        let mut x = DMatrix::<f64>::zeros(dim, dim);
        for n in 1..dim {
            let s = (n as f64).sqrt();
            x[(n - 1, n)] = s;
            x[(n, n - 1)] = s;
        }
        let eig = SymmetricEigen::new(x);
        Self {
            q: eig.eigenvectors,
            eigenvalues: eig.eigenvalues,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn rotate(v: &mut DVector<C64>, angle: f64) {
        for (n, z) in v.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, angle * n as f64);
        }
    }

    /// Returns `D(beta) v`.
    pub fn apply(&self, beta: C64, v: &DVector<C64>) -> DVector<C64> {
        let r = beta.norm();
        let psi = if r == 0.0 {
            0.0
        } else {
            beta.arg() + std::f64::consts::FRAC_PI_2
        };
        let mut w = v.clone();
        Self::rotate(&mut w, -psi);
        let mut coeffs = real_t_mul(&self.q, &w);
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, -r * self.eigenvalues[k]);
        }
        let mut out = real_mul(&self.q, &coeffs);
        Self::rotate(&mut out, psi);
        out
    }

    /// Dense `D(beta)`.
    pub fn matrix(&self, beta: C64) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = C64::new(1.0, 0.0);
            m.set_column(j, &self.apply(beta, &e));
        }
        m
    }
}

fn real_mul(q: &DMatrix<f64>, v: &DVector<C64>) -> DVector<C64> {
    let n = q.nrows();
    let mut out = DVector::zeros(n);
    for (j, z) in v.iter().enumerate() {
        let col = q.column(j);
        for i in 0..n {
            out[i] += z * col[i];
        }
    }
    out
}

fn real_t_mul(q: &DMatrix<f64>, v: &DVector<C64>) -> DVector<C64> {
    DVector::from_iterator(
        q.ncols(),
        q.column_iter().map(|col| {
            col.iter()
                .zip(v.iter())
                .fold(C64::new(0.0, 0.0), |acc, (&c, z)| acc + z * c)
        }),
    )
}
