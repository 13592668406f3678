//! Dense complex matrix exponential.
//!
//! Scaling and squaring with diagonal Padé approximants of degree 3, 5, 7, 9
//! or 13, choosing the lowest degree whose backward error bound holds for the
//! 1-norm of the input (Higham, SIAM J. Matrix Anal. Appl. 26, 2005).

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(m: &DMatrix<C64>, s: f64) -> DMatrix<C64> {
    m.map(|z| z * s)
}

/// `exp(m)` for a square complex matrix.
pub fn matrix_exponential(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter(
            "matrix exponential of non-finite input".into(),
        ));
    }
    let n = rows;
    if n == 0 {
        return Ok(m.clone());
    }
    let norm = norm1(m);
    for (theta, coeffs) in [
        (THETA3, &PADE3[..]),
        (THETA5, &PADE5[..]),
        (THETA7, &PADE7[..]),
        (THETA9, &PADE9[..]),
    ] {
        if norm <= theta {
            return Ok(pade_low(m, coeffs));
        }
    }

    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = scaled(m, 0.5f64.powi(squarings as i32));
    let mut r = pade13(&a);
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Padé approximant of degree `coeffs.len() - 1` (odd), no scaling.
fn pade_low(a: &DMatrix<C64>, b: &[f64]) -> DMatrix<C64> {
    let n = a.nrows();
    let eye = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    // Even powers a^0, a^2, a^4, ...
    let mut powers = vec![eye.clone()];
    let degree = b.len() - 1;
    for k in 1..=degree / 2 {
        let next = &powers[k - 1] * &a2;
        powers.push(next);
    }
    let mut u = DMatrix::<C64>::zeros(n, n);
    let mut v = DMatrix::<C64>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u += scaled(p, b[2 * k + 1]);
        v += scaled(p, b[2 * k]);
    }
    let u = a * u;
    solve_pade(&u, &v)
}

fn pade13(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let b = &PADE13;
    let eye = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = &a6 * inner_u
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(&eye, b[1]);
    let u = a * u;

    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&eye, b[0]);
    solve_pade(&u, &v)
}

/// Solves `(v - u) r = (v + u)`.
fn solve_pade(u: &DMatrix<C64>, v: &DMatrix<C64>) -> DMatrix<C64> {
    let p = v + u;
    let q = v - u;
    // q is well conditioned inside the Padé error bounds.
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular inside its error bound")
}
