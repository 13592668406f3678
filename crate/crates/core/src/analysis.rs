//! Phase-space and population analysis of motional states.
//!
//! Conventions: X = a + a^dag, Y = -i(a - a^dag), so the vacuum has unit
//! quadrature variance. The Wigner function is evaluated with the
//! displaced-parity identity at beta = (x + iy)/2 and normalized to unit
//! integral over dx dy.

use nalgebra::{DMatrix, DVector};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::fock::{DisplacementGenerator, MotionalDensity, SpinMotionState};
use crate::{Error, Result, C64};

/// Spacing above which a grid is flagged as too coarse.
pub const MAX_GRID_SPACING: f64 = 0.25;

/// Eigencomponents of rho below this weight are skipped.
const WEIGHT_CUTOFF: f64 = 1e-14;

/// Rectangular phase-space grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl WignerSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            x_range: (-half_width, half_width),
            y_range: (-half_width, half_width),
            nx: points,
            ny: points,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok_range = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if self.nx == 0 || self.ny == 0 || !ok_range(self.x_range) || !ok_range(self.y_range) {
            return Err(Error::InvalidParameter(format!("Wigner grid {self:?}")));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![range.0];
        }
        let h = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|k| range.0 + k as f64 * h).collect()
    }

    pub fn x_axis(&self) -> Vec<f64> {
        Self::axis(self.x_range, self.nx)
    }

    pub fn y_axis(&self) -> Vec<f64> {
        Self::axis(self.y_range, self.ny)
    }
}

impl Default for WignerSpec {
    /// 121 x 121 over [-6, 6]^2.
    fn default() -> Self {
        Self::square(6.0, 121)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    /// `values[(iy, ix)]` = W(x_axis[ix], y_axis[iy]).
    pub values: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl WignerGrid {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[(iy, ix)]
    }

    fn spacing(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            0.0
        } else {
            axis[1] - axis[0]
        }
    }

    pub fn dx(&self) -> f64 {
        Self::spacing(&self.x_axis)
    }

    pub fn dy(&self) -> f64 {
        Self::spacing(&self.y_axis)
    }

    /// Riemann sum of W dx dy.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.dx() * self.dy()
    }
}

/// Fock dimension needed to displace a state supported on `support`
/// levels by up to `reach` without leaking out of the basis.
fn working_dimension(support: usize, reach: f64) -> usize {
    let s = (support as f64).sqrt() + reach;
    (s * s + 6.0 * s + 10.0).ceil() as usize
}

/// W(x, y) = (1/2pi) Tr[D(-beta) rho D(beta) P], P the parity operator.
///
/// rho is zero-padded to a working dimension large enough for the grid
/// corners; each eigencomponent is displaced through the spectral form of
/// the displacement generator.
pub fn wigner_function(rho: &MotionalDensity, spec: &WignerSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let x_axis = spec.x_axis();
    let y_axis = spec.y_axis();
    let reach = [spec.x_range.0, spec.x_range.1]
        .iter()
        .flat_map(|&x| [spec.y_range.0, spec.y_range.1].map(|y| (x * x + y * y).sqrt() / 2.0))
        .fold(0.0, f64::max);
    let support = rho.dim();
    let work = working_dimension(support, reach).max(support);
    let gen = DisplacementGenerator::new(work);

    let (weights, vectors) = rho.eigen();
    let components: Vec<(f64, DVector<C64>)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > WEIGHT_CUTOFF)
        .map(|(k, &w)| {
            let mut v = DVector::zeros(work);
            v.rows_mut(0, support).copy_from(&vectors.column(k));
            (w, v)
        })
        .collect();

    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    let point = |idx: usize| -> f64 {
        let (iy, ix) = (idx / spec.nx, idx % spec.nx);
        let beta = C64::new(x_axis[ix], y_axis[iy]) / 2.0;
        let mut w = 0.0;
        for (p, v) in &components {
            let d = gen.apply(-beta, v);
            let parity: f64 = d
                .iter()
                .enumerate()
                .map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
                .sum();
            w += p * parity;
        }
        norm * w
    };
    let total = spec.nx * spec.ny;
    #[cfg(feature = "parallel")]
    let flat: Vec<f64> = (0..total).into_par_iter().map(point).collect();
    #[cfg(not(feature = "parallel"))]
    let flat: Vec<f64> = (0..total).map(point).collect();
    let values = DMatrix::from_row_slice(spec.ny, spec.nx, &flat);

    let mut warnings = Vec::new();
    let spacing = WignerGrid::spacing(&x_axis).max(WignerGrid::spacing(&y_axis));
    if spacing > MAX_GRID_SPACING {
        warnings.push(format!(
            "grid spacing {spacing:.3} exceeds {MAX_GRID_SPACING}"
        ));
    }
    let w_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let border = (0..spec.nx)
        .flat_map(|ix| [values[(0, ix)], values[(spec.ny - 1, ix)]])
        .chain((0..spec.ny).flat_map(|iy| [values[(iy, 0)], values[(iy, spec.nx - 1)]]))
        .map(f64::abs)
        .fold(0.0, f64::max);
    if spec.nx >= 3 && spec.ny >= 3 && w_max > 0.0 && border > 1e-3 * w_max {
        warnings.push(format!(
            "grid does not cover the state: |W| on the border reaches {:.2e} of the maximum",
            border / w_max
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(WignerGrid {
        x_axis,
        y_axis,
        values,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityReport {
    pub w_min: f64,
    pub w_max: f64,
    /// max(-w_min, 0) / w_max.
    pub ratio: f64,
    pub location_min: (f64, f64),
}

pub fn negativity_metrics(grid: &WignerGrid) -> Result<NegativityReport> {
    if grid.values.is_empty() {
        return Err(Error::InvalidParameter("empty Wigner grid".into()));
    }
    let (mut w_min, mut w_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut location_min = (0.0, 0.0);
    for iy in 0..grid.y_axis.len() {
        for ix in 0..grid.x_axis.len() {
            let w = grid.get(ix, iy);
            if w < w_min {
                w_min = w;
                location_min = (grid.x_axis[ix], grid.y_axis[iy]);
            }
            w_max = w_max.max(w);
        }
    }
    let ratio = if w_max > 0.0 { (-w_min).max(0.0) / w_max } else { 0.0 };
    Ok(NegativityReport {
        w_min,
        w_max,
        ratio,
        location_min,
    })
}

/// Diagonal of rho.
pub fn phonon_populations(rho: &MotionalDensity) -> Vec<f64> {
    rho.matrix().diagonal().iter().map(|z| z.re).collect()
}

/// (P(g), P(e)).
pub fn internal_populations(state: &SpinMotionState) -> (f64, f64) {
    let d = state.motion_dim();
    let amps = state.amplitudes();
    let pg: f64 = amps.rows(0, d).iter().map(|z| z.norm_sqr()).sum();
    let pe: f64 = amps.rows(d, d).iter().map(|z| z.norm_sqr()).sum();
    (pg, pe)
}
