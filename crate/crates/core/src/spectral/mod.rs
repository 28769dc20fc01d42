//! Periodic spatial grids, fields with spectral access, the fractional heat
//! semigroup as a Fourier multiplier, and discrete Lebesgue norms.
//!
//! The box is `[-L, L)^N` with `n` points per axis; `x_j = -L + j dx`. Spectra
//! use the unnormalized forward DFT over the row-major point index, so the
//! coefficient at FFT index `k` multiplies `exp(i xi_k (x + L))` with
//! `xi_k = pi k / L` (signed `k`).

mod io;
pub mod kernel;
pub mod smoothing;

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    dim: usize,
    half_period: f64,
    points: usize,
}

impl SpatialGrid {
    pub fn new(dim: usize, half_period: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("spatial dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(half_period > 0.0 && half_period.is_finite()) {
            return Err(invalid(format!("half-period must be positive, got {half_period}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(invalid(format!("points per axis must be a power of two >= 4, got {points}")));
        }
        Ok(Self { dim, half_period, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_period / self.points as f64
    }

    /// Volume element `dx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Per-axis indices of a flat (row-major) index; unused axes are 0.
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let n = self.points;
        let mut out = [0; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_period + index as f64 * self.dx()
    }

    /// Physical coordinates of a flat index; unused axes are 0.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Flat index of the grid point at the origin.
    pub fn origin_index(&self) -> usize {
        let half = self.points / 2;
        (0..self.dim).fold(0, |acc, _| acc * self.points + half)
    }

    /// Signed wavenumber of an FFT index along one axis.
    pub fn wavenumber(&self, index: usize) -> i64 {
        let n = self.points as i64;
        let k = index as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn signed_wavenumbers(&self, flat: usize) -> [i64; 3] {
        let idx = self.axis_indices(flat);
        let mut out = [0; 3];
        for axis in 0..self.dim {
            out[axis] = self.wavenumber(idx[axis]);
        }
        out
    }

    /// `|xi|` for a flat spectral index.
    pub fn frequency_norm(&self, flat: usize) -> f64 {
        let scale = std::f64::consts::PI / self.half_period;
        let k = self.signed_wavenumbers(flat);
        let sq: i64 = k.iter().map(|k| k * k).sum();
        scale * (sq as f64).sqrt()
    }

    /// Eigenvalues `|xi|^theta` of the fractional Laplacian, in FFT layout.
    pub fn symbol(&self, theta: f64) -> Vec<f64> {
        (0..self.len()).map(|k| self.frequency_norm(k).powf(theta)).collect()
    }

    /// Flat FFT index for per-axis signed wavenumbers.
    pub fn spectral_index(&self, k: [i64; 3]) -> usize {
        let n = self.points as i64;
        (0..self.dim).fold(0usize, |acc, axis| acc * self.points + k[axis].rem_euclid(n) as usize)
    }

    fn check_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform(grid: &SpatialGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let total = data.len();
    // Axis `a` has stride n^(dim - 1 - a); the last axis is contiguous.
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                fft.process(chunk);
            }
            continue;
        }
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[start + i * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Unnormalized forward DFT of a complex array on `grid`.
pub fn forward(grid: &SpatialGrid, data: &mut [Complex64]) {
    transform(grid, data, false);
}

/// Inverse DFT including the `1 / n^N` factor.
pub fn inverse(grid: &SpatialGrid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!("field needs {} values, got {}", grid.len(), values.len())));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("field value at index {pos} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: SpatialGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at the grid points; `f` receives `N` coordinates.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(&grid.point(j)[..grid.dim()])).collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: SpatialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward(&self.grid, &mut data);
        data
    }

    /// Inverse transform of `spectrum`, keeping the real part. Returns the
    /// field and the largest discarded imaginary magnitude.
    pub fn from_spectrum(grid: SpatialGrid, mut spectrum: Vec<Complex64>) -> (Self, f64) {
        inverse(&grid, &mut spectrum);
        let residue = spectrum.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let values = spectrum.into_iter().map(|c| c.re).collect();
        (Self { grid, values }, residue)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, c: f64) -> Field {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)
    }
}

/// Per-frequency factors `exp(-t |xi|^theta)` in FFT layout.
#[derive(Debug, Clone)]
pub struct SemigroupMultiplier {
    theta: f64,
    t: f64,
    factors: Vec<f64>,
}

impl SemigroupMultiplier {
    pub fn new(grid: &SpatialGrid, theta: f64, t: f64) -> Result<Self> {
        check_theta(theta)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("semigroup time must be non-negative, got {t}")));
        }
        let factors = grid.symbol(theta).into_iter().map(|lambda| (-t * lambda).exp()).collect();
        Ok(Self { theta, t, factors })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn apply_spectrum(&self, spectrum: &mut [Complex64]) {
        for (c, f) in spectrum.iter_mut().zip(&self.factors) {
            *c *= *f;
        }
    }

    pub fn apply(&self, u: &Field) -> Field {
        if self.t == 0.0 {
            return u.clone();
        }
        let mut spec = u.spectrum();
        self.apply_spectrum(&mut spec);
        Field::from_spectrum(u.grid, spec).0
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("theta must be positive, got {theta}")))
    }
}

/// `exp(-t (-Delta)^{theta/2}) u` on the periodic box.
pub fn apply_semigroup(u: &Field, t: f64, theta: f64) -> Result<Field> {
    Ok(SemigroupMultiplier::new(u.grid(), theta, t)?.apply(u))
}

/// `(dx^N sum_j |u_j|^q)^{1/q}`, or `max_j |u_j|` for `q = inf`.
pub fn lebesgue_norm(u: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(invalid(format!("Lebesgue exponent must be >= 1, got {q}")));
    }
    Ok(norm_unchecked(u.grid(), u.values(), q))
}

pub(crate) fn norm_unchecked(grid: &SpatialGrid, values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let vol = grid.cell_volume();
    if q == 1.0 {
        return vol * values.iter().map(|v| v.abs()).sum::<f64>();
    }
    if q == 2.0 {
        return (vol * values.iter().map(|v| v * v).sum::<f64>()).sqrt();
    }
    // Scale by the max to keep |u|^q in range for large q.
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|v| (v.abs() / peak).powf(q)).sum();
    peak * (vol * sum).powf(1.0 / q)
}

/// `1/q` with `1/inf = 0`.
pub(crate) fn reciprocal(q: f64) -> f64 {
    if q.is_infinite() {
        0.0
    } else {
        1.0 / q
    }
}
