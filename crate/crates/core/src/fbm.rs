//! One-dimensional fractional Brownian motion: covariance, Volterra kernel,
//! exact and kernel-based samplers, and Wiener integrals of deterministic
//! step functions.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::gauss::CovarianceFactor;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(invalid(format!("Hurst parameter must lie in (0, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstParameter {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<HurstParameter> for f64 {
    fn from(h: HurstParameter) -> f64 {
        h.0
    }
}

/// Uniform grid `t_i = i T / M`, `i = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("time horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(invalid("time grid needs at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub hurst: HurstParameter,
    pub seed: u64,
}

impl FbmPath {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}

/// `E[B(t) B(s)] = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_covariance(s: f64, t: f64, hurst: HurstParameter) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(invalid(format!("covariance needs non-negative times, got ({s}, {t})")));
    }
    let two_h = 2.0 * hurst.value();
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Normalizing constant of the Volterra kernel.
pub fn c_h(hurst: HurstParameter) -> f64 {
    let h = hurst.value();
    if h == 0.5 {
        return 1.0;
    }
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

// Panel counts for the two product-integration passes combined by Richardson
// extrapolation. The leading error term is quadratic in the log-mesh width.
const KERNEL_PANELS: usize = 512;

/// `int_s^t (r - s)^{alpha - 1} r^{alpha} dr` with `alpha = H - 1/2 > 0`.
///
/// The weight `u^{alpha - 1}`, `u = r - s`, is integrated exactly against a
/// piecewise-linear interpolant of `r^alpha` on a grid uniform in `log r`.
fn kernel_integral(t: f64, s: f64, alpha: f64, panels: usize) -> f64 {
    let log_ratio = (t / s).ln();
    let mut total = 0.0;
    let mut u_lo = 0.0;
    let mut f_lo = s.powf(alpha);
    for k in 1..=panels {
        let r_hi = if k == panels { t } else { s * (log_ratio * k as f64 / panels as f64).exp() };
        let u_hi = r_hi - s;
        let f_hi = r_hi.powf(alpha);
        let h = u_hi - u_lo;
        // m0 = int u^{alpha-1}, m1 = int u^{alpha-1} (u - u_lo)
        let (m0, m1) = if u_lo == 0.0 {
            let m0 = u_hi.powf(alpha) / alpha;
            (m0, u_hi.powf(alpha + 1.0) / (alpha + 1.0))
        } else {
            let lr = (u_hi / u_lo).ln();
            let m0 = u_lo.powf(alpha) * (alpha * lr).exp_m1() / alpha;
            let m_alpha = u_lo.powf(alpha + 1.0) * ((alpha + 1.0) * lr).exp_m1() / (alpha + 1.0);
            (m0, m_alpha - u_lo * m0)
        };
        total += f_lo * m0 + (f_hi - f_lo) / h * m1;
        u_lo = u_hi;
        f_lo = f_hi;
    }
    total
}

/// Volterra kernel `K^H(t, s)` of the Wiener representation `B(t) = int_0^t K(t, s) dW(s)`,
/// for `H >= 1/2`:
///
/// `K(t, s) = c_H (H - 1/2) s^{1/2 - H} int_s^t (r - s)^{H - 3/2} r^{H - 1/2} dr`,
///
/// and `K = 1` at `H = 1/2`.
pub fn volterra_kernel(t: f64, s: f64, hurst: HurstParameter) -> Result<f64> {
    if !(s > 0.0 && s < t) {
        return Err(invalid(format!("kernel needs 0 < s < t, got s = {s}, t = {t}")));
    }
    let h = hurst.value();
    if h < 0.5 {
        return Err(Error::Unsupported(format!("Volterra kernel is only available for H >= 1/2, got {h}")));
    }
    if h == 0.5 {
        return Ok(1.0);
    }
    let alpha = h - 0.5;
    let coarse = kernel_integral(t, s, alpha, KERNEL_PANELS);
    let fine = kernel_integral(t, s, alpha, 2 * KERNEL_PANELS);
    let integral = (4.0 * fine - coarse) / 3.0;
    Ok(c_h(hurst) * alpha * s.powf(-alpha) * integral)
}

fn check_seed_path(grid: &TimeGrid, values: &[f64]) {
    debug_assert_eq!(values.len(), grid.steps() + 1);
    debug_assert_eq!(values[0], 0.0);
}

/// Exact sampler: Cholesky factor of the covariance of `(B(t_1), ..., B(t_M))`.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: TimeGrid,
    hurst: HurstParameter,
    factor: CovarianceFactor,
}

impl CholeskySampler {
    pub fn new(grid: TimeGrid, hurst: HurstParameter) -> Result<Self> {
        let nodes = grid.nodes();
        let m = grid.steps();
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let c = fbm_covariance(nodes[i + 1], nodes[j + 1], hurst)?;
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let factor = CovarianceFactor::new(cov)
            .map_err(|e| Error::Factorization(format!("fBm covariance on {m} nodes (H = {}): {e}", hurst.value())))?;
        Ok(Self { grid, hurst, factor })
    }

    pub fn sample(&self, seed: u64) -> FbmPath {
        self.sample_replica(seed, 0)
    }

    /// Path drawn from stream `replica` of `seed`; replica 0 is [`Self::sample`].
    pub fn sample_replica(&self, seed: u64, replica: u64) -> FbmPath {
        let mut rng = rng::stream(seed, replica);
        let z = rng::normals(&mut rng, self.grid.steps());
        let mut values = Vec::with_capacity(self.grid.steps() + 1);
        values.push(0.0);
        values.extend(self.factor.correlate(&z));
        check_seed_path(&self.grid, &values);
        FbmPath { grid: self.grid, values, hurst: self.hurst, seed }
    }
}

pub fn sample_fbm_cholesky(grid: TimeGrid, hurst: HurstParameter, seed: u64) -> Result<FbmPath> {
    Ok(CholeskySampler::new(grid, hurst)?.sample(seed))
}

/// Kernel-based sampler `B(t_i) = sum_{j<i} K(t_i, m_j) Y_j` with `m_j` the
/// midpoint of cell `j`.
///
/// Each cell is driven by `Y_j = int_{cell j} (u / m_j)^{1/2 - H} dW(u)`, a
/// centered normal with variance `int_{cell j} (u / m_j)^{1 - 2H} du`. The
/// weight carries the `s^{1/2 - H}` singularity of the kernel at the origin,
/// which plain increments `dW_j` would resolve only to `O(dt^{2 - 2H})`. At
/// `H = 1/2` the weight is 1 and `Y_j` is the Wiener increment.
#[derive(Debug, Clone)]
pub struct VolterraSampler {
    grid: TimeGrid,
    hurst: HurstParameter,
    // row i - 1 holds K(t_i, m_j) for j < i
    kernel: Vec<Vec<f64>>,
    cell_std: Vec<f64>,
}

impl VolterraSampler {
    pub fn new(grid: TimeGrid, hurst: HurstParameter) -> Result<Self> {
        let h = hurst.value();
        if h < 0.5 {
            return Err(Error::Unsupported(format!(
                "kernel sampler requires H >= 1/2 (got {h}); use the Cholesky sampler"
            )));
        }
        let dt = grid.dt();
        let nodes = grid.nodes();
        let mids: Vec<f64> = (0..grid.steps()).map(|j| nodes[j] + 0.5 * dt).collect();
        let kernel = (1..=grid.steps())
            .into_par_iter()
            .map(|i| mids[..i].iter().map(|&m| volterra_kernel(nodes[i], m, hurst)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let cell_std = (0..grid.steps())
            .map(|j| {
                if h == 0.5 {
                    return dt.sqrt();
                }
                let p = 2.0 - 2.0 * h;
                let var = (nodes[j + 1].powf(p) - nodes[j].powf(p)) / (p * mids[j].powf(1.0 - 2.0 * h));
                var.sqrt()
            })
            .collect();
        Ok(Self { grid, hurst, kernel, cell_std })
    }

    pub fn sample(&self, seed: u64) -> FbmPath {
        self.sample_replica(seed, 0)
    }

    /// Path drawn from stream `replica` of `seed`; replica 0 is [`Self::sample`].
    pub fn sample_replica(&self, seed: u64, replica: u64) -> FbmPath {
        let mut rng = rng::stream(seed, replica);
        let z = rng::normals(&mut rng, self.grid.steps());
        let drive: Vec<f64> = z.iter().zip(&self.cell_std).map(|(z, sd)| sd * z).collect();
        let mut values = Vec::with_capacity(self.grid.steps() + 1);
        values.push(0.0);
        for row in &self.kernel {
            values.push(row.iter().zip(&drive).fold(0.0, |acc, (k, y)| acc + k * y));
        }
        check_seed_path(&self.grid, &values);
        FbmPath { grid: self.grid, values, hurst: self.hurst, seed }
    }
}

pub fn sample_fbm_volterra(grid: TimeGrid, hurst: HurstParameter, seed: u64) -> Result<FbmPath> {
    Ok(VolterraSampler::new(grid, hurst)?.sample(seed))
}

/// Plain Wiener random walk `W(t_i) = sum_{j<i} sqrt(dt) z_j` from the same
/// normal stream the fBm samplers consume.
pub fn sample_wiener(grid: TimeGrid, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, 0);
    let z = rng::normals(&mut rng, grid.steps());
    let sd = grid.dt().sqrt();
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut acc = 0.0;
    values.push(acc);
    for z in z {
        acc += sd * z;
        values.push(acc);
    }
    values
}

/// Piecewise-constant function on `[breaks[0], breaks[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(invalid("step function needs one more breakpoint than values"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("step function breakpoints must be strictly increasing"));
        }
        if breaks[0] < 0.0 {
            return Err(invalid("step function must live on [0, T]"));
        }
        Ok(Self { breaks, values })
    }

    /// `c * 1_{[a, b]}` viewed as a function on `[0, horizon]`.
    pub fn indicator(a: f64, b: f64, horizon: f64, c: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= horizon) {
            return Err(invalid(format!("indicator [{a}, {b}] must sit inside [0, {horizon}]")));
        }
        let mut breaks = vec![0.0];
        let mut values = Vec::new();
        if a > 0.0 {
            breaks.push(a);
            values.push(0.0);
        }
        breaks.push(b);
        values.push(c);
        if b < horizon {
            breaks.push(horizon);
            values.push(0.0);
        }
        Self::new(breaks, values)
    }

    /// Samples `f` at cell midpoints of a uniform grid.
    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let breaks = grid.nodes();
        let values = breaks.windows(2).map(|w| f(0.5 * (w[0] + w[1]))).collect();
        Self { breaks, values }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn value_at(&self, x: f64) -> f64 {
        if x < self.breaks[0] || x >= *self.breaks.last().unwrap() {
            return 0.0;
        }
        let idx = self.breaks.partition_point(|&b| b <= x) - 1;
        self.values[idx]
    }
}

/// Covariance of the fBm increments over `[a0, a1]` and `[b0, b1]`, i.e.
/// `H(2H-1) int int |t - s|^{2H-2}` over the rectangle, in closed form.
pub(crate) fn increment_covariance(a0: f64, a1: f64, b0: f64, b1: f64, two_h: f64) -> f64 {
    0.5 * ((a1 - b0).abs().powf(two_h) + (a0 - b1).abs().powf(two_h)
        - (a1 - b1).abs().powf(two_h)
        - (a0 - b0).abs().powf(two_h))
}

/// `H(2H-1) int_0^T int_0^T f(s) g(t) |t - s|^{2H-2} ds dt` for step functions.
///
/// Both functions are refined to a common partition, and the singular weight
/// is integrated exactly over each pair of cells.
pub fn fbm_inner_product(f: &StepFunction, g: &StepFunction, horizon: f64, hurst: HurstParameter) -> Result<f64> {
    let h = hurst.value();
    if h <= 0.5 {
        return Err(Error::Unsupported(format!("inner-product formula requires H > 1/2, got {h}")));
    }
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    let mut cuts: Vec<f64> = f
        .breaks
        .iter()
        .chain(&g.breaks)
        .copied()
        .chain([0.0, horizon])
        .filter(|&x| (0.0..=horizon).contains(&x))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let cells: Vec<(f64, f64, f64, f64)> = cuts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[0], w[1], f.value_at(mid), g.value_at(mid))
        })
        .collect();
    let two_h = 2.0 * h;
    let mut total = 0.0;
    for &(a0, a1, fa, _) in &cells {
        if fa == 0.0 {
            continue;
        }
        for &(b0, b1, _, gb) in &cells {
            if gb != 0.0 {
                total += fa * gb * increment_covariance(a0, a1, b0, b1, two_h);
            }
        }
    }
    Ok(total)
}
